#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace segflow {

inline constexpr double kDefaultLatentFrameRate = 21.5;

struct LrcLine {
  double timestamp = 0.0;  // seconds
  std::string text;

  bool operator==(const LrcLine&) const = default;
};

struct LrcDocument {
  std::vector<LrcLine> lines;
  double total_duration = 0.0;  // seconds

  bool operator==(const LrcDocument&) const = default;
};

// Throws ValidationError unless timestamps are non-negative, non-decreasing
// and below total_duration, total_duration is positive, and no text holds
// a newline.
void ValidateLrc(const LrcDocument& doc);

// Accepts lines of the form "[mm:ss.xx] text" (the space and the text are
// optional); blank lines are skipped. The LRC text does not record the song
// length: pass it when known, otherwise the document ends one centisecond
// after its last onset.
LrcDocument ParseLrc(std::string_view raw,
                     std::optional<double> total_duration = std::nullopt);

// Canonical "[mm:ss.xx] text" lines, each newline-terminated. Timestamps are
// rounded to centiseconds half-to-even.
std::string SerializeLrc(const LrcDocument& doc);

// "[mm:ss.xx]" for a time in seconds.
std::string FormatLrcTimestamp(double seconds);

// floor(t * sampling_rate / downsample).
std::size_t TimeToFrame(double t, double sampling_rate, double downsample);
// floor(t * frame_rate), where frame_rate = sampling_rate / downsample.
std::size_t TimeToFrame(double t, double frame_rate);

// ceil(total_duration * frame_rate).
std::size_t FrameCount(double total_duration, double frame_rate);

}  // namespace segflow
