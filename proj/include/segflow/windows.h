#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "segflow/lrc.h"

namespace segflow {

enum class SegmentKind { kLyric, kInstrumental, kBoundary };

std::string_view ToString(SegmentKind kind);
SegmentKind SegmentKindFromString(std::string_view s);

// A timed prompt: [start, end) in seconds.
struct SegmentSpec {
  double start = 0.0;
  double end = 0.0;
  std::string text;
  SegmentKind kind = SegmentKind::kLyric;

  bool operator==(const SegmentSpec&) const = default;
};

// Each segment must satisfy 0 <= start < end; the list must be sorted and
// non-overlapping. Throws ValidationError otherwise.
void ValidateSegments(std::span<const SegmentSpec> segments);

enum class WindowProvenance { kLyricDerived, kInstrumentalInferred, kBoundary };

// Half-open frame range [frame_start, frame_end).
struct SegmentWindow {
  std::size_t frame_start = 0;
  std::size_t frame_end = 0;
  WindowProvenance provenance = WindowProvenance::kLyricDerived;

  std::size_t length() const { return frame_end - frame_start; }
  bool contains(std::size_t f) const { return f >= frame_start && f < frame_end; }
  bool operator==(const SegmentWindow&) const = default;
};

// One entry of a song structure. Lyric entries own the lyric lines
// [first_line, first_line + line_count); instrumental entries own none.
struct StructureEntry {
  SegmentKind kind = SegmentKind::kLyric;
  std::string label;
  std::size_t first_line = 0;
  std::size_t line_count = 0;
};

struct WindowOptions {
  // Estimated sung length of a lyric segment's final line, used to place the
  // start of a following instrumental segment.
  double tail_base_seconds = 0.4;
  double tail_seconds_per_syllable = 0.35;
};

// Windows for a song structure over T = ceil(total_duration * frame_rate)
// frames. The windows partition [0, T):
//  - a lyric segment starts at its first line's frame and runs to the next
//    lyric segment's first frame (or T);
//  - when instrumental entries sit between two lyric segments (or after the
//    last one) the lyric window instead ends at its final line's onset plus
//    an estimated line length, and the instrumental entries split the gap;
//  - leading instrumental entries split [0, first lyric frame); without one
//    the first lyric window starts at frame 0.
std::vector<SegmentWindow> DeriveWindows(const LrcDocument& doc,
                                         std::span<const StructureEntry> structure,
                                         double frame_rate, std::size_t T,
                                         const WindowOptions& options = {});

// Windows for timed segments:
// [floor(start * frame_rate), floor(end * frame_rate)).
// Throws ContractError for a window that is empty or leaves [0, T).
std::vector<SegmentWindow> WindowsFromSegments(std::span<const SegmentSpec> segments,
                                               double frame_rate, std::size_t T);

}  // namespace segflow
