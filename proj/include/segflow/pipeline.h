#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "segflow/conditioning.h"
#include "segflow/lrc.h"
#include "segflow/windows.h"

namespace segflow {

// Per-song metadata as it flows through the data pipeline. Audio analysis,
// separation, ASR and captioning happen upstream; their results arrive as
// fields here.
struct RecordManifest {
  std::string id;
  double duration = 0.0;       // seconds
  double sampling_rate = 0.0;  // Hz
  int channels = 0;
  bool compression_ok = true;
  bool energy_ok = true;
  std::map<std::string, double> quality_scores;
  std::optional<LrcDocument> lrc;       // timestamped lyrics, when present
  std::vector<std::string> lyric_lines;  // plain lyrics (mirrors lrc texts when present)
  std::optional<std::vector<std::string>> transcript;
  std::vector<StructureEntry> segments;
  std::optional<std::string> global_caption;
  std::map<std::size_t, std::string> segment_captions;

  // duration > 0, sampling_rate > 0, channels >= 1.
  void Validate() const;
};

namespace reason {
inline constexpr const char* kSamplingRate = "sampling-rate";
inline constexpr const char* kDuration = "duration-out-of-range";
inline constexpr const char* kChannels = "channels";
inline constexpr const char* kCompression = "compression";
inline constexpr const char* kEnergy = "energy";
inline constexpr const char* kMissingScore = "missing-score";
inline constexpr const char* kLowQuality = "low-quality";
inline constexpr const char* kBelowMedian = "below-median";
inline constexpr const char* kEditDistance = "edit-distance";
inline constexpr const char* kInvalid = "invalid-record";
inline constexpr const char* kUnverified = "unverified";
}  // namespace reason

struct FilterReport {
  std::vector<std::string> kept;
  std::vector<std::pair<std::string, std::string>> rejected;  // (id, reason)
  std::vector<std::pair<std::string, std::string>> flagged;   // kept with a note
};

// Linear interpolation between closest ranks on the sorted sample
// (h = (n - 1) q). q in [0, 1], values non-empty.
double Quantile(std::vector<double> values, double q);

struct PretrainFilterOptions {
  double min_sampling_rate = 32000.0;  // reject when strictly lower
  double min_duration = 30.0;          // inclusive
  double max_duration = 360.0;         // inclusive
  double drop_lowest_fraction = 0.05;
  // Metric used for the percentile cut; empty means the mean of all of a
  // record's quality scores.
  std::string score_key;
};

// Metadata rules first (sampling rate, duration, compression, energy; the
// first failing rule is the reason), then drop records whose aggregate
// score is strictly below the drop_lowest_fraction quantile of the
// survivors.
FilterReport PretrainFilter(std::span<const RecordManifest> records,
                            const PretrainFilterOptions& options = {});

struct FinetuneFilterOptions {
  double min_sampling_rate = 44000.0;
  int channels = 2;
};

// sampling_rate >= 44 kHz and stereo, then score >= median for every metric
// (medians over the records passing the metadata rules).
FilterReport FinetuneFilter(std::span<const RecordManifest> records,
                            const FinetuneFilterOptions& options = {});

// Levenshtein distance over normalized text divided by the longer length.
double NormalizedEditDistance(std::string_view a, std::string_view b);

// Rejects records whose lyrics are farther than max_normalized_distance from
// the transcript; records without a transcript pass, flagged "unverified".
FilterReport LyricEditFilter(std::span<const RecordManifest> records,
                             double max_normalized_distance = 0.3);

// "[label] caption". Throws ContractError for an empty label and
// ValidationError when the caption already carries a "[...] " label.
std::string AssembleSegmentCaption(std::string_view label, std::string_view raw_caption);

inline constexpr const char* kStartBoundaryText = "This piece is the start of the song.";
inline constexpr const char* kEndBoundaryText = "This piece is the end of the song.";
inline constexpr double kBoundarySeconds = 0.5;

// Adds [0, 0.5) and [total - 0.5, total) boundary segments and trims the
// existing ones so the list stays sorted and non-overlapping; segments that
// would end up with no frame at `frame_rate` are dropped.
PromptSpec InsertBoundaryPrompts(const PromptSpec& spec, double total_duration,
                                 double frame_rate);

struct ScoredSample {
  std::string id;
  double score = 0.0;
};

// Every ordered pair (w, l) with score(w) - score(l) > min_diff and
// score(w) > Q3 of the group, sorted by (w, l).
std::vector<std::pair<std::string, std::string>> DpoPairSelect(
    std::span<const ScoredSample> group, double min_diff);

struct DurationExample {
  std::string id;
  std::string instruction;
  std::string target;
};

struct DurationDataset {
  std::vector<DurationExample> examples;
  std::vector<std::pair<std::string, std::string>> skipped;  // (id, reason)
};

// Instruction prompt for the LRC duration predictor.
std::string RenderDurationInstruction(const std::string& global_description,
                                      std::span<const std::string> segment_descriptions,
                                      std::span<const StructureEntry> structure,
                                      std::span<const std::string> lyrics);

DurationDataset BuildDurationDataset(std::span<const RecordManifest> records);

}  // namespace segflow
