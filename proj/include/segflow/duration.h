#pragma once

#include <optional>
#include <string>
#include <vector>

#include "segflow/lrc.h"
#include "segflow/windows.h"

namespace segflow {

struct DurationHeuristic {
  double base_seconds = 0.4;
  double seconds_per_syllable = 0.35;
  double chorus_factor = 1.1;
  double gap_seconds = 2.0;
};

struct DurationSegment {
  std::string text;  // segment prompt; "chorus" anywhere marks a chorus
  StructureEntry entry;
};

// Input of a duration predictor: plain lyric lines plus the prompts. When
// `segments` is empty all lines form one verse-like lyric segment.
struct DurationRequest {
  std::vector<std::string> lyrics;
  std::string global_prompt;
  std::vector<DurationSegment> segments;
  std::optional<double> total_duration_hint;
};

// Anything that turns lyrics and prompts into a timed LRC document. The
// heuristic below is the built-in implementation.
class DurationPredictor {
 public:
  virtual ~DurationPredictor() = default;
  virtual LrcDocument Predict(const DurationRequest& request) const = 0;
};

// Lines are laid out back to back. A line lasts
//   (base + per_syllable * syllables) * (chorus_factor if in a chorus),
// each lyric segment not preceded by an instrumental entry is preceded by a
// gap, every instrumental entry occupies one gap, and a final gap closes the
// song when it ends on lyrics. A duration hint rescales all times linearly.
class HeuristicDurationPredictor : public DurationPredictor {
 public:
  explicit HeuristicDurationPredictor(DurationHeuristic params = {}) : params_(params) {}
  LrcDocument Predict(const DurationRequest& request) const override;

  double LineDuration(const std::string& line, bool chorus) const;
  const DurationHeuristic& params() const { return params_; }

 private:
  DurationHeuristic params_;
};

LrcDocument PredictDurations(const DurationRequest& request,
                             const DurationHeuristic& params = {});

}  // namespace segflow
