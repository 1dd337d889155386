#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "segflow/conditioning.h"
#include "segflow/lrc.h"
#include "segflow/matrix.h"
#include "segflow/synthetic.h"
#include "segflow/windows.h"

namespace segflow {

// (latent slice, text) -> similarity in [-1, 1]. Deterministic.
class SimilarityScorer {
 public:
  virtual ~SimilarityScorer() = default;
  virtual double Score(const LatentSequence& latent, std::string_view text) const = 0;
};

double PearsonCorrelation(std::span<const double> a, std::span<const double> b);

// Scorer that knows the synthetic vocabularies. For a segment text it
// correlates the slice's per-frame channel mean with the text's pattern
// (phase anchored at the slice start); for a global text it correlates the
// slice's per-channel mean with the text's offset vector. Unknown texts
// score 0.
class SyntheticOracleScorer : public SimilarityScorer {
 public:
  explicit SyntheticOracleScorer(SyntheticTaskSpec task) : task_(std::move(task)) {}
  double Score(const LatentSequence& latent, std::string_view text) const override;

 private:
  SyntheticTaskSpec task_;
};

LatentSequence SliceFrames(const LatentSequence& latent, const SegmentWindow& window);

struct SegmentScores {
  std::vector<double> per_segment;  // one per scored segment, in order
  double mean = 0.0;
};

// Scores each window's slice against its segment text and averages.
// Boundary segments are skipped unless include_boundary. Throws
// ContractError when nothing is left to average.
SegmentScores SegmentAlignmentScore(const LatentSequence& latent, const PromptSpec& spec,
                                    std::span<const SegmentWindow> windows,
                                    const SimilarityScorer& scorer,
                                    bool include_boundary = false);

double GlobalAlignmentScore(const LatentSequence& latent, std::string_view global_text,
                            const SimilarityScorer& scorer);

enum class AbChoice { kA, kB };

struct AbJudgment {
  AbChoice truth;   // which song has the older singer
  AbChoice judged;
};

double AbAccuracy(std::span<const AbJudgment> judgments);

// Mean absolute onset error in seconds; line counts and normalized texts
// must match.
double DurationMae(const LrcDocument& predicted, const LrcDocument& truth);

}  // namespace segflow
