#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>

#include "segflow/backbone.h"
#include "segflow/conditioning.h"
#include "segflow/matrix.h"

namespace segflow {

struct GuidanceConfig {
  double cfg = 3.0;
  double cfg_n = 1.0;
  std::size_t steps = 32;
  std::uint64_t seed = 0;
};

struct ConditionTriple {
  ConditioningBundle conditional;
  ConditioningBundle unconditional;
  ConditioningBundle negative;
};

inline const NegativePrompt kDefaultNegativePrompt{"low quality, noisy", "low quality"};

// v = v_u + cfg (v_c - v_u) - cfg_n (v_n - v_u), evaluated as
// (1 - cfg + cfg_n) v_u + cfg v_c - cfg_n v_n so that (cfg, cfg_n) = (1, 0)
// returns v_c and (0, 0) returns v_u bit-for-bit.
LatentSequence GuidedVelocity(const LatentSequence& v_u, const LatentSequence& v_c,
                              const LatentSequence& v_n, double cfg, double cfg_n);

// Lyrics removed; the global text and every segment text replaced by the
// spec's negative prompt (or `defaults`). Windows are those of `spec`.
ConditioningBundle BuildNegativeCondition(const PromptSpec& spec,
                                          std::span<const SegmentWindow> windows,
                                          std::size_t T, const ConditionEncoder& encoder,
                                          const NegativePrompt& defaults = kDefaultNegativePrompt);

// Conditional bundle, its fully dropped counterpart, and the negative one.
ConditionTriple BuildConditionTriple(const PromptSpec& spec,
                                     std::span<const SegmentWindow> windows,
                                     const LrcDocument* doc, std::size_t T,
                                     const ConditionEncoder& encoder,
                                     const NegativePrompt& defaults = kDefaultNegativePrompt);

// Forward Euler from t = 0 (x ~ N(0, I), seeded from gc.seed) to t = 1 on
// the grid t_k = k / steps. Writes one JSON line per step to `log` when
// given. Throws NumericError naming the step on a non-finite state.
LatentSequence EulerSample(const VelocityField& field, const ConditionTriple& triple,
                           const GuidanceConfig& gc, std::size_t T, std::size_t d_audio,
                           std::ostream* log = nullptr);

// Same integration from a caller-supplied start point.
LatentSequence EulerIntegrate(const VelocityField& field, const ConditionTriple& triple,
                              const GuidanceConfig& gc, LatentSequence x,
                              std::ostream* log = nullptr);

// Initial noise used by EulerSample.
LatentSequence SampleInitialNoise(std::uint64_t seed, std::size_t T, std::size_t d_audio);

}  // namespace segflow
