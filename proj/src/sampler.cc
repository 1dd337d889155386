#include "segflow/sampler.h"

#include <cmath>

#include <json.hpp>

#include "segflow/errors.h"
#include "segflow/rng.h"

namespace segflow {

LatentSequence GuidedVelocity(const LatentSequence& v_u, const LatentSequence& v_c,
                              const LatentSequence& v_n, double cfg, double cfg_n) {
  if (v_u.rows() != v_c.rows() || v_u.cols() != v_c.cols() || v_u.rows() != v_n.rows() ||
      v_u.cols() != v_n.cols()) {
    throw DimensionError("guided_velocity: shape mismatch");
  }
  const double w_u = 1.0 - cfg + cfg_n;
  LatentSequence out(v_u.rows(), v_u.cols());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.data()[i] = w_u * v_u.data()[i] + cfg * v_c.data()[i] - cfg_n * v_n.data()[i];
  }
  return out;
}

ConditioningBundle BuildNegativeCondition(const PromptSpec& spec,
                                          std::span<const SegmentWindow> windows,
                                          std::size_t T, const ConditionEncoder& encoder,
                                          const NegativePrompt& defaults) {
  const NegativePrompt& neg = spec.negative ? *spec.negative : defaults;
  PromptSpec negative = spec;
  negative.global = neg.global;
  for (auto& s : negative.segments) s.text = neg.segment;
  ConditioningBundle bundle = encoder.Encode(negative, windows, nullptr, T);
  bundle.drop_lyrics = true;
  return bundle;
}

ConditionTriple BuildConditionTriple(const PromptSpec& spec,
                                     std::span<const SegmentWindow> windows,
                                     const LrcDocument* doc, std::size_t T,
                                     const ConditionEncoder& encoder,
                                     const NegativePrompt& defaults) {
  ConditionTriple triple;
  triple.conditional = encoder.Encode(spec, windows, doc, T);
  triple.unconditional = DropComponents(triple.conditional, true, true, true);
  triple.negative = BuildNegativeCondition(spec, windows, T, encoder, defaults);
  return triple;
}

LatentSequence SampleInitialNoise(std::uint64_t seed, std::size_t T, std::size_t d_audio) {
  Rng rng(DeriveSeed(seed, "sample.noise"));
  LatentSequence x(T, d_audio);
  for (double& v : x.data()) v = StandardNormal(rng);
  return x;
}

LatentSequence EulerIntegrate(const VelocityField& field, const ConditionTriple& triple,
                              const GuidanceConfig& gc, LatentSequence x, std::ostream* log) {
  if (gc.steps < 1) throw ContractError("euler_sample: steps must be >= 1");
  const double dt = 1.0 / static_cast<double>(gc.steps);
  for (std::size_t k = 0; k < gc.steps; ++k) {
    const double t = static_cast<double>(k) / static_cast<double>(gc.steps);
    const LatentSequence v_c = field.Velocity(x, triple.conditional, t);
    const LatentSequence v_u = field.Velocity(x, triple.unconditional, t);
    const LatentSequence v_n = field.Velocity(x, triple.negative, t);
    const LatentSequence v = GuidedVelocity(v_u, v_c, v_n, gc.cfg, gc.cfg_n);
    double v_sq = 0.0, x_sq = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      x.data()[i] += dt * v.data()[i];
      v_sq += v.data()[i] * v.data()[i];
      x_sq += x.data()[i] * x.data()[i];
    }
    if (!std::isfinite(v_sq) || !std::isfinite(x_sq)) {
      throw NumericError("non-finite sampler state at step " + std::to_string(k));
    }
    if (log) {
      const double n = static_cast<double>(x.size());
      *log << nlohmann::json{{"step", k},
                             {"t", t},
                             {"velocity_rms", std::sqrt(v_sq / n)},
                             {"x_rms", std::sqrt(x_sq / n)}}
                  .dump()
           << '\n';
    }
  }
  return x;
}

LatentSequence EulerSample(const VelocityField& field, const ConditionTriple& triple,
                           const GuidanceConfig& gc, std::size_t T, std::size_t d_audio,
                           std::ostream* log) {
  return EulerIntegrate(field, triple, gc, SampleInitialNoise(gc.seed, T, d_audio), log);
}

}  // namespace segflow
