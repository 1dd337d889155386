#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "segflow/conditioning.h"
#include "segflow/layers.h"
#include "segflow/matrix.h"
#include "segflow/optim.h"
#include "segflow/tensor.h"

namespace segflow {

struct ModelConfig {
  std::size_t n_blocks = 2;
  std::size_t model_width = 64;
  std::size_t n_heads = 4;
  std::size_t ffn_width = 128;
  std::size_t d_global = 32;    // d_g
  std::size_t d_segment = 32;   // d_l
  std::size_t d_text = 32;
  std::size_t proj_hidden = 32;  // hidden width of out_proj
  std::size_t d_lyrics = 16;
  std::size_t d_audio = 8;
  std::size_t d_time = 16;

  InputLayout layout() const { return {d_text, d_lyrics, d_audio, d_time}; }
  void Validate() const;
};

// Closed form:
//   out_proj: (d_g+d_l)*h + h + h*h + h + h*d_text + d_text
//   input projection: D*W + W, with D = d_text+d_lyrics+d_audio+d_t
//   each block: 4W (two layer norms) + 4W^2 (q,k,v,o) + 3*W*F (gated FFN)
//   final norm 2W, head W*d_audio + d_audio
std::size_t ParameterCount(const ModelConfig& config);

// Sinusoidal features (sin(w_k t), cos(w_k t)) for k = 0..d/2-1 with w_k
// geometrically spaced over [1, 1000]. d must be even; t must lie in [0, 1].
std::vector<double> TimeEmbedding(double t, std::size_t d);

// Anything that maps (x_t, conditioning, t) to a velocity of x_t's shape.
class VelocityField {
 public:
  virtual ~VelocityField() = default;
  virtual Matrix Velocity(const Matrix& x, const ConditioningBundle& cond, double t) const = 0;
};

// Optional per-forward diagnostics.
struct ForwardTrace {
  // Per block, per head: T x T row-stochastic attention weights.
  std::vector<std::vector<Matrix>> attention;
};

// Pre-norm transformer over the frame axis: LN -> multi-head self-attention
// -> residual, LN -> gated (SiLU) feed-forward -> residual. No positional
// encoding; frame identity comes from the conditioning.
class VelocityModel : public VelocityField {
 public:
  VelocityModel(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  ParameterList parameters() const;

  // Differentiable forward; x_t is T x d_audio.
  Tensor Forward(const Tensor& x_t, const ConditioningBundle& cond, double t,
                 ForwardTrace* trace = nullptr) const;

  Matrix Velocity(const Matrix& x, const ConditioningBundle& cond, double t) const override;

  // Deep copy. A non-trainable copy records no graph during Forward.
  VelocityModel Clone(bool trainable) const;

 private:
  struct Block {
    Tensor ln1_gain, ln1_bias;
    Tensor wq, wk, wv, wo;
    Tensor ln2_gain, ln2_bias;
    Tensor w_gate, w_up, w_down;
  };

  ModelConfig config_;
  PromptProjection text_proj_;
  Linear in_proj_;
  std::vector<Block> blocks_;
  Tensor final_gain_, final_bias_;
  Linear head_;
};

}  // namespace segflow
