#include "segflow/backbone.h"

#include "segflow/checkpoint.h"

#include <cmath>
#include <string>

#include "segflow/errors.h"
#include "segflow/ops.h"

namespace segflow {
namespace {

Tensor UniformWeight(std::size_t in, std::size_t out, Rng& rng) {
  std::vector<double> w(in * out);
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  for (double& x : w) x = (2.0 * Uniform01(rng) - 1.0) * bound;
  return Tensor::Parameter({in, out}, std::move(w));
}

Tensor Filled(std::size_t n, double v) {
  return Tensor::Parameter({n}, std::vector<double>(n, v));
}

}  // namespace

void ModelConfig::Validate() const {
  if (n_blocks == 0 || model_width == 0 || n_heads == 0 || ffn_width == 0 ||
      d_text == 0 || proj_hidden == 0 || d_audio == 0 || d_time == 0) {
    throw ContractError("model config: widths and counts must be positive");
  }
  if (model_width % n_heads != 0) {
    throw ContractError("model config: model_width must be divisible by n_heads");
  }
  if (d_time % 2 != 0) throw ContractError("model config: d_time must be even");
}

std::size_t ParameterCount(const ModelConfig& c) {
  const std::size_t h = c.proj_hidden, W = c.model_width, F = c.ffn_width;
  const std::size_t proj = (c.d_global + c.d_segment) * h + h + h * h + h + h * c.d_text + c.d_text;
  const std::size_t input = c.layout().width() * W + W;
  const std::size_t block = 4 * W + 4 * W * W + 3 * W * F;
  return proj + input + c.n_blocks * block + 2 * W + W * c.d_audio + c.d_audio;
}

std::vector<double> TimeEmbedding(double t, std::size_t d) {
  if (!(t >= 0.0 && t <= 1.0)) throw ContractError("time_embedding: t outside [0, 1]");
  if (d == 0 || d % 2 != 0) throw ContractError("time_embedding: dimension must be even");
  const std::size_t k_count = d / 2;
  std::vector<double> out(d);
  for (std::size_t k = 0; k < k_count; ++k) {
    const double frac = k_count == 1 ? 0.0 : static_cast<double>(k) / (k_count - 1);
    const double omega = std::pow(1000.0, frac);
    out[2 * k] = std::sin(omega * t);
    out[2 * k + 1] = std::cos(omega * t);
  }
  return out;
}

VelocityModel::VelocityModel(const ModelConfig& config, std::uint64_t seed) : config_(config) {
  config_.Validate();
  Rng rng(seed);
  const std::size_t W = config_.model_width, F = config_.ffn_width;
  text_proj_ = PromptProjection(config_.d_global + config_.d_segment, config_.proj_hidden,
                                config_.d_text, rng);
  in_proj_ = Linear(config_.layout().width(), W, rng);
  for (std::size_t b = 0; b < config_.n_blocks; ++b) {
    Block blk;
    blk.ln1_gain = Filled(W, 1.0);
    blk.ln1_bias = Filled(W, 0.0);
    blk.wq = UniformWeight(W, W, rng);
    blk.wk = UniformWeight(W, W, rng);
    blk.wv = UniformWeight(W, W, rng);
    blk.wo = UniformWeight(W, W, rng);
    blk.ln2_gain = Filled(W, 1.0);
    blk.ln2_bias = Filled(W, 0.0);
    blk.w_gate = UniformWeight(W, F, rng);
    blk.w_up = UniformWeight(W, F, rng);
    blk.w_down = UniformWeight(F, W, rng);
    blocks_.push_back(std::move(blk));
  }
  final_gain_ = Filled(W, 1.0);
  final_bias_ = Filled(W, 0.0);
  head_ = Linear(W, config_.d_audio, rng, /*zero_init=*/true);
}

ParameterList VelocityModel::parameters() const {
  ParameterList out;
  text_proj_.AppendParameters(out, "text_proj");
  in_proj_.AppendParameters(out, "in_proj");
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    const Block& blk = blocks_[b];
    const std::string p = "blocks." + std::to_string(b) + ".";
    out.push_back({p + "ln1.gain", blk.ln1_gain});
    out.push_back({p + "ln1.bias", blk.ln1_bias});
    out.push_back({p + "attn.wq", blk.wq});
    out.push_back({p + "attn.wk", blk.wk});
    out.push_back({p + "attn.wv", blk.wv});
    out.push_back({p + "attn.wo", blk.wo});
    out.push_back({p + "ln2.gain", blk.ln2_gain});
    out.push_back({p + "ln2.bias", blk.ln2_bias});
    out.push_back({p + "ffn.gate", blk.w_gate});
    out.push_back({p + "ffn.up", blk.w_up});
    out.push_back({p + "ffn.down", blk.w_down});
  }
  out.push_back({"final_norm.gain", final_gain_});
  out.push_back({"final_norm.bias", final_bias_});
  head_.AppendParameters(out, "head");
  return out;
}

Tensor VelocityModel::Forward(const Tensor& x_t, const ConditioningBundle& cond, double t,
                              ForwardTrace* trace) const {
  const std::size_t T = x_t.rows();
  if (x_t.rank() != 2 || x_t.cols() != config_.d_audio) {
    throw DimensionError("forward: x_t must be T x d_audio");
  }
  if (cond.global.rows() != T || cond.segment.rows() != T || cond.lyrics.rows() != T ||
      cond.global.cols() != config_.d_global || cond.segment.cols() != config_.d_segment ||
      cond.lyrics.cols() != config_.d_lyrics) {
    throw DimensionError("forward: conditioning shapes do not match the model config");
  }

  const Tensor e_text = text_proj_.Forward(ConcatColumns({cond.global, cond.segment}));
  const std::vector<double> te = TimeEmbedding(t, config_.d_time);
  std::vector<double> time_rows(T * config_.d_time);
  for (std::size_t f = 0; f < T; ++f) std::copy(te.begin(), te.end(), &time_rows[f * te.size()]);
  const Tensor e_t = Tensor::Constant({T, config_.d_time}, std::move(time_rows));

  Tensor h = in_proj_.Forward(AssembleInput(e_text, cond.lyrics, x_t, e_t));

  const std::size_t W = config_.model_width;
  const std::size_t dh = W / config_.n_heads;
  const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));
  for (const Block& blk : blocks_) {
    const Tensor a = LayerNorm(h, blk.ln1_gain, blk.ln1_bias);
    const Tensor q = MatMul(a, blk.wq);
    const Tensor k = MatMul(a, blk.wk);
    const Tensor v = MatMul(a, blk.wv);
    std::vector<Tensor> heads;
    if (trace) trace->attention.emplace_back();
    for (std::size_t hd = 0; hd < config_.n_heads; ++hd) {
      const std::size_t lo = hd * dh, hi = lo + dh;
      const Tensor scores =
          Scale(MatMul(SliceColumns(q, lo, hi), Transpose(SliceColumns(k, lo, hi))), inv_sqrt_dh);
      const Tensor probs = SoftmaxRows(scores);
      if (trace) trace->attention.back().push_back(probs.ToMatrix());
      heads.push_back(MatMul(probs, SliceColumns(v, lo, hi)));
    }
    h = Add(h, MatMul(ConcatColumns(heads), blk.wo));

    const Tensor b = LayerNorm(h, blk.ln2_gain, blk.ln2_bias);
    const Tensor gated = Mul(Silu(MatMul(b, blk.w_gate)), MatMul(b, blk.w_up));
    h = Add(h, MatMul(gated, blk.w_down));
  }
  return head_.Forward(LayerNorm(h, final_gain_, final_bias_));
}

Matrix VelocityModel::Velocity(const Matrix& x, const ConditioningBundle& cond,
                               double t) const {
  return Forward(Tensor::FromMatrix(x), cond, t).ToMatrix();
}

VelocityModel VelocityModel::Clone(bool trainable) const {
  VelocityModel copy(config_, 0);
  ParameterList dst = copy.parameters();
  AssignParameters(dst, parameters());
  for (auto& p : dst) p.tensor.set_requires_grad(trainable);
  return copy;
}

}  // namespace segflow
