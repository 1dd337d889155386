#include "segflow/flow.h"

#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "segflow/errors.h"
#include "segflow/ops.h"
#include "segflow/optim.h"

namespace segflow {
namespace {

void RequireSameShape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(op) + ": shape mismatch");
  }
}

}  // namespace

LatentSequence Interpolate(const LatentSequence& x0, const LatentSequence& x1, double t) {
  RequireSameShape(x0, x1, "interpolate");
  if (!(t >= 0.0 && t <= 1.0)) throw ContractError("interpolate: t outside [0, 1]");
  LatentSequence out(x0.rows(), x0.cols());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.data()[i] = (1.0 - t) * x0.data()[i] + t * x1.data()[i];
  }
  return out;
}

LatentSequence TargetVelocity(const LatentSequence& x0, const LatentSequence& x1) {
  RequireSameShape(x0, x1, "target_velocity");
  LatentSequence out(x0.rows(), x0.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = x1.data()[i] - x0.data()[i];
  return out;
}

std::vector<CfmDraw> DrawCfm(const TrainBatch& batch, const DropoutProbabilities& p, Rng& rng) {
  for (double q : {p.global, p.segment, p.lyrics}) {
    if (!(q >= 0.0 && q <= 1.0)) throw ContractError("dropout probability outside [0, 1]");
  }
  std::vector<CfmDraw> draws;
  draws.reserve(batch.size());
  for (const TrainExample& ex : batch) {
    CfmDraw d;
    d.t = Uniform01(rng);
    d.x0 = LatentSequence(ex.x1.rows(), ex.x1.cols());
    for (double& v : d.x0.data()) v = StandardNormal(rng);
    d.drop_global = Uniform01(rng) < p.global;
    d.drop_segment = Uniform01(rng) < p.segment;
    d.drop_lyrics = Uniform01(rng) < p.lyrics;
    draws.push_back(std::move(d));
  }
  return draws;
}

Tensor CfmLossWithDraws(const VelocityFn& v, const TrainBatch& batch,
                        const std::vector<CfmDraw>& draws) {
  if (batch.empty()) throw ContractError("cfm_loss: empty batch");
  if (draws.size() != batch.size()) throw ContractError("cfm_loss: one draw per element");
  Tensor total;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const TrainExample& ex = batch[i];
    const CfmDraw& d = draws[i];
    const ConditioningBundle cond =
        DropComponents(ex.cond, d.drop_global, d.drop_segment, d.drop_lyrics);
    const Tensor x_t = Tensor::FromMatrix(Interpolate(d.x0, ex.x1, d.t));
    const Tensor u = Tensor::FromMatrix(TargetVelocity(d.x0, ex.x1));
    const Tensor loss = Mse(v(x_t, cond, d.t), u);
    total = total.defined() ? Add(total, loss) : loss;
  }
  return Scale(total, 1.0 / static_cast<double>(batch.size()));
}

Tensor CfmLoss(const VelocityFn& v, const TrainBatch& batch, const DropoutProbabilities& p,
               Rng& rng) {
  return CfmLossWithDraws(v, batch, DrawCfm(batch, p, rng));
}

Tensor CfmLoss(const VelocityModel& model, const TrainBatch& batch,
               const DropoutProbabilities& p, Rng& rng) {
  return CfmLoss(
      [&model](const Tensor& x, const ConditioningBundle& c, double t) {
        return model.Forward(x, c, t);
      },
      batch, p, rng);
}

void TrainConfig::Validate() const {
  if (steps < 1) throw ContractError("train: steps must be >= 1");
  if (batch_size < 1) throw ContractError("train: batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw ContractError("train: learning rate must be positive");
  for (double q : {p_drop_global, p_drop_segment, p_drop_lyrics}) {
    if (!(q >= 0.0 && q <= 1.0)) throw ContractError("train: dropout probability outside [0, 1]");
  }
  if (max_grad_norm < 0.0) throw ContractError("train: max_grad_norm must be >= 0");
}

double TrainReport::InitialSmoothedLoss(std::size_t window) const {
  const std::size_t n = std::min(window, losses.size());
  if (n == 0) return 0.0;
  return std::accumulate(losses.begin(), losses.begin() + n, 0.0) / static_cast<double>(n);
}

double TrainReport::FinalSmoothedLoss(std::size_t window) const {
  const std::size_t n = std::min(window, losses.size());
  if (n == 0) return 0.0;
  return std::accumulate(losses.end() - n, losses.end(), 0.0) / static_cast<double>(n);
}

TrainReport Train(VelocityModel& model, const std::vector<TrainExample>& dataset,
                  const TrainConfig& config, const TrainHooks& hooks) {
  config.Validate();
  if (dataset.empty()) throw ContractError("train: dataset is empty");

  Rng batch_rng(DeriveSeed(config.seed, "train.batches"));
  Rng cfm_rng(DeriveSeed(config.seed, "train.cfm"));
  ParameterList params = model.parameters();
  AdamState adam(params, {.learning_rate = config.learning_rate});
  const auto dropout = config.dropout();
  const auto start = std::chrono::steady_clock::now();

  TrainReport report;
  for (std::size_t step = 1; step <= config.steps; ++step) {
    std::vector<std::size_t> ids(config.batch_size);
    TrainBatch batch;
    for (auto& id : ids) {
      id = UniformIndex(batch_rng, dataset.size());
      batch.push_back(dataset[id]);
    }
    const auto draws = DrawCfm(batch, dropout, cfm_rng);
    for (const auto& d : draws) {
      report.dropped_global += d.drop_global;
      report.dropped_segment += d.drop_segment;
      report.dropped_lyrics += d.drop_lyrics;
    }
    report.elements_seen += draws.size();

    auto abort = [&](const std::string& what) {
      std::ostringstream msg;
      msg << what << " at step " << step << " (batch ids:";
      for (auto id : ids) msg << ' ' << id;
      msg << ')';
      throw NumericError(msg.str());
    };
    Tensor loss;
    try {
      loss = CfmLossWithDraws(
          [&model](const Tensor& x, const ConditioningBundle& c, double t) {
            return model.Forward(x, c, t);
          },
          batch, draws);
    } catch (const NumericError& e) {
      abort(e.what());
    }
    const double value = loss.item();
    if (!std::isfinite(value)) abort("non-finite loss");
    ZeroGrads(params);
    Backward(loss);
    if (config.max_grad_norm > 0.0) ClipGradNorm(params, config.max_grad_norm);
    adam.Step(params);
    report.losses.push_back(value);

    if (hooks.log) {
      nlohmann::json line = {{"step", step}, {"loss", value}};
      if (config.log_wall_time) {
        line["wall_ms"] = std::chrono::duration<double, std::milli>(
                              std::chrono::steady_clock::now() - start)
                              .count();
      }
      *hooks.log << line.dump() << '\n';
    }
    const bool at_interval = config.checkpoint_interval > 0 &&
                             step % config.checkpoint_interval == 0;
    if (hooks.checkpoint && (at_interval || step == config.steps)) {
      hooks.checkpoint(step, model);
    }
  }
  return report;
}

}  // namespace segflow
