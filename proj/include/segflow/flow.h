#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <ostream>
#include <vector>

#include "segflow/backbone.h"
#include "segflow/conditioning.h"
#include "segflow/matrix.h"
#include "segflow/rng.h"

namespace segflow {

// x_t = (1 - t) x0 + t x1.
LatentSequence Interpolate(const LatentSequence& x0, const LatentSequence& x1, double t);
// u = x1 - x0 (independent of t).
LatentSequence TargetVelocity(const LatentSequence& x0, const LatentSequence& x1);

// One training pair: a data sample x1 and its encoded conditioning.
struct TrainExample {
  LatentSequence x1;
  ConditioningBundle cond;
};

using TrainBatch = std::vector<TrainExample>;

// Differentiable velocity function used by the loss.
using VelocityFn =
    std::function<Tensor(const Tensor& x_t, const ConditioningBundle& cond, double t)>;

// The random quantities of one loss evaluation for one batch element.
struct CfmDraw {
  double t = 0.0;
  LatentSequence x0;
  bool drop_global = false;
  bool drop_segment = false;
  bool drop_lyrics = false;
};

// Draws t ~ U(0,1), x0 ~ N(0, I) and the dropout flags for each element.
std::vector<CfmDraw> DrawCfm(const TrainBatch& batch, const DropoutProbabilities& p, Rng& rng);

// Mean over the batch of mse(v(x_t), x1 - x0) for fixed draws.
Tensor CfmLossWithDraws(const VelocityFn& v, const TrainBatch& batch,
                        const std::vector<CfmDraw>& draws);

Tensor CfmLoss(const VelocityFn& v, const TrainBatch& batch, const DropoutProbabilities& p,
               Rng& rng);
Tensor CfmLoss(const VelocityModel& model, const TrainBatch& batch,
               const DropoutProbabilities& p, Rng& rng);

struct TrainConfig {
  std::size_t steps = 3000;
  std::size_t batch_size = 4;
  double learning_rate = 1e-3;
  double p_drop_global = 0.2;
  double p_drop_segment = 0.2;
  double p_drop_lyrics = 0.2;
  double max_grad_norm = 1.0;  // 0 disables clipping
  std::size_t checkpoint_interval = 0;  // 0: final checkpoint only
  bool log_wall_time = false;
  std::uint64_t seed = 0;

  void Validate() const;
  DropoutProbabilities dropout() const {
    return {p_drop_global, p_drop_segment, p_drop_lyrics};
  }
};

struct TrainReport {
  std::vector<double> losses;  // one per step
  std::size_t dropped_global = 0;
  std::size_t dropped_segment = 0;
  std::size_t dropped_lyrics = 0;
  std::size_t elements_seen = 0;

  // Mean of the first / last `window` losses.
  double InitialSmoothedLoss(std::size_t window = 100) const;
  double FinalSmoothedLoss(std::size_t window = 100) const;
};

struct TrainHooks {
  // JSON-lines log, one {"step","loss"[,"wall_ms"]} object per step.
  std::ostream* log = nullptr;
  // Called every checkpoint_interval steps and after the last step.
  std::function<void(std::size_t step, const VelocityModel&)> checkpoint;
};

// Adam on the CFM loss. Batches are drawn uniformly with replacement from
// `dataset` using a stream derived from config.seed. Throws NumericError on
// a non-finite loss, naming the step and the batch indices.
TrainReport Train(VelocityModel& model, const std::vector<TrainExample>& dataset,
                  const TrainConfig& config, const TrainHooks& hooks = {});

}  // namespace segflow
