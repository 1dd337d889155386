#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "segflow/tensor.h"

namespace segflow {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

using ParameterList = std::vector<NamedTensor>;

void ZeroGrads(ParameterList& params);

// Rescales all gradients so their joint L2 norm is at most max_norm.
// Returns the norm before clipping.
double ClipGradNorm(ParameterList& params, double max_norm);

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class AdamState {
 public:
  AdamState(const ParameterList& params, AdamOptions options);

  std::uint64_t step() const { return step_; }
  const AdamOptions& options() const { return options_; }
  const std::vector<std::vector<double>>& first_moments() const { return m_; }
  const std::vector<std::vector<double>>& second_moments() const { return v_; }

  // Bias-corrected Adam update. Gradients are left as-is.
  void Step(ParameterList& params);

 private:
  AdamOptions options_;
  std::uint64_t step_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

}  // namespace segflow
