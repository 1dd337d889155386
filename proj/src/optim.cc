#include "segflow/optim.h"

#include <cmath>

#include "segflow/errors.h"

namespace segflow {

void ZeroGrads(ParameterList& params) {
  for (auto& p : params) p.tensor.ZeroGrad();
}

double ClipGradNorm(ParameterList& params, double max_norm) {
  double sq = 0.0;
  for (const auto& p : params) {
    for (double g : p.tensor.grad()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (auto& p : params) {
      for (double& g : p.tensor.mutable_grad()) g *= s;
    }
  }
  return norm;
}

AdamState::AdamState(const ParameterList& params, AdamOptions options)
    : options_(options) {
  if (!(options_.learning_rate > 0.0) || !(options_.beta1 > 0.0) ||
      !(options_.beta2 > 0.0) || !(options_.epsilon > 0.0)) {
    throw ContractError("adam: learning rate, betas and epsilon must be positive");
  }
  for (const auto& p : params) {
    m_.emplace_back(p.tensor.numel(), 0.0);
    v_.emplace_back(p.tensor.numel(), 0.0);
  }
}

void AdamState::Step(ParameterList& params) {
  if (params.size() != m_.size()) throw ContractError("adam: parameter list changed");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].tensor.numel() != m_[i].size()) {
      throw ContractError("adam: parameter shape changed for " + params[i].name);
    }
    if (!params[i].tensor.has_grad()) {
      throw ContractError("adam: missing gradient for " + params[i].name);
    }
  }
  ++step_;
  const double b1 = options_.beta1, b2 = options_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto w = params[i].tensor.mutable_values();
    const auto g = params[i].tensor.grad();
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t j = 0; j < w.size(); ++j) {
      m[j] = b1 * m[j] + (1.0 - b1) * g[j];
      v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
      const double m_hat = m[j] / c1;
      const double v_hat = v[j] / c2;
      w[j] -= options_.learning_rate * m_hat / (std::sqrt(v_hat) + options_.epsilon);
    }
  }
}

}  // namespace segflow
