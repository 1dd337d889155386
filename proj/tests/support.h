#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "segflow/ops.h"
#include "segflow/rng.h"
#include "segflow/tensor.h"

namespace segflow::testing {

inline Tensor RandomTensor(Rng& rng, Shape shape, bool requires_grad, double lo = -1.0,
                           double hi = 1.0) {
  std::vector<double> v(NumElements(shape));
  for (double& x : v) x = lo + (hi - lo) * Uniform01(rng);
  return requires_grad ? Tensor::Parameter(std::move(shape), std::move(v))
                       : Tensor::Constant(std::move(shape), std::move(v));
}

inline Matrix RandomMatrix(Rng& rng, std::size_t r, std::size_t c, double scale = 1.0) {
  Matrix m(r, c);
  for (double& x : m.data()) x = scale * StandardNormal(rng);
  return m;
}

// |a - n| / max(|a|, |n|, floor).
inline double RelativeError(double a, double n, double floor = 1e-6) {
  return std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor});
}

// Largest relative error between Backward's gradients and central finite
// differences (step h) over every element of every input.
inline double MaxGradientError(const std::function<Tensor()>& loss_fn,
                               std::vector<Tensor> inputs, double h = 1e-4,
                               double floor = 1e-6) {
  for (auto& x : inputs) x.ZeroGrad();
  Backward(loss_fn());
  double worst = 0.0;
  for (auto& x : inputs) {
    const std::vector<double> analytic(x.grad().begin(), x.grad().end());
    auto values = x.mutable_values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + h;
      const double up = loss_fn().item();
      values[i] = saved - h;
      const double down = loss_fn().item();
      values[i] = saved;
      worst = std::max(worst, RelativeError(analytic[i], (up - down) / (2.0 * h), floor));
    }
  }
  return worst;
}

// Scalar probe: sum(f(x) * r) for a fixed random r of f(x)'s shape.
inline Tensor Probe(const Tensor& y, const Tensor& r) { return Sum(Mul(y, r)); }

}  // namespace segflow::testing
