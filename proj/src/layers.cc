#include "segflow/layers.h"

#include <cmath>

#include "segflow/ops.h"

namespace segflow {

Linear::Linear(std::size_t in, std::size_t out, Rng& rng, bool zero_init) {
  std::vector<double> w(in * out, 0.0);
  if (!zero_init) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    for (double& x : w) x = (2.0 * Uniform01(rng) - 1.0) * bound;
  }
  weight = Tensor::Parameter({in, out}, std::move(w));
  bias = Tensor::Parameter({out}, std::vector<double>(out, 0.0));
}

Tensor Linear::Forward(const Tensor& x) const {
  return AddRowVector(MatMul(x, weight), bias);
}

void Linear::AppendParameters(ParameterList& out, const std::string& prefix) const {
  out.push_back({prefix + ".weight", weight});
  out.push_back({prefix + ".bias", bias});
}

}  // namespace segflow
