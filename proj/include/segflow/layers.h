#pragma once

#include <cstddef>
#include <string>

#include "segflow/optim.h"
#include "segflow/rng.h"
#include "segflow/tensor.h"

namespace segflow {

// y = x W + b with W[in x out]. Weights are drawn from
// U(-1/sqrt(in), 1/sqrt(in)); bias starts at zero.
struct Linear {
  Tensor weight;
  Tensor bias;

  Linear() = default;
  Linear(std::size_t in, std::size_t out, Rng& rng, bool zero_init = false);

  std::size_t in_features() const { return weight.rows(); }
  std::size_t out_features() const { return weight.cols(); }

  Tensor Forward(const Tensor& x) const;
  void AppendParameters(ParameterList& out, const std::string& prefix) const;
};

}  // namespace segflow
