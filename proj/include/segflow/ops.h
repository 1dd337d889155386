#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "segflow/tensor.h"

namespace segflow {

inline constexpr double kLayerNormEpsilon = 1e-5;

// a[m x k] * b[k x n].
Tensor MatMul(const Tensor& a, const Tensor& b);
Tensor Transpose(const Tensor& a);

Tensor Add(const Tensor& a, const Tensor& b);
Tensor Sub(const Tensor& a, const Tensor& b);
Tensor Mul(const Tensor& a, const Tensor& b);
Tensor Scale(const Tensor& a, double s);
// x[T x n] + bias[n] on every row.
Tensor AddRowVector(const Tensor& x, const Tensor& bias);

Tensor Silu(const Tensor& x);
// tanh approximation of GELU.
Tensor Gelu(const Tensor& x);

// Softmax over each row of a 2-D tensor.
Tensor SoftmaxRows(const Tensor& x);

Tensor ConcatColumns(std::span<const Tensor> parts);
Tensor ConcatColumns(std::initializer_list<Tensor> parts);
// Columns [begin, end) of x.
Tensor SliceColumns(const Tensor& x, std::size_t begin, std::size_t end);

// Per-row normalization to zero mean / unit variance, then gain * x + bias.
Tensor LayerNorm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                 double epsilon = kLayerNormEpsilon);

Tensor Sum(const Tensor& x);
// Mean of squared differences.
Tensor Mse(const Tensor& pred, const Tensor& target);

}  // namespace segflow
