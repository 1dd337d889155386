#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "segflow/matrix.h"

namespace segflow {

using Shape = std::vector<std::size_t>;

std::size_t NumElements(const Shape& shape);

namespace detail {

// One recorded value in the computation graph. Operations create a node
// whose `backward` reads `grad` and accumulates into the parents' grads.
struct Node {
  Shape shape;
  std::vector<double> values;
  std::vector<double> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;
};

}  // namespace detail

// Reference-counted handle to a graph node. Copies share storage, like a
// framework tensor; use Clone() for an independent value copy.
class Tensor {
 public:
  Tensor() = default;

  static Tensor Constant(Shape shape, std::vector<double> values);
  static Tensor Zeros(Shape shape);
  static Tensor Parameter(Shape shape, std::vector<double> values);
  static Tensor FromMatrix(const Matrix& m, bool requires_grad = false);
  static Tensor Scalar(double v) { return Constant({1}, {v}); }

  // Builds an op result. The node keeps its parents and backward function
  // only when at least one parent requires a gradient.
  static Tensor FromOp(Shape shape, std::vector<double> values,
                       std::vector<Tensor> parents,
                       std::function<void(detail::Node&)> backward);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t rows() const;
  std::size_t cols() const;
  std::size_t numel() const { return node_->values.size(); }

  std::span<const double> values() const { return node_->values; }
  // Direct write access; only meaningful on leaves (parameters, inputs).
  std::span<double> mutable_values() { return node_->values; }
  double item() const;
  double at(std::size_t r, std::size_t c) const { return node_->values[r * cols() + c]; }

  bool requires_grad() const { return node_->requires_grad; }
  // Leaves only: toggles whether later ops record this tensor.
  void set_requires_grad(bool value);
  bool has_grad() const { return !node_->grad.empty(); }
  std::span<const double> grad() const { return node_->grad; }
  std::span<double> mutable_grad() { return node_->grad; }
  // Zero-filled grad for a requires_grad tensor; clears it otherwise.
  void ZeroGrad();

  bool AllFinite() const;
  Matrix ToMatrix() const;
  Tensor Clone(bool requires_grad) const;

  const std::shared_ptr<detail::Node>& node() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::Node> node_;
};

// Reverse-mode pass from a scalar loss. Leaf gradients accumulate across
// calls; intermediate gradients are recomputed from zero on every call.
void Backward(const Tensor& loss);

}  // namespace segflow
