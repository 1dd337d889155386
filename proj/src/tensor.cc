#include "segflow/tensor.h"

#include <cmath>
#include <numeric>
#include <unordered_set>
#include <utility>

#include "segflow/errors.h"

namespace segflow {

std::size_t NumElements(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

namespace {

// Zero-width dimensions are allowed so that empty channel blocks can take
// part in concatenation.
void CheckShape(const Shape& shape, std::size_t n) {
  if (shape.empty()) throw DimensionError("tensor needs at least one dimension");
  if (NumElements(shape) != n) {
    throw DimensionError("tensor values do not match shape");
  }
}

void CheckFinite(const std::vector<double>& v) {
  for (double x : v) {
    if (!std::isfinite(x)) throw NumericError("non-finite tensor value");
  }
}

}  // namespace

Tensor Tensor::Constant(Shape shape, std::vector<double> values) {
  CheckShape(shape, values.size());
  CheckFinite(values);
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->values = std::move(values);
  return Tensor(std::move(node));
}

Tensor Tensor::Zeros(Shape shape) {
  const std::size_t n = NumElements(shape);
  return Constant(std::move(shape), std::vector<double>(n, 0.0));
}

Tensor Tensor::Parameter(Shape shape, std::vector<double> values) {
  Tensor t = Constant(std::move(shape), std::move(values));
  t.node_->requires_grad = true;
  return t;
}

Tensor Tensor::FromMatrix(const Matrix& m, bool requires_grad) {
  Tensor t = Constant({m.rows(), m.cols()}, m.data());
  t.node_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::FromOp(Shape shape, std::vector<double> values,
                      std::vector<Tensor> parents,
                      std::function<void(detail::Node&)> backward) {
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->values = std::move(values);
  for (const Tensor& p : parents) {
    if (p.requires_grad()) node->requires_grad = true;
  }
  if (node->requires_grad) {
    node->parents.reserve(parents.size());
    for (Tensor& p : parents) node->parents.push_back(std::move(p.node_));
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

std::size_t Tensor::rows() const {
  return rank() == 2 ? node_->shape[0] : 1;
}

std::size_t Tensor::cols() const {
  return rank() == 2 ? node_->shape[1] : node_->shape[0];
}

double Tensor::item() const {
  if (numel() != 1) throw ContractError("item() on a non-scalar tensor");
  return node_->values[0];
}

void Tensor::set_requires_grad(bool value) {
  if (!node_->parents.empty()) throw ContractError("set_requires_grad on a non-leaf tensor");
  node_->requires_grad = value;
}

void Tensor::ZeroGrad() {
  if (node_->requires_grad) {
    node_->grad.assign(node_->values.size(), 0.0);
  } else {
    node_->grad.clear();
  }
}

bool Tensor::AllFinite() const {
  for (double x : node_->values) {
    if (!std::isfinite(x)) return false;
  }
  for (double x : node_->grad) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

Matrix Tensor::ToMatrix() const { return Matrix(rows(), cols(), node_->values); }

Tensor Tensor::Clone(bool requires_grad) const {
  Tensor t = Constant(node_->shape, node_->values);
  t.node_->requires_grad = requires_grad;
  return t;
}

void Backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw ContractError("backward requires a scalar loss");
  }
  if (!loss.requires_grad()) {
    throw ContractError("loss is not connected to any parameter");
  }

  // Iterative post-order DFS gives a topological order (parents first).
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> visited;
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  stack.emplace_back(loss.node().get(), 0);
  visited.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      detail::Node* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) {
        stack.emplace_back(parent, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (detail::Node* node : order) {
    if (node->parents.empty()) {
      if (node->grad.empty()) node->grad.assign(node->values.size(), 0.0);
    } else {
      node->grad.assign(node->values.size(), 0.0);
    }
  }
  loss.node()->grad[0] += 1.0;

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backward) (*it)->backward(**it);
  }
}

}  // namespace segflow
