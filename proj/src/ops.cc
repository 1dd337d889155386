#include "segflow/ops.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "segflow/errors.h"

namespace segflow {
namespace {

using detail::Node;

void Require2D(const Tensor& t, const char* op) {
  if (t.rank() != 2) throw DimensionError(std::string(op) + ": expected a 2-D tensor");
}

void RequireSameShape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) throw DimensionError(std::string(op) + ": shape mismatch");
}

// Grad buffer of a parent that needs one, or nullptr.
double* GradOf(Node& self, std::size_t i) {
  Node& p = *self.parents[i];
  if (!p.requires_grad) return nullptr;
  if (p.grad.empty()) p.grad.assign(p.values.size(), 0.0);
  return p.grad.data();
}

template <typename F, typename DF>
Tensor Pointwise(const Tensor& x, F f, DF df) {
  std::vector<double> out(x.numel());
  const auto in = x.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(in[i]);
  return Tensor::FromOp(x.shape(), std::move(out), {x}, [df](Node& self) {
    double* gx = GradOf(self, 0);
    if (!gx) return;
    const auto& xv = self.parents[0]->values;
    for (std::size_t i = 0; i < xv.size(); ++i) gx[i] += self.grad[i] * df(xv[i]);
  });
}

double Sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;

}  // namespace

Tensor MatMul(const Tensor& a, const Tensor& b) {
  Require2D(a, "matmul");
  Require2D(b, "matmul");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) throw DimensionError("matmul: inner dimensions disagree");
  std::vector<double> out(m * n, 0.0);
  const double* av = a.values().data();
  const double* bv = b.values().data();
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = av[i * k + p];
      const double* brow = bv + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
    }
  }
  return Tensor::FromOp({m, n}, std::move(out), {a, b}, [m, k, n](Node& self) {
    const double* g = self.grad.data();
    const double* av = self.parents[0]->values.data();
    const double* bv = self.parents[1]->values.data();
    if (double* ga = GradOf(self, 0)) {
      for (std::size_t i = 0; i < m; ++i) {
        const double* grow = g + i * n;
        for (std::size_t p = 0; p < k; ++p) {
          const double* brow = bv + p * n;
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
          ga[i * k + p] += acc;
        }
      }
    }
    if (double* gb = GradOf(self, 1)) {
      for (std::size_t i = 0; i < m; ++i) {
        const double* grow = g + i * n;
        for (std::size_t p = 0; p < k; ++p) {
          const double aip = av[i * k + p];
          double* gbrow = gb + p * n;
          for (std::size_t j = 0; j < n; ++j) gbrow[j] += aip * grow[j];
        }
      }
    }
  });
}

Tensor Transpose(const Tensor& a) {
  Require2D(a, "transpose");
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<double> out(m * n);
  const auto av = a.values();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = av[i * n + j];
  return Tensor::FromOp({n, m}, std::move(out), {a}, [m, n](Node& self) {
    double* ga = GradOf(self, 0);
    if (!ga) return;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += self.grad[j * m + i];
  });
}

Tensor Add(const Tensor& a, const Tensor& b) {
  RequireSameShape(a, b, "add");
  std::vector<double> out(a.values().begin(), a.values().end());
  const auto bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return Tensor::FromOp(a.shape(), std::move(out), {a, b}, [](Node& self) {
    for (std::size_t p = 0; p < 2; ++p) {
      if (double* g = GradOf(self, p)) {
        for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
      }
    }
  });
}

Tensor Sub(const Tensor& a, const Tensor& b) {
  RequireSameShape(a, b, "sub");
  std::vector<double> out(a.values().begin(), a.values().end());
  const auto bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  return Tensor::FromOp(a.shape(), std::move(out), {a, b}, [](Node& self) {
    if (double* g = GradOf(self, 0)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
    }
    if (double* g = GradOf(self, 1)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] -= self.grad[i];
    }
  });
}

Tensor Mul(const Tensor& a, const Tensor& b) {
  RequireSameShape(a, b, "mul");
  std::vector<double> out(a.numel());
  const auto av = a.values();
  const auto bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return Tensor::FromOp(a.shape(), std::move(out), {a, b}, [](Node& self) {
    const auto& av = self.parents[0]->values;
    const auto& bv = self.parents[1]->values;
    if (double* g = GradOf(self, 0)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * bv[i];
    }
    if (double* g = GradOf(self, 1)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * av[i];
    }
  });
}

Tensor Scale(const Tensor& a, double s) {
  std::vector<double> out(a.values().begin(), a.values().end());
  for (double& v : out) v *= s;
  return Tensor::FromOp(a.shape(), std::move(out), {a}, [s](Node& self) {
    if (double* g = GradOf(self, 0)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += s * self.grad[i];
    }
  });
}

Tensor AddRowVector(const Tensor& x, const Tensor& bias) {
  Require2D(x, "add_row_vector");
  const std::size_t rows = x.rows(), cols = x.cols();
  if (bias.numel() != cols) throw DimensionError("add_row_vector: bias width mismatch");
  std::vector<double> out(x.values().begin(), x.values().end());
  const auto bv = bias.values();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] += bv[c];
  return Tensor::FromOp(x.shape(), std::move(out), {x, bias}, [rows, cols](Node& self) {
    if (double* g = GradOf(self, 0)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
    }
    if (double* g = GradOf(self, 1)) {
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) g[c] += self.grad[r * cols + c];
    }
  });
}

Tensor Silu(const Tensor& x) {
  return Pointwise(
      x, [](double v) { return v * Sigmoid(v); },
      [](double v) {
        const double s = Sigmoid(v);
        return s * (1.0 + v * (1.0 - s));
      });
}

Tensor Gelu(const Tensor& x) {
  return Pointwise(
      x,
      [](double v) {
        return 0.5 * v * (1.0 + std::tanh(kGeluC * (v + kGeluA * v * v * v)));
      },
      [](double v) {
        const double u = kGeluC * (v + kGeluA * v * v * v);
        const double th = std::tanh(u);
        const double du = kGeluC * (1.0 + 3.0 * kGeluA * v * v);
        return 0.5 * (1.0 + th) + 0.5 * v * (1.0 - th * th) * du;
      });
}

Tensor SoftmaxRows(const Tensor& x) {
  Require2D(x, "softmax");
  const std::size_t rows = x.rows(), cols = x.cols();
  std::vector<double> out(rows * cols);
  const auto xv = x.values();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = xv.data() + r * cols;
    double* o = out.data() + r * cols;
    const double mx = *std::max_element(in, in + cols);
    double total = 0.0;
    for (std::size_t c = 0; c < cols; ++c) total += (o[c] = std::exp(in[c] - mx));
    for (std::size_t c = 0; c < cols; ++c) o[c] /= total;
  }
  return Tensor::FromOp(x.shape(), std::move(out), {x}, [rows, cols](Node& self) {
    double* gx = GradOf(self, 0);
    if (!gx) return;
    for (std::size_t r = 0; r < rows; ++r) {
      const double* y = self.values.data() + r * cols;
      const double* g = self.grad.data() + r * cols;
      double dot = 0.0;
      for (std::size_t c = 0; c < cols; ++c) dot += y[c] * g[c];
      for (std::size_t c = 0; c < cols; ++c) gx[r * cols + c] += y[c] * (g[c] - dot);
    }
  });
}

Tensor ConcatColumns(std::span<const Tensor> parts) {
  if (parts.empty()) throw DimensionError("concat: no operands");
  const std::size_t rows = parts.front().rows();
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const Tensor& p : parts) {
    Require2D(p, "concat");
    if (p.rows() != rows) throw DimensionError("concat: leading lengths differ");
    widths.push_back(p.cols());
    total += p.cols();
  }
  std::vector<double> out(rows * total);
  std::size_t offset = 0;
  for (const Tensor& p : parts) {
    const auto pv = p.values();
    const std::size_t w = p.cols();
    for (std::size_t r = 0; r < rows; ++r)
      std::copy_n(pv.data() + r * w, w, out.data() + r * total + offset);
    offset += w;
  }
  std::vector<Tensor> parents(parts.begin(), parts.end());
  return Tensor::FromOp({rows, total}, std::move(out), std::move(parents),
                        [rows, total, widths](Node& self) {
                          std::size_t offset = 0;
                          for (std::size_t p = 0; p < widths.size(); ++p) {
                            const std::size_t w = widths[p];
                            if (double* g = GradOf(self, p)) {
                              for (std::size_t r = 0; r < rows; ++r)
                                for (std::size_t c = 0; c < w; ++c)
                                  g[r * w + c] += self.grad[r * total + offset + c];
                            }
                            offset += w;
                          }
                        });
}

Tensor ConcatColumns(std::initializer_list<Tensor> parts) {
  return ConcatColumns(std::span<const Tensor>(parts.begin(), parts.size()));
}

Tensor SliceColumns(const Tensor& x, std::size_t begin, std::size_t end) {
  Require2D(x, "slice");
  const std::size_t rows = x.rows(), cols = x.cols();
  if (begin > end || end > cols) throw DimensionError("slice: column range out of bounds");
  const std::size_t w = end - begin;
  std::vector<double> out(rows * w);
  const auto xv = x.values();
  for (std::size_t r = 0; r < rows; ++r)
    std::copy_n(xv.data() + r * cols + begin, w, out.data() + r * w);
  return Tensor::FromOp({rows, w}, std::move(out), {x}, [rows, cols, begin, w](Node& self) {
    double* g = GradOf(self, 0);
    if (!g) return;
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < w; ++c) g[r * cols + begin + c] += self.grad[r * w + c];
  });
}

Tensor LayerNorm(const Tensor& x, const Tensor& gain, const Tensor& bias, double epsilon) {
  Require2D(x, "layer_norm");
  const std::size_t rows = x.rows(), d = x.cols();
  if (gain.numel() != d || bias.numel() != d) {
    throw DimensionError("layer_norm: gain/bias width mismatch");
  }
  std::vector<double> normalized(rows * d), inv_std(rows), out(rows * d);
  const auto xv = x.values();
  const auto gv = gain.values();
  const auto bv = bias.values();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = xv.data() + r * d;
    double mean = 0.0;
    for (std::size_t c = 0; c < d; ++c) mean += in[c];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t c = 0; c < d; ++c) var += (in[c] - mean) * (in[c] - mean);
    var /= static_cast<double>(d);
    inv_std[r] = 1.0 / std::sqrt(var + epsilon);
    for (std::size_t c = 0; c < d; ++c) {
      normalized[r * d + c] = (in[c] - mean) * inv_std[r];
      out[r * d + c] = gv[c] * normalized[r * d + c] + bv[c];
    }
  }
  return Tensor::FromOp(
      x.shape(), std::move(out), {x, gain, bias},
      [rows, d, normalized = std::move(normalized), inv_std = std::move(inv_std)](Node& self) {
        const auto& gv = self.parents[1]->values;
        const double* g = self.grad.data();
        if (double* gg = GradOf(self, 1)) {
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < d; ++c) gg[c] += g[r * d + c] * normalized[r * d + c];
        }
        if (double* gb = GradOf(self, 2)) {
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < d; ++c) gb[c] += g[r * d + c];
        }
        if (double* gx = GradOf(self, 0)) {
          const double dn = static_cast<double>(d);
          for (std::size_t r = 0; r < rows; ++r) {
            double mean_dy = 0.0, mean_dy_xhat = 0.0;
            for (std::size_t c = 0; c < d; ++c) {
              const double dy = g[r * d + c] * gv[c];
              mean_dy += dy;
              mean_dy_xhat += dy * normalized[r * d + c];
            }
            mean_dy /= dn;
            mean_dy_xhat /= dn;
            for (std::size_t c = 0; c < d; ++c) {
              const double dy = g[r * d + c] * gv[c];
              gx[r * d + c] +=
                  inv_std[r] * (dy - mean_dy - normalized[r * d + c] * mean_dy_xhat);
            }
          }
        }
      });
}

Tensor Sum(const Tensor& x) {
  double total = 0.0;
  for (double v : x.values()) total += v;
  return Tensor::FromOp({1}, {total}, {x}, [](Node& self) {
    if (double* g = GradOf(self, 0)) {
      const std::size_t n = self.parents[0]->values.size();
      for (std::size_t i = 0; i < n; ++i) g[i] += self.grad[0];
    }
  });
}

Tensor Mse(const Tensor& pred, const Tensor& target) {
  RequireSameShape(pred, target, "mse");
  const auto pv = pred.values();
  const auto tv = target.values();
  const double n = static_cast<double>(pv.size());
  double total = 0.0;
  for (std::size_t i = 0; i < pv.size(); ++i) total += (pv[i] - tv[i]) * (pv[i] - tv[i]);
  return Tensor::FromOp({1}, {total / n}, {pred, target}, [n](Node& self) {
    const auto& pv = self.parents[0]->values;
    const auto& tv = self.parents[1]->values;
    const double scale = 2.0 * self.grad[0] / n;
    if (double* g = GradOf(self, 0)) {
      for (std::size_t i = 0; i < pv.size(); ++i) g[i] += scale * (pv[i] - tv[i]);
    }
    if (double* g = GradOf(self, 1)) {
      for (std::size_t i = 0; i < pv.size(); ++i) g[i] -= scale * (pv[i] - tv[i]);
    }
  });
}

}  // namespace segflow
