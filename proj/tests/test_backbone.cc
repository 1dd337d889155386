#include <doctest.h>

#include <cmath>

#include "segflow/backbone.h"
#include "segflow/errors.h"
#include "segflow/ops.h"
#include "support.h"

using namespace segflow;

namespace {

ModelConfig TinyConfig() {
  ModelConfig c;
  c.n_blocks = 2;
  c.model_width = 8;
  c.n_heads = 2;
  c.ffn_width = 12;
  c.d_global = 3;
  c.d_segment = 3;
  c.d_text = 4;
  c.proj_hidden = 5;
  c.d_lyrics = 2;
  c.d_audio = 3;
  c.d_time = 4;
  return c;
}

ConditioningBundle RandomBundle(Rng& rng, const ModelConfig& c, std::size_t T) {
  ConditioningBundle b;
  b.global = testing::RandomTensor(rng, {T, c.d_global}, false);
  b.segment = testing::RandomTensor(rng, {T, c.d_segment}, false);
  b.lyrics = testing::RandomTensor(rng, {T, c.d_lyrics}, false);
  return b;
}

// Gives the zero-initialized head random weights so every path carries gradient.
void RandomizeAll(VelocityModel& m, Rng& rng) {
  for (auto& p : m.parameters()) {
    for (double& v : p.tensor.mutable_values()) v = 0.6 * (2.0 * Uniform01(rng) - 1.0);
  }
}

Tensor PermuteRows(const Tensor& t, const std::vector<std::size_t>& perm) {
  Matrix m = t.ToMatrix();
  Matrix out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) out(r, c) = m(perm[r], c);
  }
  return Tensor::FromMatrix(out);
}

}  // namespace

TEST_CASE("time embedding") {
  for (double t : {0.0, 0.1, 0.5, 0.77, 1.0}) {
    for (double v : TimeEmbedding(t, 16)) {
      CHECK(v >= -1.0);
      CHECK(v <= 1.0);
    }
  }
  const auto zero = TimeEmbedding(0.0, 16);
  for (std::size_t k = 0; k < 8; ++k) {
    CHECK(zero[2 * k] == 0.0);
    CHECK(zero[2 * k + 1] == 1.0);
  }
  const auto a = TimeEmbedding(0.3, 16), b = TimeEmbedding(0.3 + 1e-9, 16);
  for (std::size_t i = 0; i < 16; ++i) CHECK(std::abs(a[i] - b[i]) < 1e-6);
  // Highest frequency is 1000 rad per unit time.
  CHECK(TimeEmbedding(1e-3, 4)[2] == doctest::Approx(std::sin(1.0)));
  CHECK_THROWS_AS(TimeEmbedding(1.5, 16), ContractError);
  CHECK_THROWS_AS(TimeEmbedding(-0.1, 16), ContractError);
  CHECK_THROWS(TimeEmbedding(0.5, 5));
}

TEST_CASE("model config validation") {
  ModelConfig c;
  CHECK_NOTHROW(c.Validate());
  c.n_heads = 3;
  CHECK_THROWS(c.Validate());
  c = {};
  c.d_time = 5;
  CHECK_THROWS(c.Validate());
}

TEST_CASE("parameter count matches the closed form") {
  CHECK(ParameterCount(ModelConfig{}) == 91944);
  Rng rng(41);
  for (int trial = 0; trial < 10; ++trial) {
    ModelConfig c = TinyConfig();
    c.n_blocks = 1 + UniformIndex(rng, 3);
    c.n_heads = 1 + UniformIndex(rng, 3);
    c.model_width = c.n_heads * (1 + UniformIndex(rng, 4));
    c.ffn_width = 1 + UniformIndex(rng, 9);
    c.proj_hidden = 1 + UniformIndex(rng, 9);
    const VelocityModel m(c, 1);
    std::size_t n = 0;
    for (const auto& p : m.parameters()) n += p.tensor.numel();
    CHECK(n == ParameterCount(c));
  }
  const VelocityModel m(ModelConfig{}, 1);
  std::size_t n = 0;
  for (const auto& p : m.parameters()) n += p.tensor.numel();
  CHECK(n == 91944);
}

TEST_CASE("forward output shape and zero-initialized head") {
  Rng rng(42);
  const ModelConfig c;
  const VelocityModel m(c, 7);
  for (std::size_t T : {1, 7, 64}) {
    const Tensor x = testing::RandomTensor(rng, {T, c.d_audio}, false);
    const Tensor y = m.Forward(x, RandomBundle(rng, c, T), 0.4);
    CHECK(y.shape() == Shape{T, c.d_audio});
    for (double v : y.values()) CHECK(v == 0.0);
  }
  CHECK_THROWS_AS(m.Forward(testing::RandomTensor(rng, {4, 3}, false), RandomBundle(rng, c, 4), 0.1),
                  DimensionError);
  CHECK_THROWS_AS(m.Forward(testing::RandomTensor(rng, {4, c.d_audio}, false), RandomBundle(rng, c, 5), 0.1),
                  DimensionError);
}

TEST_CASE("forward is deterministic and permutation-equivariant") {
  Rng rng(43);
  const ModelConfig c = TinyConfig();
  VelocityModel m(c, 3);
  RandomizeAll(m, rng);
  const std::size_t T = 6;
  const Tensor x = testing::RandomTensor(rng, {T, c.d_audio}, false);
  const ConditioningBundle b = RandomBundle(rng, c, T);
  const Tensor y1 = m.Forward(x, b, 0.3), y2 = m.Forward(x, b, 0.3);
  CHECK(std::vector<double>(y1.values().begin(), y1.values().end()) ==
        std::vector<double>(y2.values().begin(), y2.values().end()));

  for (int trial = 0; trial < 10; ++trial) {
    std::vector<std::size_t> perm(T);
    for (std::size_t i = 0; i < T; ++i) perm[i] = i;
    std::swap(perm[UniformIndex(rng, T)], perm[UniformIndex(rng, T)]);
    ConditioningBundle pb = b;
    pb.global = PermuteRows(b.global, perm);
    pb.segment = PermuteRows(b.segment, perm);
    pb.lyrics = PermuteRows(b.lyrics, perm);
    const Matrix py = m.Forward(PermuteRows(x, perm), pb, 0.3).ToMatrix();
    const Matrix y = y1.ToMatrix();
    for (std::size_t r = 0; r < T; ++r) {
      for (std::size_t col = 0; col < c.d_audio; ++col) {
        CHECK(std::abs(py(r, col) - y(perm[r], col)) < 1e-12);
      }
    }
  }
}

TEST_CASE("attention rows are distributions") {
  Rng rng(44);
  const ModelConfig c;
  VelocityModel m(c, 5);
  RandomizeAll(m, rng);
  ForwardTrace trace;
  const std::size_t T = 12;
  m.Forward(testing::RandomTensor(rng, {T, c.d_audio}, false), RandomBundle(rng, c, T), 0.9, &trace);
  REQUIRE(trace.attention.size() == c.n_blocks);
  for (const auto& block : trace.attention) {
    REQUIRE(block.size() == c.n_heads);
    for (const Matrix& a : block) {
      for (std::size_t r = 0; r < T; ++r) {
        double s = 0.0;
        for (std::size_t k = 0; k < T; ++k) {
          CHECK(a(r, k) >= 0.0);
          s += a(r, k);
        }
        CHECK(std::abs(s - 1.0) < 1e-9);
      }
    }
  }
}

TEST_CASE("end-to-end gradient matches finite differences") {
  Rng rng(45);
  const ModelConfig c = TinyConfig();
  for (int trial = 0; trial < 3; ++trial) {
    VelocityModel m(c, 10 + trial);
    RandomizeAll(m, rng);
    const std::size_t T = 4;
    const Tensor x = testing::RandomTensor(rng, {T, c.d_audio}, false);
    const Tensor target = testing::RandomTensor(rng, {T, c.d_audio}, false);
    const ConditioningBundle b = RandomBundle(rng, c, T);
    std::vector<Tensor> params;
    for (const auto& p : m.parameters()) params.push_back(p.tensor);
    const double err = testing::MaxGradientError(
        [&] { return Mse(m.Forward(x, b, 0.37), target); }, params, 1e-5);
    CHECK(err < 1e-3);
  }
}

TEST_CASE("clone copies parameters") {
  Rng rng(46);
  const ModelConfig c = TinyConfig();
  VelocityModel m(c, 2);
  RandomizeAll(m, rng);
  const VelocityModel frozen = m.Clone(false);
  const auto a = m.parameters(), b = frozen.parameters();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].name == b[i].name);
    CHECK_FALSE(b[i].tensor.requires_grad());
    CHECK(std::vector<double>(a[i].tensor.values().begin(), a[i].tensor.values().end()) ==
          std::vector<double>(b[i].tensor.values().begin(), b[i].tensor.values().end()));
  }
  const Tensor x = testing::RandomTensor(rng, {3, c.d_audio}, false);
  const ConditioningBundle bundle = RandomBundle(rng, c, 3);
  const Tensor y1 = m.Forward(x, bundle, 0.5), y2 = frozen.Forward(x, bundle, 0.5);
  CHECK(std::vector<double>(y1.values().begin(), y1.values().end()) ==
        std::vector<double>(y2.values().begin(), y2.values().end()));
}
