#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "segflow/backbone.h"
#include "segflow/errors.h"
#include "segflow/sampler.h"
#include "support.h"

using namespace segflow;
using segflow::testing::RandomMatrix;

namespace {

struct ConstantField : VelocityField {
  double c;
  explicit ConstantField(double c) : c(c) {}
  Matrix Velocity(const Matrix& x, const ConditioningBundle&, double) const override {
    return Matrix(x.rows(), x.cols(), c);
  }
};

struct DecayField : VelocityField {
  Matrix Velocity(const Matrix& x, const ConditioningBundle&, double) const override {
    Matrix v = x;
    for (double& e : v.data()) e = -e;
    return v;
  }
};

// Distinguishes the three bundles through their content.
struct ConditionSensitiveField : VelocityField {
  Matrix Velocity(const Matrix& x, const ConditioningBundle& b, double t) const override {
    const double g = b.global.values()[0], s = b.segment.values()[0], l = b.lyrics.values()[0];
    Matrix v = x;
    for (std::size_t i = 0; i < v.data().size(); ++i) {
      v.data()[i] = std::sin(x.data()[i] + g) * (1.0 + s) - l * t;
    }
    return v;
  }
};

struct NanField : VelocityField {
  Matrix Velocity(const Matrix& x, const ConditioningBundle&, double t) const override {
    return Matrix(x.rows(), x.cols(), t > 0.3 ? std::numeric_limits<double>::quiet_NaN() : 0.0);
  }
};

ConditionTriple MakeTriple(std::size_t T) {
  const ConditionEncoder enc = ConditionEncoder::WithStubs(4, 4, 3, 1.0);
  PromptSpec spec{"calm", {}, std::nullopt};
  if (T >= 3) spec.segments.push_back({1.0, 3.0, "loud"});
  const LrcDocument doc{{{0.0, "la la"}}, static_cast<double>(T)};
  const auto windows = WindowsFromSegments(spec.segments, 1.0, T);
  return BuildConditionTriple(spec, windows, &doc, T, enc);
}

std::vector<double> Vals(const Tensor& t) { return {t.values().begin(), t.values().end()}; }

}  // namespace

TEST_CASE("guided_velocity identities") {
  Rng rng(61);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix u = RandomMatrix(rng, 4, 3), c = RandomMatrix(rng, 4, 3), n = RandomMatrix(rng, 4, 3);
    CHECK(GuidedVelocity(u, c, n, 1.0, 0.0) == c);
    CHECK(GuidedVelocity(u, c, n, 0.0, 0.0) == u);
    const double s = 2.0 * Uniform01(rng) - 1.0, w = StandardNormal(rng);
    const Matrix base = GuidedVelocity(u, c, n, 3.0, 1.0);
    Matrix us = u, cs = c, ns = n, uw = u, cw = c, nw = n;
    for (std::size_t i = 0; i < u.data().size(); ++i) {
      us.data()[i] *= s, cs.data()[i] *= s, ns.data()[i] *= s;
      uw.data()[i] += w, cw.data()[i] += w, nw.data()[i] += w;
    }
    const Matrix scaled = GuidedVelocity(us, cs, ns, 3.0, 1.0);
    const Matrix shifted = GuidedVelocity(uw, cw, nw, 3.0, 1.0);
    for (std::size_t i = 0; i < base.data().size(); ++i) {
      CHECK(std::abs(scaled.data()[i] - s * base.data()[i]) < 1e-12);
      CHECK(std::abs(shifted.data()[i] - (base.data()[i] + w)) < 1e-12);
      const double eq4 = u.data()[i] + 3.0 * (c.data()[i] - u.data()[i]) - 1.0 * (n.data()[i] - u.data()[i]);
      CHECK(std::abs(base.data()[i] - eq4) < 1e-12);
    }
  }
  CHECK(GuidedVelocity(Matrix(2, 2, 0.0), Matrix(2, 2, 1.0), Matrix(2, 2, 0.0), 3.0, 1.0) ==
        Matrix(2, 2, 3.0));
  CHECK(GuidedVelocity(Matrix(1, 1, 1.0), Matrix(1, 1, 2.0), Matrix(1, 1, 0.5), 3.0, 1.0) ==
        Matrix(1, 1, 4.5));
  CHECK_THROWS_AS(GuidedVelocity(Matrix(2, 2), Matrix(2, 3), Matrix(2, 2), 3.0, 1.0), DimensionError);
}

TEST_CASE("negative condition construction") {
  const ConditionEncoder enc = ConditionEncoder::WithStubs(4, 4, 3, 1.0);
  const std::size_t T = 6;
  const LrcDocument doc{{{0.0, "la la"}, {3.0, "da"}}, 6.0};
  PromptSpec spec{"calm", {{0.0, 2.0, "same"}, {3.0, 5.0, "same"}}, NegativePrompt{"calm", "same"}};
  const auto windows = WindowsFromSegments(spec.segments, 1.0, T);
  const ConditioningBundle cond = enc.Encode(spec, windows, &doc, T);
  const ConditioningBundle neg = BuildNegativeCondition(spec, windows, T, enc);
  CHECK(Vals(neg.global) == Vals(cond.global));
  CHECK(Vals(neg.segment) == Vals(cond.segment));
  for (double v : neg.lyrics.values()) CHECK(v == 0.0);
  CHECK(neg.lyrics.shape() == cond.lyrics.shape());
  bool lyrics_present = false;
  for (double v : cond.lyrics.values()) lyrics_present = lyrics_present || v != 0.0;
  CHECK(lyrics_present);

  // Defaults replace texts; windows stay where they were.
  spec.negative.reset();
  spec.segments[1].text = "other";
  const ConditioningBundle d = BuildNegativeCondition(spec, windows, T, enc);
  const auto g = enc.global().Embed(kDefaultNegativePrompt.global);
  const auto s = enc.segment().Embed(kDefaultNegativePrompt.segment);
  for (std::size_t f = 0; f < T; ++f) {
    for (std::size_t k = 0; k < 4; ++k) {
      CHECK(d.global.at(f, k) == g[k]);
      const bool in_window = windows[0].contains(f) || windows[1].contains(f);
      CHECK(d.segment.at(f, k) == (in_window ? s[k] : 0.0));
      CHECK((cond.segment.at(f, k) != 0.0) == in_window);
    }
  }

  const PromptSpec bare{"calm", {}, std::nullopt};
  const ConditioningBundle e = BuildNegativeCondition(bare, {}, T, enc);
  for (double v : e.segment.values()) CHECK(v == 0.0);
}

TEST_CASE("unconditional bundle drops everything") {
  const ConditionTriple tr = MakeTriple(5);
  CHECK(tr.unconditional.drop_global);
  CHECK(tr.unconditional.drop_segment);
  CHECK(tr.unconditional.drop_lyrics);
  for (const Tensor* t : {&tr.unconditional.global, &tr.unconditional.segment, &tr.unconditional.lyrics}) {
    for (double v : t->values()) CHECK(v == 0.0);
  }
  CHECK(tr.negative.frames() == 5);
  CHECK(tr.conditional.frames() == 5);
}

TEST_CASE("euler_sample integrates a constant field exactly") {
  const ConditionTriple tr = MakeTriple(5);
  for (std::size_t steps : {1, 3, 16}) {
    GuidanceConfig gc;
    gc.steps = steps;
    gc.seed = 9;
    const Matrix x0 = SampleInitialNoise(gc.seed, 5, 2);
    const Matrix x = EulerSample(ConstantField(0.75), tr, gc, 5, 2);
    for (std::size_t i = 0; i < x.data().size(); ++i) {
      CHECK(std::abs(x.data()[i] - (x0.data()[i] + 0.75)) < 1e-12);
    }
  }
}

TEST_CASE("euler_sample converges at first order on dx/dt = -x") {
  const ConditionTriple tr = MakeTriple(1);
  auto error = [&](std::size_t steps) {
    GuidanceConfig gc;
    gc.cfg = 1.0;
    gc.cfg_n = 0.0;
    gc.steps = steps;
    return std::abs(EulerIntegrate(DecayField(), tr, gc, Matrix(1, 1, 1.0))(0, 0) - std::exp(-1.0));
  };
  for (std::size_t steps : {10, 20, 40}) {
    const double ratio = error(steps) / error(2 * steps);
    CHECK(ratio >= 1.7);
    CHECK(ratio <= 2.3);
  }
}

TEST_CASE("cfg = 1, cfg_n = 0 reproduces conditional-only sampling bit-for-bit") {
  const ConditionTriple tr = MakeTriple(6);
  GuidanceConfig gc;
  gc.cfg = 1.0;
  gc.cfg_n = 0.0;
  gc.steps = 12;
  gc.seed = 4;
  const ConditionSensitiveField field;
  const Matrix guided = EulerSample(field, tr, gc, 6, 3);
  Matrix x = SampleInitialNoise(gc.seed, 6, 3);
  for (std::size_t k = 0; k < gc.steps; ++k) {
    const Matrix v = field.Velocity(x, tr.conditional, static_cast<double>(k) / 12.0);
    for (std::size_t i = 0; i < x.data().size(); ++i) x.data()[i] += (1.0 / 12.0) * v.data()[i];
  }
  CHECK(guided == x);

  GuidanceConfig dflt = gc;
  dflt.cfg = 3.0;
  dflt.cfg_n = 1.0;
  CHECK_FALSE(EulerSample(field, tr, dflt, 6, 3) == guided);
}

TEST_CASE("euler_sample is deterministic, logs each step and aborts on NaN") {
  const ConditionTriple tr = MakeTriple(6);
  GuidanceConfig gc;
  gc.steps = 8;
  gc.seed = 12;
  std::ostringstream l1, l2;
  const ConditionSensitiveField field;
  CHECK(EulerSample(field, tr, gc, 6, 3, &l1) == EulerSample(field, tr, gc, 6, 3, &l2));
  CHECK(l1.str() == l2.str());
  const std::string log = l1.str();
  CHECK(std::count(log.begin(), log.end(), '\n') == 8);
  gc.seed = 13;
  CHECK_FALSE(EulerSample(field, tr, gc, 6, 3) == EulerSample(field, tr, {.seed = 12, }, 6, 3));

  try {
    EulerSample(NanField(), tr, gc, 6, 3);
    FAIL("expected a numeric abort");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("step 3") != std::string::npos);
  }
  gc.steps = 0;
  CHECK_THROWS_AS(EulerSample(field, tr, gc, 6, 3), ContractError);
}

TEST_CASE("a frozen model samples the same through Velocity") {
  ModelConfig c;
  c.d_global = 4;
  c.d_segment = 4;
  c.d_lyrics = 3;
  const VelocityModel m(c, 3);
  const ConditionTriple tr = MakeTriple(6);
  GuidanceConfig gc;
  gc.steps = 4;
  const Matrix a = EulerSample(m, tr, gc, 6, c.d_audio);
  // Zero-initialized head: v = 0, so the sample is the initial noise.
  CHECK(a == SampleInitialNoise(gc.seed, 6, c.d_audio));
}
