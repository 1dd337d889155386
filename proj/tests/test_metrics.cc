#include <doctest.h>

#include <cmath>

#include "segflow/errors.h"
#include "segflow/metrics.h"
#include "segflow/rng.h"
#include "segflow/synthetic.h"
#include "segflow/windows.h"

using namespace segflow;

namespace {

PromptSpec ThreeSegments() {
  const SyntheticTaskSpec task = DefaultSyntheticTask();
  const double r = task.frame_rate;
  PromptSpec p;
  p.global = "warm pop ballad";
  p.segments = {{0.5 / r, 20.5 / r, "pulsing staccato", SegmentKind::kLyric},
                {20.5 / r, 40.5 / r, "swaying groove", SegmentKind::kLyric},
                {40.5 / r, task.Duration(), "slow swell", SegmentKind::kLyric}};
  return p;
}

}  // namespace

TEST_CASE("pearson correlation") {
  const std::vector<double> a{1, 2, 3, 4}, b{2, 4, 6, 8}, c{4, 3, 2, 1}, flat{1, 1, 1, 1};
  CHECK(PearsonCorrelation(a, b) == doctest::Approx(1.0));
  CHECK(PearsonCorrelation(a, c) == doctest::Approx(-1.0));
  CHECK(PearsonCorrelation(a, flat) == 0.0);
  CHECK_THROWS_AS(PearsonCorrelation(a, std::vector<double>{1, 2}), DimensionError);
  Rng rng(81);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> x(2 + UniformIndex(rng, 20)), y(x.size());
    for (double& v : x) v = StandardNormal(rng);
    for (double& v : y) v = StandardNormal(rng);
    const double r = PearsonCorrelation(x, y);
    CHECK(r >= -1.0);
    CHECK(r <= 1.0);
  }
}

TEST_CASE("noise-free synthetic sample scores 1 per segment") {
  SyntheticTaskSpec task = DefaultSyntheticTask();
  task.sigma = 0.0;
  const SyntheticOracleScorer scorer(task);
  const PromptSpec p = ThreeSegments();
  Rng rng(82);
  const LatentSequence x = SynthSample(task, p, rng);
  const auto windows = WindowsFromSegments(p.segments, task.frame_rate, task.T);
  const SegmentScores s = SegmentAlignmentScore(x, p, windows, scorer);
  REQUIRE(s.per_segment.size() == 3);
  for (double v : s.per_segment) CHECK(v == doctest::Approx(1.0));
  CHECK(s.mean == doctest::Approx((s.per_segment[0] + s.per_segment[1] + s.per_segment[2]) / 3.0));

  // Shuffled texts: every segment is scored against a wrong pattern.
  PromptSpec shuffled = p;
  shuffled.segments[0].text = p.segments[1].text;
  shuffled.segments[1].text = p.segments[2].text;
  shuffled.segments[2].text = p.segments[0].text;
  CHECK(SegmentAlignmentScore(x, shuffled, windows, scorer).mean < s.mean - 0.5);

  // Global: self match is maximal.
  const double self = GlobalAlignmentScore(x, p.global, scorer);
  CHECK(self == doctest::Approx(1.0));
  for (const auto& [text, _] : task.global_vocab) {
    if (text != p.global) CHECK(GlobalAlignmentScore(x, text, scorer) < self - 0.5);
  }
  CHECK(GlobalAlignmentScore(x, "unknown words", scorer) == 0.0);
}

TEST_CASE("segment score bookkeeping") {
  const SyntheticTaskSpec task = DefaultSyntheticTask();
  const SyntheticOracleScorer scorer(task);
  PromptSpec one;
  one.global = "warm pop ballad";
  one.segments = {{0.0, task.Duration(), "swaying groove", SegmentKind::kLyric}};
  Rng rng(83);
  const LatentSequence x = SynthSample(task, one, rng);
  const auto w1 = WindowsFromSegments(one.segments, task.frame_rate, task.T);
  const SegmentScores s1 = SegmentAlignmentScore(x, one, w1, scorer);
  REQUIRE(s1.per_segment.size() == 1);
  CHECK(s1.mean == s1.per_segment[0]);

  // Boundary segments are excluded unless asked for.
  PromptSpec b = one;
  b.segments = {{0.0, 1.0, "start", SegmentKind::kBoundary},
                {1.0, task.Duration(), "swaying groove", SegmentKind::kLyric}};
  const auto wb = WindowsFromSegments(b.segments, task.frame_rate, task.T);
  CHECK(SegmentAlignmentScore(x, b, wb, scorer).per_segment.size() == 1);
  CHECK(SegmentAlignmentScore(x, b, wb, scorer, true).per_segment.size() == 2);
  b.segments.pop_back();
  const auto wonly = WindowsFromSegments(b.segments, task.frame_rate, task.T);
  CHECK_THROWS_AS(SegmentAlignmentScore(x, b, wonly, scorer), ContractError);

  // Random latents: every score in [-1, 1], mean is the arithmetic mean.
  for (int trial = 0; trial < 50; ++trial) {
    const PromptSpec p = RandomSyntheticPrompt(task, rng);
    LatentSequence z(task.T, task.d_audio);
    for (double& v : z.data()) v = StandardNormal(rng);
    const auto w = WindowsFromSegments(p.segments, task.frame_rate, task.T);
    const SegmentScores s = SegmentAlignmentScore(z, p, w, scorer);
    double total = 0.0;
    for (double v : s.per_segment) {
      CHECK(v >= -1.0);
      CHECK(v <= 1.0);
      total += v;
    }
    CHECK(s.mean == doctest::Approx(total / static_cast<double>(s.per_segment.size())));
    const double g = GlobalAlignmentScore(z, p.global, scorer);
    CHECK(g >= -1.0);
    CHECK(g <= 1.0);
  }
}

TEST_CASE("ab accuracy") {
  std::vector<AbJudgment> all(10, {AbChoice::kA, AbChoice::kA});
  CHECK(AbAccuracy(all) == 1.0);
  std::vector<AbJudgment> alt;
  for (int i = 0; i < 10; ++i) alt.push_back({AbChoice::kA, i % 2 ? AbChoice::kA : AbChoice::kB});
  CHECK(AbAccuracy(alt) == 0.5);
  Rng rng(84);
  std::vector<AbJudgment> coin;
  for (int i = 0; i < 10000; ++i) {
    coin.push_back({Uniform01(rng) < 0.5 ? AbChoice::kA : AbChoice::kB,
                    Uniform01(rng) < 0.5 ? AbChoice::kA : AbChoice::kB});
  }
  CHECK(std::abs(AbAccuracy(coin) - 0.5) < 0.05);
  CHECK_THROWS_AS(AbAccuracy(std::vector<AbJudgment>{}), ContractError);
}

TEST_CASE("duration mae") {
  const LrcDocument truth = ParseLrc("[00:01.00] one\n[00:03.50] two\n[00:07.25] three\n", 20.0);
  CHECK(DurationMae(truth, truth) == 0.0);
  LrcDocument shifted = truth;
  for (auto& l : shifted.lines) l.timestamp += 1.0;
  CHECK(DurationMae(shifted, truth) == doctest::Approx(1.0));

  Rng rng(85);
  for (int trial = 0; trial < 100; ++trial) {
    LrcDocument p = truth;
    double total = 0.0;
    for (auto& l : p.lines) {
      const double d = 2.0 * Uniform01(rng) - 1.0;
      l.timestamp += d;
      total += std::abs(d);
    }
    CHECK(DurationMae(p, truth) == doctest::Approx(total / 3.0));
  }

  LrcDocument shorter = truth;
  shorter.lines.pop_back();
  CHECK_THROWS_AS(DurationMae(shorter, truth), ContractError);
  LrcDocument renamed = truth;
  renamed.lines[1].text = "other";
  CHECK_THROWS_AS(DurationMae(renamed, truth), ContractError);
}
