#include "segflow/metrics.h"

#include <algorithm>
#include <cmath>

#include "segflow/errors.h"
#include "segflow/text.h"

namespace segflow {

double PearsonCorrelation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("pearson: length mismatch");
  const std::size_t n = a.size();
  if (n < 2) return 0.0;
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa <= 0.0 || sbb <= 0.0) return 0.0;
  const double r = sab / std::sqrt(saa * sbb);
  return std::clamp(r, -1.0, 1.0);
}

double SyntheticOracleScorer::Score(const LatentSequence& latent, std::string_view text) const {
  const std::string key(text);
  if (auto it = task_.segment_vocab.find(key); it != task_.segment_vocab.end()) {
    std::vector<double> trace(latent.rows(), 0.0), pattern(latent.rows());
    for (std::size_t f = 0; f < latent.rows(); ++f) {
      for (double v : latent.row(f)) trace[f] += v;
      trace[f] /= static_cast<double>(latent.cols());
      pattern[f] = PatternValue(it->second, f);
    }
    return PearsonCorrelation(trace, pattern);
  }
  if (auto it = task_.global_vocab.find(key); it != task_.global_vocab.end()) {
    if (it->second.size() != latent.cols()) throw DimensionError("oracle scorer: width mismatch");
    std::vector<double> channel_mean(latent.cols(), 0.0);
    for (std::size_t f = 0; f < latent.rows(); ++f) {
      for (std::size_t c = 0; c < latent.cols(); ++c) channel_mean[c] += latent(f, c);
    }
    for (double& v : channel_mean) v /= static_cast<double>(latent.rows());
    return PearsonCorrelation(channel_mean, it->second);
  }
  return 0.0;
}

LatentSequence SliceFrames(const LatentSequence& latent, const SegmentWindow& window) {
  if (window.frame_start >= window.frame_end || window.frame_end > latent.rows()) {
    throw ContractError("slice: window outside the latent");
  }
  LatentSequence out(window.length(), latent.cols());
  for (std::size_t f = 0; f < window.length(); ++f) {
    const auto src = latent.row(window.frame_start + f);
    std::copy(src.begin(), src.end(), out.row(f).begin());
  }
  return out;
}

SegmentScores SegmentAlignmentScore(const LatentSequence& latent, const PromptSpec& spec,
                                    std::span<const SegmentWindow> windows,
                                    const SimilarityScorer& scorer, bool include_boundary) {
  if (windows.size() != spec.segments.size()) {
    throw ContractError("segment_alignment: one window per segment required");
  }
  SegmentScores out;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    if (!include_boundary && spec.segments[i].kind == SegmentKind::kBoundary) continue;
    out.per_segment.push_back(scorer.Score(SliceFrames(latent, windows[i]), spec.segments[i].text));
  }
  if (out.per_segment.empty()) throw ContractError("segment_alignment: mean of no segments");
  double total = 0.0;
  for (double s : out.per_segment) total += s;
  out.mean = total / static_cast<double>(out.per_segment.size());
  return out;
}

double GlobalAlignmentScore(const LatentSequence& latent, std::string_view global_text,
                            const SimilarityScorer& scorer) {
  return scorer.Score(latent, global_text);
}

double AbAccuracy(std::span<const AbJudgment> judgments) {
  if (judgments.empty()) throw ContractError("ab_accuracy: no judgments");
  std::size_t correct = 0;
  for (const auto& j : judgments) correct += j.truth == j.judged;
  return static_cast<double>(correct) / static_cast<double>(judgments.size());
}

double DurationMae(const LrcDocument& predicted, const LrcDocument& truth) {
  if (predicted.lines.size() != truth.lines.size()) {
    throw ContractError("duration_mae: line counts differ");
  }
  if (truth.lines.empty()) throw ContractError("duration_mae: no lines");
  double total = 0.0;
  for (std::size_t i = 0; i < truth.lines.size(); ++i) {
    if (NormalizeLyricText(predicted.lines[i].text) != NormalizeLyricText(truth.lines[i].text)) {
      throw ContractError("duration_mae: line " + std::to_string(i + 1) + " texts differ");
    }
    total += std::abs(predicted.lines[i].timestamp - truth.lines[i].timestamp);
  }
  return total / static_cast<double>(truth.lines.size());
}

}  // namespace segflow
