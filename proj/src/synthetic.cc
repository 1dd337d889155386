#include "segflow/synthetic.h"

#include <algorithm>
#include <cmath>

#include "segflow/errors.h"

namespace segflow {

void SyntheticTaskSpec::Validate() const {
  if (T == 0 || d_audio == 0) throw ContractError("synthetic task: T and d_audio must be >= 1");
  if (global_vocab.empty() || segment_vocab.empty()) {
    throw ContractError("synthetic task: vocabularies must be non-empty");
  }
  for (const auto& [text, offset] : global_vocab) {
    if (offset.size() != d_audio) {
      throw ContractError("synthetic task: offset for '" + text + "' is not d_audio wide");
    }
  }
  for (const auto& [text, p] : segment_vocab) {
    if (p.period < 2) throw ContractError("synthetic task: period must be >= 2 frames");
  }
  if (!(sigma >= 0.0)) throw ContractError("synthetic task: sigma must be >= 0");
  if (syllables.empty()) throw ContractError("synthetic task: no syllables");
  if (min_segment_frames == 0 || max_segments == 0 || min_segment_frames > T) {
    throw ContractError("synthetic task: invalid segment limits");
  }
  // The song end must convert back to exactly T frames.
  if (TimeToFrame(Duration(), frame_rate) != T || FrameCount(Duration(), frame_rate) != T) {
    throw ContractError("synthetic task: T / frame_rate does not round-trip to T frames");
  }
}

SyntheticTaskSpec DefaultSyntheticTask() {
  SyntheticTaskSpec task;
  task.global_vocab = {
      {"warm pop ballad", {0.5, -0.5, 0.5, -0.5, 0.5, -0.5, 0.5, -0.5}},
      {"bright electronic dance", {0.5, 0.5, -0.5, -0.5, 0.5, 0.5, -0.5, -0.5}},
      {"dark acoustic folk", {0.5, 0.5, 0.5, 0.5, -0.5, -0.5, -0.5, -0.5}},
  };
  task.segment_vocab = {
      {"pulsing staccato", {1.0, 2}},
      {"swaying groove", {1.0, 4}},
      {"slow swell", {1.0, 8}},
  };
  return task;
}

double PatternValue(const PatternSpec& p, std::size_t k) {
  constexpr double kTwoPi = 6.283185307179586;
  return p.amplitude * std::cos(kTwoPi * static_cast<double>(k % p.period) /
                                static_cast<double>(p.period));
}

LatentSequence SynthSample(const SyntheticTaskSpec& task, const PromptSpec& prompt, Rng& rng) {
  task.Validate();
  auto g = task.global_vocab.find(prompt.global);
  if (g == task.global_vocab.end()) {
    throw ContractError("synth_sample: unknown global text '" + prompt.global + "'");
  }
  std::vector<const PatternSpec*> patterns;
  for (const auto& s : prompt.segments) {
    auto it = task.segment_vocab.find(s.text);
    if (it == task.segment_vocab.end()) {
      throw ContractError("synth_sample: unknown segment text '" + s.text + "'");
    }
    patterns.push_back(&it->second);
  }
  ValidateSegments(prompt.segments);
  const auto windows = WindowsFromSegments(prompt.segments, task.frame_rate, task.T);

  LatentSequence x(task.T, task.d_audio);
  for (std::size_t f = 0; f < task.T; ++f) {
    for (std::size_t c = 0; c < task.d_audio; ++c) x(f, c) = g->second[c];
  }
  for (std::size_t i = 0; i < windows.size(); ++i) {
    for (std::size_t f = windows[i].frame_start; f < windows[i].frame_end; ++f) {
      const double v = PatternValue(*patterns[i], f - windows[i].frame_start);
      for (std::size_t c = 0; c < task.d_audio; ++c) x(f, c) += v;
    }
  }
  if (task.sigma > 0.0) {
    for (double& v : x.data()) v += task.sigma * StandardNormal(rng);
  }
  return x;
}

PromptSpec RandomSyntheticPrompt(const SyntheticTaskSpec& task, Rng& rng) {
  task.Validate();
  const std::size_t most = std::min(task.max_segments, task.T / task.min_segment_frames);
  const std::size_t n = 1 + UniformIndex(rng, most);
  // Spread the spare frames over n segments with sorted random cuts.
  const std::size_t spare = task.T - n * task.min_segment_frames;
  std::vector<std::size_t> cuts;
  for (std::size_t i = 0; i + 1 < n; ++i) cuts.push_back(UniformIndex(rng, spare + 1));
  std::sort(cuts.begin(), cuts.end());
  cuts.insert(cuts.begin(), 0);
  cuts.push_back(spare);

  std::vector<std::string> globals, segments;
  for (const auto& [text, _] : task.global_vocab) globals.push_back(text);
  for (const auto& [text, _] : task.segment_vocab) segments.push_back(text);

  PromptSpec prompt;
  prompt.global = globals[UniformIndex(rng, globals.size())];
  std::size_t frame = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t length = task.min_segment_frames + (cuts[i + 1] - cuts[i]);
    const std::size_t end = frame + length;
    SegmentSpec s;
    s.start = (static_cast<double>(frame) + 0.5) / task.frame_rate;
    s.end = end == task.T ? task.Duration() : (static_cast<double>(end) + 0.5) / task.frame_rate;
    s.text = segments[UniformIndex(rng, segments.size())];
    s.kind = SegmentKind::kLyric;
    prompt.segments.push_back(std::move(s));
    frame = end;
  }
  return prompt;
}

LrcDocument SyntheticLyrics(const SyntheticTaskSpec& task, const PromptSpec& prompt) {
  const auto windows = WindowsFromSegments(prompt.segments, task.frame_rate, task.T);
  LrcDocument doc;
  doc.total_duration = task.Duration();
  for (std::size_t i = 0; i < windows.size(); ++i) {
    std::string text;
    for (std::size_t k = 0; k < windows[i].length(); ++k) {
      if (k) text += ' ';
      text += task.syllables[k % task.syllables.size()];
    }
    doc.lines.push_back({prompt.segments[i].start, std::move(text)});
  }
  ValidateLrc(doc);
  return doc;
}

std::vector<TrainExample> BuildSyntheticDataset(const SyntheticTaskSpec& task,
                                                const ConditionEncoder& encoder,
                                                std::size_t count, std::uint64_t seed) {
  Rng rng(DeriveSeed(seed, "synthetic.dataset"));
  std::vector<TrainExample> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const PromptSpec prompt = RandomSyntheticPrompt(task, rng);
    const LrcDocument doc = SyntheticLyrics(task, prompt);
    LatentSequence x1 = SynthSample(task, prompt, rng);
    out.push_back({std::move(x1), encoder.Encode(prompt, &doc, task.T)});
  }
  return out;
}

}  // namespace segflow
