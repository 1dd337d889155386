#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "segflow/conditioning.h"
#include "segflow/flow.h"
#include "segflow/lrc.h"
#include "segflow/matrix.h"
#include "segflow/rng.h"

namespace segflow {

struct PatternSpec {
  double amplitude = 1.0;
  std::size_t period = 4;  // frames, >= 2
};

// Desk-scale stand-in for songs: a latent is a per-song channel offset
// (chosen by the global prompt) plus, inside each segment window, a
// periodic pattern amplitude * cos(2 pi k / period) added to every channel,
// with k counted from the window start, plus N(0, sigma^2) noise.
struct SyntheticTaskSpec {
  std::size_t T = 64;
  std::size_t d_audio = 8;
  double frame_rate = kDefaultLatentFrameRate;
  std::map<std::string, std::vector<double>> global_vocab;
  std::map<std::string, PatternSpec> segment_vocab;
  double sigma = 0.05;
  // Sung syllables for the generated lyrics; a segment's line cycles through
  // them one per frame, which anchors frame positions inside each window.
  std::vector<std::string> syllables{"la", "da", "di", "do", "ba", "be", "bo", "bu"};
  std::size_t min_segment_frames = 8;
  std::size_t max_segments = 4;

  void Validate() const;
  double Duration() const { return static_cast<double>(T) / frame_rate; }
};

SyntheticTaskSpec DefaultSyntheticTask();

double PatternValue(const PatternSpec& p, std::size_t k);

LatentSequence SynthSample(const SyntheticTaskSpec& task, const PromptSpec& prompt, Rng& rng);

// Random prompt: a global text and 1..max_segments lyric segments that tile
// [0, T) in frames. Segment times sit on frame centers so the frame
// conversion is exact.
PromptSpec RandomSyntheticPrompt(const SyntheticTaskSpec& task, Rng& rng);

// One lyric line per segment at its start, one syllable per frame.
LrcDocument SyntheticLyrics(const SyntheticTaskSpec& task, const PromptSpec& prompt);

std::vector<TrainExample> BuildSyntheticDataset(const SyntheticTaskSpec& task,
                                                const ConditionEncoder& encoder,
                                                std::size_t count, std::uint64_t seed);

}  // namespace segflow
