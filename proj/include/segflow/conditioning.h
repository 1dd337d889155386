#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "segflow/embedder.h"
#include "segflow/layers.h"
#include "segflow/lrc.h"
#include "segflow/rng.h"
#include "segflow/tensor.h"
#include "segflow/windows.h"

namespace segflow {

struct NegativePrompt {
  std::string global;
  std::string segment;
};

// One global prompt plus timed segment prompts.
struct PromptSpec {
  std::string global;
  std::vector<SegmentSpec> segments;
  std::optional<NegativePrompt> negative;
};

// out_proj: linear(in -> h) -> silu -> linear(h -> h) -> silu -> linear(h -> out).
class PromptProjection {
 public:
  PromptProjection() = default;
  PromptProjection(std::size_t in, std::size_t hidden, std::size_t out, Rng& rng);

  std::size_t in_features() const { return l1_.in_features(); }
  std::size_t out_features() const { return l3_.out_features(); }

  Tensor Forward(const Tensor& e_cat) const;
  void AppendParameters(ParameterList& out, const std::string& prefix) const;

 private:
  Linear l1_, l2_, l3_;
};

// Pre-projection prompt features: E_g (T x d_g) and E_l (T x d_l).
struct PromptFeatures {
  Tensor global;
  Tensor segment;
};

// E_g = f_g(global) on every frame; E_l is zero except inside each window,
// where it holds f_l(text) of that window's segment.
PromptFeatures EncodePromptFeatures(const std::string& global,
                                    std::span<const std::string> segment_texts,
                                    std::span<const SegmentWindow> windows, std::size_t T,
                                    const TextEmbedder& f_g, const TextEmbedder& f_l);

// Same, with windows from the segments' times (floor(t * frame_rate)).
PromptFeatures EncodePromptFeatures(const PromptSpec& spec, std::size_t T,
                                    const TextEmbedder& f_g, const TextEmbedder& f_l,
                                    double frame_rate);

// Full text conditioning: out_proj(concat(E_g, E_l)), T x d_text.
Tensor EncodePrompts(const PromptSpec& spec, std::size_t T, const TextEmbedder& f_g,
                     const TextEmbedder& f_l, const PromptProjection& out_proj,
                     double frame_rate);

struct LyricEncoding {
  Tensor embedding;              // T x d_lyrics
  std::size_t truncated_tokens = 0;
};

// Sentence-level placement: each line's tokens occupy consecutive frames
// from the line's onset frame, stopping at the next line's onset (or T).
LyricEncoding EncodeLyrics(const LrcDocument& doc, const TextEmbedder& token_embedder,
                           std::size_t T, double frame_rate);

// Per-sample conditioning excluding the noisy latent and the time step,
// which join at forward time. The prompt halves are kept unprojected so
// that dropout can zero them before the projection sees them.
struct ConditioningBundle {
  Tensor global;   // T x d_g
  Tensor segment;  // T x d_l
  Tensor lyrics;   // T x d_lyrics
  bool drop_global = false;
  bool drop_segment = false;
  bool drop_lyrics = false;

  std::size_t frames() const { return global.rows(); }
};

ConditioningBundle MakeBundle(PromptFeatures prompt, Tensor lyrics);

struct DropoutProbabilities {
  double global = 0.2;
  double segment = 0.2;
  double lyrics = 0.2;
};

// Independent Bernoulli draws (global, segment, lyrics, in that order);
// a dropped component becomes all zeros for the whole sample.
ConditioningBundle ApplyConditionDropout(const ConditioningBundle& bundle,
                                         const DropoutProbabilities& p, Rng& rng);

// Zeroes the selected components without drawing anything.
ConditioningBundle DropComponents(const ConditioningBundle& bundle, bool global,
                                  bool segment, bool lyrics);

struct InputLayout {
  std::size_t text = 0, lyrics = 0, audio = 0, time = 0;

  std::size_t text_offset() const { return 0; }
  std::size_t lyrics_offset() const { return text; }
  std::size_t audio_offset() const { return text + lyrics; }
  std::size_t time_offset() const { return text + lyrics + audio; }
  std::size_t width() const { return text + lyrics + audio + time; }
};

// Channel concat in the fixed order (E_text, E_lyrics, E_audio, E_t).
Tensor AssembleInput(const Tensor& text, const Tensor& lyrics, const Tensor& audio,
                     const Tensor& time);

}  // namespace segflow

namespace segflow {

// The three text/lyric encoders plus the latent frame rate. Embedders are
// shared read-only, so an encoder can be copied freely.
class ConditionEncoder {
 public:
  ConditionEncoder(std::shared_ptr<const TextEmbedder> global,
                   std::shared_ptr<const TextEmbedder> segment,
                   std::shared_ptr<const TextEmbedder> lyrics, double frame_rate);

  // Stub embedders of the given widths ("global", "segment", "lyrics"
  // namespaces).
  static ConditionEncoder WithStubs(std::size_t d_global, std::size_t d_segment,
                                    std::size_t d_lyrics, double frame_rate);

  double frame_rate() const { return frame_rate_; }
  const TextEmbedder& global() const { return *global_; }
  const TextEmbedder& segment() const { return *segment_; }
  const TextEmbedder& lyrics() const { return *lyrics_; }

  // Windows from the segment times; lyrics placed when `doc` is given.
  ConditioningBundle Encode(const PromptSpec& spec, const LrcDocument* doc,
                            std::size_t T) const;
  // Explicit windows (one per spec segment), e.g. from DeriveWindows.
  ConditioningBundle Encode(const PromptSpec& spec, std::span<const SegmentWindow> windows,
                            const LrcDocument* doc, std::size_t T) const;

 private:
  std::shared_ptr<const TextEmbedder> global_, segment_, lyrics_;
  double frame_rate_;
};

}  // namespace segflow
