#include "segflow/conditioning.h"

#include <algorithm>

#include "segflow/errors.h"
#include "segflow/ops.h"
#include "segflow/text.h"

namespace segflow {

PromptProjection::PromptProjection(std::size_t in, std::size_t hidden, std::size_t out,
                                   Rng& rng)
    : l1_(in, hidden, rng), l2_(hidden, hidden, rng), l3_(hidden, out, rng) {}

Tensor PromptProjection::Forward(const Tensor& e_cat) const {
  return l3_.Forward(Silu(l2_.Forward(Silu(l1_.Forward(e_cat)))));
}

void PromptProjection::AppendParameters(ParameterList& out, const std::string& prefix) const {
  l1_.AppendParameters(out, prefix + ".0");
  l2_.AppendParameters(out, prefix + ".1");
  l3_.AppendParameters(out, prefix + ".2");
}

PromptFeatures EncodePromptFeatures(const std::string& global,
                                    std::span<const std::string> segment_texts,
                                    std::span<const SegmentWindow> windows, std::size_t T,
                                    const TextEmbedder& f_g, const TextEmbedder& f_l) {
  if (T == 0) throw ContractError("encode_prompts: T must be >= 1");
  if (segment_texts.size() != windows.size()) {
    throw ContractError("encode_prompts: one window per segment required");
  }
  const std::size_t d_g = f_g.dimension(), d_l = f_l.dimension();

  const std::vector<double> e_g = f_g.Embed(global);
  std::vector<double> global_rows(T * d_g);
  for (std::size_t f = 0; f < T; ++f) std::copy(e_g.begin(), e_g.end(), &global_rows[f * d_g]);

  std::vector<double> segment_rows(T * d_l, 0.0);
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const SegmentWindow& w = windows[i];
    if (w.frame_start >= w.frame_end || w.frame_end > T) {
      throw ContractError("encode_prompts: segment window outside [0, T)");
    }
    const std::vector<double> e_l = f_l.Embed(segment_texts[i]);
    for (std::size_t f = w.frame_start; f < w.frame_end; ++f) {
      std::copy(e_l.begin(), e_l.end(), &segment_rows[f * d_l]);
    }
  }
  return {Tensor::Constant({T, d_g}, std::move(global_rows)),
          Tensor::Constant({T, d_l}, std::move(segment_rows))};
}

PromptFeatures EncodePromptFeatures(const PromptSpec& spec, std::size_t T,
                                    const TextEmbedder& f_g, const TextEmbedder& f_l,
                                    double frame_rate) {
  ValidateSegments(spec.segments);
  const auto windows = WindowsFromSegments(spec.segments, frame_rate, T);
  std::vector<std::string> texts;
  for (const auto& s : spec.segments) texts.push_back(s.text);
  return EncodePromptFeatures(spec.global, texts, windows, T, f_g, f_l);
}

Tensor EncodePrompts(const PromptSpec& spec, std::size_t T, const TextEmbedder& f_g,
                     const TextEmbedder& f_l, const PromptProjection& out_proj,
                     double frame_rate) {
  PromptFeatures features = EncodePromptFeatures(spec, T, f_g, f_l, frame_rate);
  return out_proj.Forward(ConcatColumns({features.global, features.segment}));
}

LyricEncoding EncodeLyrics(const LrcDocument& doc, const TextEmbedder& token_embedder,
                           std::size_t T, double frame_rate) {
  const std::size_t d = token_embedder.dimension();
  std::vector<double> rows(T * d, 0.0);
  std::size_t truncated = 0;
  for (std::size_t i = 0; i < doc.lines.size(); ++i) {
    const std::size_t start = TimeToFrame(doc.lines[i].timestamp, frame_rate);
    if (start >= T) throw ContractError("encode_lyrics: line onset outside [0, T)");
    std::size_t end = T;
    if (i + 1 < doc.lines.size()) {
      end = std::min(T, TimeToFrame(doc.lines[i + 1].timestamp, frame_rate));
    }
    const auto tokens = TokenizeLyric(doc.lines[i].text);
    const std::size_t room = end > start ? end - start : 0;
    const std::size_t placed = std::min(room, tokens.size());
    for (std::size_t k = 0; k < placed; ++k) {
      const auto e = token_embedder.Embed(tokens[k]);
      std::copy(e.begin(), e.end(), &rows[(start + k) * d]);
    }
    truncated += tokens.size() - placed;
  }
  return {Tensor::Constant({T, d}, std::move(rows)), truncated};
}

ConditioningBundle MakeBundle(PromptFeatures prompt, Tensor lyrics) {
  if (prompt.global.rows() != prompt.segment.rows() || lyrics.rows() != prompt.global.rows()) {
    throw DimensionError("conditioning bundle: components disagree on T");
  }
  ConditioningBundle b;
  b.global = std::move(prompt.global);
  b.segment = std::move(prompt.segment);
  b.lyrics = std::move(lyrics);
  return b;
}

ConditioningBundle DropComponents(const ConditioningBundle& bundle, bool global, bool segment,
                                  bool lyrics) {
  ConditioningBundle out = bundle;
  if (global) {
    out.global = Tensor::Zeros(bundle.global.shape());
    out.drop_global = true;
  }
  if (segment) {
    out.segment = Tensor::Zeros(bundle.segment.shape());
    out.drop_segment = true;
  }
  if (lyrics) {
    out.lyrics = Tensor::Zeros(bundle.lyrics.shape());
    out.drop_lyrics = true;
  }
  return out;
}

ConditioningBundle ApplyConditionDropout(const ConditioningBundle& bundle,
                                         const DropoutProbabilities& p, Rng& rng) {
  for (double q : {p.global, p.segment, p.lyrics}) {
    if (!(q >= 0.0 && q <= 1.0)) throw ContractError("dropout probability outside [0, 1]");
  }
  const bool g = Uniform01(rng) < p.global;
  const bool s = Uniform01(rng) < p.segment;
  const bool l = Uniform01(rng) < p.lyrics;
  return DropComponents(bundle, g, s, l);
}

Tensor AssembleInput(const Tensor& text, const Tensor& lyrics, const Tensor& audio,
                     const Tensor& time) {
  return ConcatColumns({text, lyrics, audio, time});
}

}  // namespace segflow

namespace segflow {

ConditionEncoder::ConditionEncoder(std::shared_ptr<const TextEmbedder> global,
                                   std::shared_ptr<const TextEmbedder> segment,
                                   std::shared_ptr<const TextEmbedder> lyrics,
                                   double frame_rate)
    : global_(std::move(global)),
      segment_(std::move(segment)),
      lyrics_(std::move(lyrics)),
      frame_rate_(frame_rate) {
  if (!global_ || !segment_ || !lyrics_) throw ContractError("condition encoder: null embedder");
  if (!(frame_rate_ > 0.0)) throw ContractError("condition encoder: frame rate must be positive");
}

ConditionEncoder ConditionEncoder::WithStubs(std::size_t d_global, std::size_t d_segment,
                                             std::size_t d_lyrics, double frame_rate) {
  return ConditionEncoder(std::make_shared<StubEmbedder>("global", d_global),
                          std::make_shared<StubEmbedder>("segment", d_segment),
                          std::make_shared<StubEmbedder>("lyrics", d_lyrics), frame_rate);
}

ConditioningBundle ConditionEncoder::Encode(const PromptSpec& spec, const LrcDocument* doc,
                                            std::size_t T) const {
  ValidateSegments(spec.segments);
  const auto windows = WindowsFromSegments(spec.segments, frame_rate_, T);
  return Encode(spec, windows, doc, T);
}

ConditioningBundle ConditionEncoder::Encode(const PromptSpec& spec,
                                            std::span<const SegmentWindow> windows,
                                            const LrcDocument* doc, std::size_t T) const {
  std::vector<std::string> texts;
  for (const auto& s : spec.segments) texts.push_back(s.text);
  PromptFeatures features =
      EncodePromptFeatures(spec.global, texts, windows, T, *global_, *segment_);
  Tensor lyrics = doc ? EncodeLyrics(*doc, *lyrics_, T, frame_rate_).embedding
                      : Tensor::Zeros({T, lyrics_->dimension()});
  return MakeBundle(std::move(features), std::move(lyrics));
}

}  // namespace segflow
