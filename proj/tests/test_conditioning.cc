#include <doctest.h>

#include <cmath>
#include <set>

#include "segflow/conditioning.h"
#include "segflow/errors.h"
#include "segflow/ops.h"
#include "support.h"

using namespace segflow;

namespace {

std::vector<double> Row(const Tensor& t, std::size_t r) {
  const auto v = t.values();
  return {v.begin() + r * t.cols(), v.begin() + (r + 1) * t.cols()};
}

bool IsZeroRow(const Tensor& t, std::size_t r) {
  for (double x : Row(t, r)) {
    if (x != 0.0) return false;
  }
  return true;
}

// Random sorted, non-overlapping segments whose frame windows are non-empty.
PromptSpec RandomSpec(Rng& rng, std::size_t T, double rate) {
  static const char* texts[] = {"calm", "loud", "sparse", "dense", "rising", "falling"};
  PromptSpec spec;
  spec.global = texts[UniformIndex(rng, 6)];
  const std::size_t n = UniformIndex(rng, 9);
  const double total = static_cast<double>(T) / rate;
  std::vector<double> cuts;
  for (std::size_t i = 0; i < 2 * n; ++i) cuts.push_back(total * Uniform01(rng));
  std::sort(cuts.begin(), cuts.end());
  for (std::size_t i = 0; i < n; ++i) {
    const double s = cuts[2 * i], e = cuts[2 * i + 1];
    if (std::floor(e * rate) <= std::floor(s * rate)) continue;
    if (!spec.segments.empty() && s < spec.segments.back().end) continue;
    spec.segments.push_back({s, e, texts[UniformIndex(rng, 6)]});
  }
  return spec;
}

// Per-frame reference: decide each frame's segment by membership and run
// its row through the projection on its own.
std::vector<double> BruteForceEncode(const PromptSpec& spec, std::size_t T, const TextEmbedder& f_g,
                                     const TextEmbedder& f_l, const PromptProjection& proj,
                                     double rate, std::vector<double>* pre = nullptr) {
  std::vector<double> out;
  for (std::size_t f = 0; f < T; ++f) {
    std::vector<double> row = f_g.Embed(spec.global);
    std::vector<double> seg(f_l.dimension(), 0.0);
    for (const auto& s : spec.segments) {
      const auto a = static_cast<std::size_t>(std::floor(s.start * rate));
      const auto b = static_cast<std::size_t>(std::floor(s.end * rate));
      if (a <= f && f < b) seg = f_l.Embed(s.text);
    }
    row.insert(row.end(), seg.begin(), seg.end());
    if (pre) pre->insert(pre->end(), row.begin(), row.end());
    const Tensor y = proj.Forward(Tensor::Constant({1, row.size()}, row));
    out.insert(out.end(), y.values().begin(), y.values().end());
  }
  return out;
}

}  // namespace

TEST_CASE("stub embedder contract") {
  const StubEmbedder e("global", 32);
  CHECK(e.Embed("warm pop") == e.Embed("warm pop"));
  CHECK(StubEmbedder("segment", 32).Embed("warm pop") != e.Embed("warm pop"));
  std::vector<std::vector<double>> vs;
  for (int i = 0; i < 1000; ++i) {
    const auto v = e.Embed("text " + std::to_string(i));
    double n = 0.0;
    for (double x : v) n += x * x;
    CHECK(std::abs(std::sqrt(n) - 1.0) < 1e-12);
    vs.push_back(v);
  }
  double worst = -1.0;
  for (std::size_t i = 0; i < vs.size(); ++i) {
    for (std::size_t j = i + 1; j < vs.size(); ++j) {
      double c = 0.0;
      for (std::size_t k = 0; k < 32; ++k) c += vs[i][k] * vs[j][k];
      worst = std::max(worst, c);
    }
  }
  CHECK(worst < 0.9);
}

TEST_CASE("encode_prompts: no segments leaves the segment half zero") {
  Rng rng(31);
  const StubEmbedder fg("g", 4), fl("l", 3);
  const PromptProjection proj(7, 8, 5, rng);
  const PromptSpec spec{"calm", {}, std::nullopt};
  const PromptFeatures feats = EncodePromptFeatures(spec, 6, fg, fl, 1.0);
  for (std::size_t f = 0; f < 6; ++f) {
    CHECK(IsZeroRow(feats.segment, f));
    CHECK(Row(feats.global, f) == fg.Embed("calm"));
  }
  const Tensor e = EncodePrompts(spec, 6, fg, fl, proj, 1.0);
  const Tensor expect = proj.Forward(ConcatColumns({feats.global, Tensor::Zeros({6, 3})}));
  CHECK(std::vector<double>(e.values().begin(), e.values().end()) ==
        std::vector<double>(expect.values().begin(), expect.values().end()));
}

TEST_CASE("encode_prompts: one segment over frames [2, 4)") {
  const StubEmbedder fg("g", 2), fl("l", 2);
  const PromptSpec spec{"calm", {{2.0, 4.0, "loud"}}, std::nullopt};
  const PromptFeatures feats = EncodePromptFeatures(spec, 6, fg, fl, 1.0);
  for (std::size_t f = 0; f < 6; ++f) {
    if (f == 2 || f == 3) {
      CHECK(Row(feats.segment, f) == fl.Embed("loud"));
    } else {
      CHECK(IsZeroRow(feats.segment, f));
    }
  }
}

TEST_CASE("encode_prompts: adjacent segments switch at the second start frame") {
  const StubEmbedder fg("g", 3), fl("l", 3);
  const double rate = kDefaultLatentFrameRate;
  const PromptSpec spec{"calm", {{0.0, 1.0, "a"}, {1.0, 2.0, "b"}}, std::nullopt};
  const std::size_t T = 43;
  const PromptFeatures feats = EncodePromptFeatures(spec, T, fg, fl, rate);
  const std::size_t js = TimeToFrame(1.0, rate);
  for (std::size_t f = 0; f < T; ++f) {
    CHECK(Row(feats.segment, f) == fl.Embed(f < js ? "a" : "b"));
  }
}

TEST_CASE("encode_prompts matches the per-frame brute force bit-exactly (200 specs)") {
  Rng rng(32);
  const StubEmbedder fg("global", 6), fl("segment", 5);
  const PromptProjection proj(11, 9, 7, rng);
  const double rate = kDefaultLatentFrameRate;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t T = 1 + UniformIndex(rng, 256);
    const PromptSpec spec = RandomSpec(rng, T, rate);
    const Tensor fast = EncodePrompts(spec, T, fg, fl, proj, rate);
    const auto slow = BruteForceEncode(spec, T, fg, fl, proj, rate);
    CHECK(std::vector<double>(fast.values().begin(), fast.values().end()) == slow);
  }
}

TEST_CASE("encode_prompts locality and per-segment row identity") {
  Rng rng(33);
  const StubEmbedder fg("global", 4), fl("segment", 4);
  const PromptProjection proj(8, 8, 6, rng);
  const double rate = kDefaultLatentFrameRate;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t T = 20 + UniformIndex(rng, 200);
    PromptSpec spec = RandomSpec(rng, T, rate);
    if (spec.segments.empty()) continue;
    const auto windows = WindowsFromSegments(spec.segments, rate, T);
    const PromptFeatures before = EncodePromptFeatures(spec, T, fg, fl, rate);
    const std::size_t k = UniformIndex(rng, spec.segments.size());
    spec.segments[k].text += " changed";
    const PromptFeatures after = EncodePromptFeatures(spec, T, fg, fl, rate);
    for (std::size_t f = 0; f < T; ++f) {
      CHECK(Row(before.global, f) == Row(after.global, f));
      CHECK(Row(after.global, f) == Row(after.global, 0));
      const bool inside = windows[k].contains(f);
      CHECK((Row(before.segment, f) != Row(after.segment, f)) == inside);
    }
    const Tensor e = EncodePrompts(spec, T, fg, fl, proj, rate);
    for (const auto& w : windows) {
      for (std::size_t f = w.frame_start + 1; f < w.frame_end; ++f) {
        CHECK(Row(e, f) == Row(e, w.frame_start));
      }
    }
  }
}

TEST_CASE("encode_prompts rejects windows outside [0, T)") {
  const StubEmbedder fg("g", 2), fl("l", 2);
  const PromptSpec spec{"calm", {{2.0, 9.0, "a"}}, std::nullopt};
  CHECK_THROWS_AS(EncodePromptFeatures(spec, 6, fg, fl, 1.0), ContractError);
}

TEST_CASE("encode_lyrics examples") {
  const StubEmbedder tok("lyrics", 4);
  const LyricEncoding none = EncodeLyrics(LrcDocument{{}, 30.0}, tok, 30, 1.0);
  for (double x : none.embedding.values()) CHECK(x == 0.0);
  CHECK(none.truncated_tokens == 0);

  const LrcDocument doc{{{5.0, "one two three"}, {20.0, "next"}}, 30.0};
  const LyricEncoding e = EncodeLyrics(doc, tok, 30, 1.0);
  CHECK(Row(e.embedding, 5) == tok.Embed("one"));
  CHECK(Row(e.embedding, 6) == tok.Embed("two"));
  CHECK(Row(e.embedding, 7) == tok.Embed("three"));
  for (std::size_t f = 8; f < 20; ++f) CHECK(IsZeroRow(e.embedding, f));
  for (std::size_t f = 0; f < 5; ++f) CHECK(IsZeroRow(e.embedding, f));
  CHECK(Row(e.embedding, 20) == tok.Embed("next"));
  CHECK(e.truncated_tokens == 0);

  const LrcDocument crowded{{{2.0, "a b c d e f g h i j"}, {6.0, "k"}}, 10.0};
  const LyricEncoding c = EncodeLyrics(crowded, tok, 10, 1.0);
  CHECK(c.truncated_tokens == 6);
  std::size_t nonzero = 0;
  for (std::size_t f = 2; f < 6; ++f) nonzero += IsZeroRow(c.embedding, f) ? 0 : 1;
  CHECK(nonzero == 4);

  const LrcDocument cjk{{{0.0, "我爱你"}}, 5.0};
  const LyricEncoding z = EncodeLyrics(cjk, tok, 5, 1.0);
  CHECK(Row(z.embedding, 1) == tok.Embed("爱"));
}

TEST_CASE("encode_lyrics places min(tokens, window) rows per line") {
  Rng rng(34);
  const StubEmbedder tok("lyrics", 3);
  for (int trial = 0; trial < 100; ++trial) {
    LrcDocument doc;
    std::size_t frame = UniformIndex(rng, 3);
    std::vector<std::pair<std::size_t, std::size_t>> lines;  // (start, tokens)
    for (std::size_t i = 0, n = 1 + UniformIndex(rng, 5); i < n; ++i) {
      const std::size_t k = UniformIndex(rng, 7);
      std::string text;
      for (std::size_t w = 0; w < k; ++w) text += "w" + std::to_string(w) + " ";
      doc.lines.push_back({static_cast<double>(frame), text});
      lines.push_back({frame, k});
      frame += 1 + UniformIndex(rng, 6);
    }
    const std::size_t T = frame;
    doc.total_duration = static_cast<double>(T);
    const LyricEncoding e = EncodeLyrics(doc, tok, T, 1.0);
    std::size_t truncated = 0;
    for (std::size_t i = 0; i < lines.size(); ++i) {
      const std::size_t end = i + 1 < lines.size() ? lines[i + 1].first : T;
      const std::size_t room = end - lines[i].first;
      std::size_t nonzero = 0;
      for (std::size_t f = lines[i].first; f < end; ++f) nonzero += IsZeroRow(e.embedding, f) ? 0 : 1;
      CHECK(nonzero == std::min(room, lines[i].second));
      truncated += lines[i].second - std::min(room, lines[i].second);
    }
    CHECK(e.truncated_tokens == truncated);
  }
}

TEST_CASE("condition dropout") {
  Rng rng(35);
  const ConditionEncoder enc = ConditionEncoder::WithStubs(4, 4, 3, 1.0);
  const PromptSpec spec{"calm", {{1.0, 3.0, "loud"}}, std::nullopt};
  const LrcDocument doc{{{0.0, "la la"}}, 5.0};
  const ConditioningBundle b = enc.Encode(spec, &doc, 5);

  const ConditioningBundle same = ApplyConditionDropout(b, {0.0, 0.0, 0.0}, rng);
  CHECK_FALSE(same.drop_global);
  CHECK_FALSE(same.drop_segment);
  CHECK_FALSE(same.drop_lyrics);
  CHECK(std::vector<double>(same.segment.values().begin(), same.segment.values().end()) ==
        std::vector<double>(b.segment.values().begin(), b.segment.values().end()));

  for (int i = 0; i < 100; ++i) {
    const ConditioningBundle d = ApplyConditionDropout(b, {1.0, 0.0, 0.0}, rng);
    CHECK(d.drop_global);
    for (double x : d.global.values()) CHECK(x == 0.0);
    CHECK(d.global.shape() == b.global.shape());
  }
  CHECK_THROWS_AS(ApplyConditionDropout(b, {1.5, 0.0, 0.0}, rng), ContractError);

  Rng a(99), c(99);
  CHECK(ApplyConditionDropout(b, {}, a).drop_global == ApplyConditionDropout(b, {}, c).drop_global);

  const int n = 10000;
  double g = 0, s = 0, l = 0, gs = 0;
  Rng mc(36);
  for (int i = 0; i < n; ++i) {
    const ConditioningBundle d = ApplyConditionDropout(b, {0.2, 0.2, 0.2}, mc);
    g += d.drop_global;
    s += d.drop_segment;
    l += d.drop_lyrics;
    gs += d.drop_global && d.drop_segment;
  }
  const double pg = g / n, ps = s / n, pl = l / n;
  CHECK(pg >= 0.18);
  CHECK(pg <= 0.22);
  CHECK(ps >= 0.18);
  CHECK(ps <= 0.22);
  CHECK(pl >= 0.18);
  CHECK(pl <= 0.22);
  const double corr = (gs / n - pg * ps) / std::sqrt(pg * (1 - pg) * ps * (1 - ps));
  CHECK(std::abs(corr) < 0.05);
}

TEST_CASE("assemble_input") {
  Rng rng(37);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t T = 1 + UniformIndex(rng, 8);
    const InputLayout layout{1 + UniformIndex(rng, 5), UniformIndex(rng, 5), 1 + UniformIndex(rng, 5),
                             2 * (1 + UniformIndex(rng, 3))};
    const Tensor text = testing::RandomTensor(rng, {T, layout.text}, false);
    const Tensor lyr = testing::RandomTensor(rng, {T, layout.lyrics}, false);
    const Tensor audio = testing::RandomTensor(rng, {T, layout.audio}, false);
    const Tensor time = testing::RandomTensor(rng, {T, layout.time}, false);
    const Tensor x = AssembleInput(text, lyr, audio, time);
    CHECK(x.cols() == layout.width());
    auto same = [](const Tensor& a, const Tensor& b) {
      return std::vector<double>(a.values().begin(), a.values().end()) ==
             std::vector<double>(b.values().begin(), b.values().end());
    };
    CHECK(same(SliceColumns(x, layout.text_offset(), layout.lyrics_offset()), text));
    CHECK(same(SliceColumns(x, layout.lyrics_offset(), layout.audio_offset()), lyr));
    CHECK(same(SliceColumns(x, layout.audio_offset(), layout.time_offset()), audio));
    CHECK(same(SliceColumns(x, layout.time_offset(), layout.width()), time));
  }
  const Tensor z = AssembleInput(Tensor::Zeros({3, 2}), Tensor::Zeros({3, 1}), Tensor::Zeros({3, 2}),
                                 Tensor::Zeros({3, 4}));
  CHECK(z.cols() == 9);
  for (double v : z.values()) CHECK(v == 0.0);
  CHECK_THROWS_AS(AssembleInput(Tensor::Zeros({3, 2}), Tensor::Zeros({2, 1}), Tensor::Zeros({3, 2}),
                                Tensor::Zeros({3, 4})),
                  DimensionError);
}
