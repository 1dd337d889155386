#include "segflow/pipeline.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "segflow/errors.h"
#include "segflow/text.h"

namespace segflow {

void RecordManifest::Validate() const {
  if (!(duration > 0.0)) throw ValidationError(id + ": duration must be positive");
  if (!(sampling_rate > 0.0)) throw ValidationError(id + ": sampling rate must be positive");
  if (channels < 1) throw ValidationError(id + ": channels must be >= 1");
}

double Quantile(std::vector<double> values, double q) {
  if (values.empty()) throw ContractError("quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw ContractError("quantile level outside [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

namespace {

std::optional<double> AggregateScore(const RecordManifest& r, const std::string& key) {
  if (!key.empty()) {
    auto it = r.quality_scores.find(key);
    if (it == r.quality_scores.end()) return std::nullopt;
    return it->second;
  }
  if (r.quality_scores.empty()) return std::nullopt;
  double total = 0.0;
  for (const auto& [name, v] : r.quality_scores) total += v;
  return total / static_cast<double>(r.quality_scores.size());
}

bool ValidOrReject(const RecordManifest& r, FilterReport& report) {
  try {
    r.Validate();
    return true;
  } catch (const ValidationError&) {
    report.rejected.emplace_back(r.id, reason::kInvalid);
    return false;
  }
}

// Restores input order among kept ids.
void OrderKept(std::span<const RecordManifest> records, FilterReport& report) {
  std::set<std::string> kept(report.kept.begin(), report.kept.end());
  report.kept.clear();
  for (const auto& r : records) {
    if (kept.count(r.id)) report.kept.push_back(r.id);
  }
}

}  // namespace

FilterReport PretrainFilter(std::span<const RecordManifest> records,
                            const PretrainFilterOptions& options) {
  FilterReport report;
  std::vector<std::pair<const RecordManifest*, double>> survivors;
  for (const RecordManifest& r : records) {
    if (!ValidOrReject(r, report)) continue;
    const char* why = nullptr;
    if (r.sampling_rate < options.min_sampling_rate) {
      why = reason::kSamplingRate;
    } else if (r.duration < options.min_duration || r.duration > options.max_duration) {
      why = reason::kDuration;
    } else if (!r.compression_ok) {
      why = reason::kCompression;
    } else if (!r.energy_ok) {
      why = reason::kEnergy;
    }
    if (why) {
      report.rejected.emplace_back(r.id, why);
      continue;
    }
    const auto score = AggregateScore(r, options.score_key);
    if (!score) {
      report.rejected.emplace_back(r.id, reason::kMissingScore);
      continue;
    }
    survivors.emplace_back(&r, *score);
  }
  if (!survivors.empty()) {
    std::vector<double> scores;
    for (const auto& s : survivors) scores.push_back(s.second);
    const double cut = Quantile(scores, options.drop_lowest_fraction);
    for (const auto& [r, score] : survivors) {
      if (score < cut) {
        report.rejected.emplace_back(r->id, reason::kLowQuality);
      } else {
        report.kept.push_back(r->id);
      }
    }
  }
  return report;
}

FilterReport FinetuneFilter(std::span<const RecordManifest> records,
                            const FinetuneFilterOptions& options) {
  FilterReport report;
  std::vector<const RecordManifest*> survivors;
  for (const RecordManifest& r : records) {
    if (!ValidOrReject(r, report)) continue;
    if (r.sampling_rate < options.min_sampling_rate) {
      report.rejected.emplace_back(r.id, reason::kSamplingRate);
    } else if (r.channels != options.channels) {
      report.rejected.emplace_back(r.id, reason::kChannels);
    } else {
      survivors.push_back(&r);
    }
  }

  std::set<std::string> metrics;
  for (const auto* r : survivors) {
    for (const auto& [name, v] : r->quality_scores) metrics.insert(name);
  }
  std::vector<const RecordManifest*> scored;
  for (const auto* r : survivors) {
    const bool complete = !r->quality_scores.empty() &&
                          std::all_of(metrics.begin(), metrics.end(), [&](const auto& m) {
                            return r->quality_scores.count(m) > 0;
                          });
    if (complete) {
      scored.push_back(r);
    } else {
      report.rejected.emplace_back(r->id, reason::kMissingScore);
    }
  }
  std::map<std::string, double> medians;
  for (const auto& m : metrics) {
    std::vector<double> values;
    for (const auto* r : scored) values.push_back(r->quality_scores.at(m));
    if (!values.empty()) medians[m] = Quantile(values, 0.5);
  }
  for (const auto* r : scored) {
    const bool top_half = std::all_of(metrics.begin(), metrics.end(), [&](const auto& m) {
      return r->quality_scores.at(m) >= medians.at(m);
    });
    if (top_half) {
      report.kept.push_back(r->id);
    } else {
      report.rejected.emplace_back(r->id, reason::kBelowMedian);
    }
  }
  OrderKept(records, report);
  return report;
}

double NormalizedEditDistance(std::string_view a, std::string_view b) {
  const std::u32string na = NormalizeLyricText(a);
  const std::u32string nb = NormalizeLyricText(b);
  const std::size_t longest = std::max(na.size(), nb.size());
  if (longest == 0) return 0.0;
  return static_cast<double>(Levenshtein(na, nb)) / static_cast<double>(longest);
}

namespace {

std::string JoinLines(std::span<const std::string> lines) {
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i) out += ' ';
    out += lines[i];
  }
  return out;
}

std::vector<std::string> LyricLines(const RecordManifest& r) {
  if (!r.lyric_lines.empty() || !r.lrc) return r.lyric_lines;
  std::vector<std::string> lines;
  for (const auto& l : r.lrc->lines) lines.push_back(l.text);
  return lines;
}

}  // namespace

FilterReport LyricEditFilter(std::span<const RecordManifest> records,
                             double max_normalized_distance) {
  FilterReport report;
  for (const RecordManifest& r : records) {
    if (!r.transcript) {
      report.kept.push_back(r.id);
      report.flagged.emplace_back(r.id, reason::kUnverified);
      continue;
    }
    const double d = NormalizedEditDistance(JoinLines(LyricLines(r)), JoinLines(*r.transcript));
    if (d > max_normalized_distance) {
      report.rejected.emplace_back(r.id, reason::kEditDistance);
    } else {
      report.kept.push_back(r.id);
    }
  }
  return report;
}

std::string AssembleSegmentCaption(std::string_view label, std::string_view raw_caption) {
  if (label.empty()) throw ContractError("segment caption: empty structure label");
  if (!raw_caption.empty() && raw_caption.front() == '[') {
    const auto close = raw_caption.find(']');
    if (close != std::string_view::npos &&
        (close + 1 == raw_caption.size() || raw_caption[close + 1] == ' ')) {
      throw ValidationError("segment caption already carries a structure label");
    }
  }
  std::string out = "[";
  out += label;
  out += "] ";
  out += raw_caption;
  return out;
}

PromptSpec InsertBoundaryPrompts(const PromptSpec& spec, double total_duration,
                                 double frame_rate) {
  if (!(total_duration > 2.0 * kBoundarySeconds)) {
    throw ContractError("insert_boundary_prompts: song must be longer than 1 s");
  }
  ValidateSegments(spec.segments);
  const double lo = kBoundarySeconds;
  const double hi = total_duration - kBoundarySeconds;
  PromptSpec out = spec;
  out.segments.clear();
  out.segments.push_back({0.0, lo, kStartBoundaryText, SegmentKind::kBoundary});
  for (SegmentSpec s : spec.segments) {
    s.start = std::max(s.start, lo);
    s.end = std::min(s.end, hi);
    if (s.start >= s.end) continue;
    if (TimeToFrame(s.start, frame_rate) >= TimeToFrame(s.end, frame_rate)) continue;
    out.segments.push_back(std::move(s));
  }
  out.segments.push_back({hi, total_duration, kEndBoundaryText, SegmentKind::kBoundary});
  ValidateSegments(out.segments);
  return out;
}

std::vector<std::pair<std::string, std::string>> DpoPairSelect(
    std::span<const ScoredSample> group, double min_diff) {
  if (group.size() < 2) throw ContractError("dpo_pair_select: group needs at least 2 samples");
  std::vector<double> scores;
  for (const auto& s : group) scores.push_back(s.score);
  const double q3 = Quantile(scores, 0.75);
  std::vector<std::pair<std::string, std::string>> pairs;
  for (const auto& w : group) {
    if (!(w.score > q3)) continue;
    for (const auto& l : group) {
      if (w.score - l.score > min_diff) pairs.emplace_back(w.id, l.id);
    }
  }
  std::sort(pairs.begin(), pairs.end());
  return pairs;
}

std::string RenderDurationInstruction(const std::string& global_description,
                                      std::span<const std::string> segment_descriptions,
                                      std::span<const StructureEntry> structure,
                                      std::span<const std::string> lyrics) {
  std::string out =
      "You are a professional music composer and vocal arranger.\n"
      "\n"
      "Your task:\n"
      "\n"
      "1. Analyze the lyrics and the song description below.\n"
      "\n"
      "2. For each line of lyrics, estimate a reasonable singing duration. "
      "Base your estimation jointly on:\n"
      "- The intrinsic characteristics of the line itself (e.g., length, phrasing, "
      "complexity)\n"
      "- The overall song attributes;\n"
      "- The structural flow of the song, including instrumental breaks, natural pauses, "
      "and transitions;\n"
      "\n"
      "3. Return: Output a complete `.lrc` style list with timestamps.\n"
      "\n"
      "Below are the target global song description and lyrics. Please follow the "
      "instructions above and return the completed .lrc file directly.\n"
      "\n"
      "Song Description\n"
      "\n";
  out += global_description;
  out += "\n\nLyrics\n\n[";
  out += kStartBoundaryText;
  out += "]\n\n";
  for (std::size_t i = 0; i < structure.size(); ++i) {
    out += "[" + segment_descriptions[i] + "]\n\n";
    const StructureEntry& e = structure[i];
    for (std::size_t k = 0; k < e.line_count; ++k) out += lyrics[e.first_line + k] + "\n";
    if (e.line_count) out += "\n";
  }
  out += "[";
  out += kEndBoundaryText;
  out += "]\n\nLRC Prediction:\n";
  return out;
}

DurationDataset BuildDurationDataset(std::span<const RecordManifest> records) {
  DurationDataset ds;
  for (const RecordManifest& r : records) {
    if (!r.lrc) {
      ds.skipped.emplace_back(r.id, "missing-timestamps");
      continue;
    }
    if (!r.global_caption) {
      ds.skipped.emplace_back(r.id, "missing-caption");
      continue;
    }
    std::vector<StructureEntry> structure = r.segments;
    if (structure.empty()) {
      structure.push_back({SegmentKind::kLyric, "verse", 0, r.lrc->lines.size()});
    }
    std::vector<std::string> descriptions;
    bool complete = true;
    for (std::size_t i = 0; i < structure.size(); ++i) {
      auto it = r.segment_captions.find(i);
      if (it == r.segment_captions.end()) {
        complete = false;
        break;
      }
      descriptions.push_back(it->second);
    }
    if (!complete) {
      ds.skipped.emplace_back(r.id, "missing-caption");
      continue;
    }
    std::vector<std::string> lyrics;
    for (const auto& l : r.lrc->lines) lyrics.push_back(l.text);
    std::size_t covered = 0;
    for (const auto& e : structure) {
      if (e.first_line + e.line_count > lyrics.size()) covered = lyrics.size() + 1;
      covered += e.line_count;
    }
    if (covered != lyrics.size()) {
      ds.skipped.emplace_back(r.id, "structure-mismatch");
      continue;
    }
    ds.examples.push_back({r.id,
                           RenderDurationInstruction(*r.global_caption, descriptions,
                                                     structure, lyrics),
                           SerializeLrc(*r.lrc)});
  }
  return ds;
}

}  // namespace segflow
