#include "segflow/duration.h"

#include "segflow/errors.h"
#include "segflow/text.h"

namespace segflow {
namespace {

bool MentionsChorus(const DurationSegment& s) {
  return ToLowerAscii(s.text).find("chorus") != std::string::npos ||
         ToLowerAscii(s.entry.label).find("chorus") != std::string::npos;
}

}  // namespace

double HeuristicDurationPredictor::LineDuration(const std::string& line, bool chorus) const {
  const double d = params_.base_seconds +
                   params_.seconds_per_syllable * static_cast<double>(CountSyllables(line));
  return chorus ? d * params_.chorus_factor : d;
}

LrcDocument HeuristicDurationPredictor::Predict(const DurationRequest& request) const {
  if (request.lyrics.empty()) throw ContractError("predict_durations: no lyric lines");
  for (const std::string& line : request.lyrics) {
    if (line.find('\n') != std::string::npos) {
      throw ContractError("predict_durations: lyric line contains a newline");
    }
  }

  std::vector<DurationSegment> segments = request.segments;
  if (segments.empty()) {
    segments.push_back({"", {SegmentKind::kLyric, "verse", 0, request.lyrics.size()}});
  }
  std::size_t next = 0;
  for (const auto& s : segments) {
    if (s.entry.kind != SegmentKind::kLyric) continue;
    if (s.entry.line_count == 0 || s.entry.first_line != next) {
      throw ValidationError("predict_durations: segments do not cover the lyrics in order");
    }
    next += s.entry.line_count;
  }
  if (next != request.lyrics.size()) {
    throw ValidationError("predict_durations: segments do not cover every lyric line");
  }

  LrcDocument doc;
  double t = 0.0;
  bool after_instrumental = false;
  for (const DurationSegment& seg : segments) {
    if (seg.entry.kind != SegmentKind::kLyric) {
      t += params_.gap_seconds;
      after_instrumental = true;
      continue;
    }
    if (!after_instrumental) t += params_.gap_seconds;
    after_instrumental = false;
    const bool chorus = MentionsChorus(seg);
    for (std::size_t i = 0; i < seg.entry.line_count; ++i) {
      const std::string& line = request.lyrics[seg.entry.first_line + i];
      doc.lines.push_back({t, line});
      t += LineDuration(line, chorus);
    }
  }
  if (!after_instrumental) t += params_.gap_seconds;
  doc.total_duration = t;

  if (request.total_duration_hint) {
    const double hint = *request.total_duration_hint;
    if (!(hint > 0.0)) throw ContractError("predict_durations: duration hint must be positive");
    const double scale = hint / doc.total_duration;
    for (LrcLine& line : doc.lines) line.timestamp *= scale;
    doc.total_duration = hint;
  }
  ValidateLrc(doc);
  return doc;
}

LrcDocument PredictDurations(const DurationRequest& request, const DurationHeuristic& params) {
  return HeuristicDurationPredictor(params).Predict(request);
}

}  // namespace segflow
