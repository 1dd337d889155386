#include "segflow/windows.h"

#include <algorithm>
#include <cmath>

#include "segflow/errors.h"
#include "segflow/text.h"

namespace segflow {

std::string_view ToString(SegmentKind kind) {
  switch (kind) {
    case SegmentKind::kLyric: return "lyric";
    case SegmentKind::kInstrumental: return "instrumental";
    case SegmentKind::kBoundary: return "boundary";
  }
  return "lyric";
}

SegmentKind SegmentKindFromString(std::string_view s) {
  if (s == "lyric") return SegmentKind::kLyric;
  if (s == "instrumental") return SegmentKind::kInstrumental;
  if (s == "boundary") return SegmentKind::kBoundary;
  throw ValidationError("unknown segment kind '" + std::string(s) + "'");
}

void ValidateSegments(std::span<const SegmentSpec> segments) {
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const SegmentSpec& s = segments[i];
    if (!(s.start >= 0.0) || !(s.start < s.end) || !std::isfinite(s.end)) {
      throw ValidationError("segment " + std::to_string(i) + " must satisfy 0 <= start < end");
    }
    if (i > 0 && s.start < segments[i - 1].end) {
      throw ValidationError("segment " + std::to_string(i) +
                            " overlaps or precedes the previous segment");
    }
  }
}

namespace {

void CheckStructure(const LrcDocument& doc, std::span<const StructureEntry> structure) {
  std::size_t next_line = 0;
  bool any_lyric = false;
  for (std::size_t i = 0; i < structure.size(); ++i) {
    const StructureEntry& e = structure[i];
    if (e.kind == SegmentKind::kLyric) {
      if (e.line_count == 0 || e.first_line != next_line) {
        throw ValidationError("structure entry " + std::to_string(i) +
                              " does not continue the lyric lines in order");
      }
      next_line += e.line_count;
      any_lyric = true;
    } else if (e.line_count != 0) {
      throw ValidationError("non-lyric structure entry " + std::to_string(i) +
                            " claims lyric lines");
    }
  }
  if (next_line != doc.lines.size()) {
    throw ValidationError("structure does not cover every lyric line exactly once");
  }
  if (!any_lyric && !structure.empty() && !doc.lines.empty()) {
    throw ValidationError("structure has no lyric segment");
  }
}

// Splits [begin, end) evenly across `count` instrumental windows.
void FillGap(std::vector<SegmentWindow>& out, std::span<const std::size_t> entries,
             std::size_t begin, std::size_t end) {
  const std::size_t n = entries.size();
  if (n == 0) return;
  if (end - begin < n) {
    throw ValidationError("instrumental segment has an empty window");
  }
  const std::size_t span = end - begin;
  for (std::size_t k = 0; k < n; ++k) {
    out[entries[k]] = {begin + span * k / n, begin + span * (k + 1) / n,
                       WindowProvenance::kInstrumentalInferred};
  }
}

}  // namespace

std::vector<SegmentWindow> DeriveWindows(const LrcDocument& doc,
                                         std::span<const StructureEntry> structure,
                                         double frame_rate, std::size_t T,
                                         const WindowOptions& options) {
  ValidateLrc(doc);
  CheckStructure(doc, structure);
  if (T != FrameCount(doc.total_duration, frame_rate)) {
    throw ContractError("derive_windows: T must equal ceil(total_duration * frame_rate)");
  }
  std::vector<SegmentWindow> out(structure.size());
  if (structure.empty()) return out;

  std::vector<std::size_t> lyric_idx;
  for (std::size_t i = 0; i < structure.size(); ++i) {
    if (structure[i].kind == SegmentKind::kLyric) lyric_idx.push_back(i);
  }
  if (lyric_idx.empty()) {
    std::vector<std::size_t> all(structure.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    FillGap(out, all, 0, T);
    return out;
  }

  auto start_frame = [&](std::size_t entry) {
    return TimeToFrame(doc.lines[structure[entry].first_line].timestamp, frame_rate);
  };
  auto content_end_frame = [&](std::size_t entry) {
    const LrcLine& last =
        doc.lines[structure[entry].first_line + structure[entry].line_count - 1];
    const double tail = options.tail_base_seconds +
                        options.tail_seconds_per_syllable *
                            static_cast<double>(CountSyllables(last.text));
    return std::max(TimeToFrame(last.timestamp, frame_rate) + 1,
                    TimeToFrame(last.timestamp + tail, frame_rate));
  };

  // Instrumental entries between consecutive lyric entries (and at the ends).
  auto between = [&](std::size_t lo, std::size_t hi) {
    std::vector<std::size_t> ids;
    for (std::size_t i = lo; i < hi; ++i) {
      if (structure[i].kind != SegmentKind::kLyric) ids.push_back(i);
    }
    return ids;
  };

  const auto leading = between(0, lyric_idx.front());
  std::size_t first_start = leading.empty() ? 0 : start_frame(lyric_idx.front());
  FillGap(out, leading, 0, first_start);

  for (std::size_t k = 0; k < lyric_idx.size(); ++k) {
    const std::size_t entry = lyric_idx[k];
    const bool last = k + 1 == lyric_idx.size();
    const std::size_t begin = k == 0 ? first_start : start_frame(entry);
    const std::size_t next_begin = last ? T : start_frame(lyric_idx[k + 1]);
    const auto gap = between(entry + 1, last ? structure.size() : lyric_idx[k + 1]);
    std::size_t end = next_begin;
    if (!gap.empty()) {
      end = std::min(content_end_frame(entry), next_begin);
      // Leave room for one frame per instrumental entry.
      if (next_begin - std::min(end, next_begin) < gap.size()) {
        if (next_begin < gap.size()) {
          throw ValidationError("instrumental segment has an empty window");
        }
        end = next_begin - gap.size();
      }
    }
    if (end <= begin) {
      throw ValidationError("lyric segment '" + structure[entry].label + "' has an empty window");
    }
    out[entry] = {begin, end, WindowProvenance::kLyricDerived};
    FillGap(out, gap, end, next_begin);
  }
  return out;
}

std::vector<SegmentWindow> WindowsFromSegments(std::span<const SegmentSpec> segments,
                                               double frame_rate, std::size_t T) {
  std::vector<SegmentWindow> out;
  out.reserve(segments.size());
  for (const SegmentSpec& s : segments) {
    const std::size_t begin = TimeToFrame(s.start, frame_rate);
    const std::size_t end = TimeToFrame(s.end, frame_rate);
    if (begin >= T || end > T) throw ContractError("segment window lies outside [0, T)");
    if (end <= begin) throw ContractError("segment window is empty after frame conversion");
    WindowProvenance prov = WindowProvenance::kLyricDerived;
    if (s.kind == SegmentKind::kInstrumental) prov = WindowProvenance::kInstrumentalInferred;
    if (s.kind == SegmentKind::kBoundary) prov = WindowProvenance::kBoundary;
    out.push_back({begin, end, prov});
  }
  return out;
}

}  // namespace segflow
