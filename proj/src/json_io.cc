#include "segflow/json_io.h"

#include <fstream>
#include <sstream>

#include "segflow/errors.h"

namespace segflow {

using nlohmann::json;

PromptSpec PromptSpecFromJson(const json& j) {
  try {
    PromptSpec spec;
    spec.global = j.at("global").get<std::string>();
    for (const auto& s : j.value("segments", json::array())) {
      SegmentSpec seg;
      seg.start = s.at("start_s").get<double>();
      seg.end = s.at("end_s").get<double>();
      seg.text = s.at("text").get<std::string>();
      seg.kind = SegmentKindFromString(s.value("kind", "lyric"));
      spec.segments.push_back(std::move(seg));
    }
    if (j.contains("negative") && !j.at("negative").is_null()) {
      const auto& n = j.at("negative");
      spec.negative = NegativePrompt{n.at("global").get<std::string>(),
                                     n.at("segment").get<std::string>()};
    }
    ValidateSegments(spec.segments);
    return spec;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("prompt: ") + e.what());
  }
}

json PromptSpecToJson(const PromptSpec& spec) {
  json segments = json::array();
  for (const auto& s : spec.segments) {
    segments.push_back({{"start_s", s.start},
                        {"end_s", s.end},
                        {"text", s.text},
                        {"kind", std::string(ToString(s.kind))}});
  }
  json j = {{"global", spec.global}, {"segments", std::move(segments)}};
  if (spec.negative) {
    j["negative"] = {{"global", spec.negative->global}, {"segment", spec.negative->segment}};
  }
  return j;
}

std::vector<StructureEntry> StructureFromJson(const json& j) {
  try {
    const json& list = j.is_object() ? j.at("structure") : j;
    std::vector<StructureEntry> out;
    for (const auto& e : list) {
      StructureEntry entry;
      entry.kind = SegmentKindFromString(e.at("kind").get<std::string>());
      entry.label = e.value("label", "");
      if (e.contains("lines")) {
        const auto range = e.at("lines").get<std::vector<std::size_t>>();
        if (range.size() != 2 || range[1] < range[0]) {
          throw ValidationError("structure: lines must be [begin, end] with begin <= end");
        }
        entry.first_line = range[0];
        entry.line_count = range[1] - range[0];
      }
      out.push_back(std::move(entry));
    }
    return out;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("structure: ") + e.what());
  }
}

json StructureToJson(const std::vector<StructureEntry>& structure) {
  json out = json::array();
  for (const auto& e : structure) {
    out.push_back({{"kind", std::string(ToString(e.kind))},
                   {"label", e.label},
                   {"lines", {e.first_line, e.first_line + e.line_count}}});
  }
  return out;
}

RecordManifest RecordFromJson(const json& j) {
  RecordManifest r;
  r.id = j.at("id").get<std::string>();
  r.duration = j.at("duration").get<double>();
  r.sampling_rate = j.at("sampling_rate").get<double>();
  r.channels = j.at("channels").get<int>();
  r.compression_ok = j.value("compression_ok", true);
  r.energy_ok = j.value("energy_ok", true);
  if (j.contains("quality_scores")) {
    r.quality_scores = j.at("quality_scores").get<std::map<std::string, double>>();
  }
  if (j.contains("lyrics")) {
    const json& lyr = j.at("lyrics");
    if (lyr.is_string()) {
      r.lrc = ParseLrc(lyr.get<std::string>(), r.duration);
      for (const auto& l : r.lrc->lines) r.lyric_lines.push_back(l.text);
    } else {
      r.lyric_lines = lyr.get<std::vector<std::string>>();
    }
  }
  if (j.contains("transcript") && !j.at("transcript").is_null()) {
    r.transcript = j.at("transcript").get<std::vector<std::string>>();
  }
  if (j.contains("segments")) r.segments = StructureFromJson(j.at("segments"));
  if (j.contains("captions")) {
    for (const auto& [key, value] : j.at("captions").items()) {
      if (key == "global") {
        r.global_caption = value.get<std::string>();
      } else {
        std::size_t used = 0;
        const unsigned long idx = std::stoul(key, &used);
        if (used != key.size()) throw ValidationError("captions: bad segment index " + key);
        r.segment_captions[idx] = value.get<std::string>();
      }
    }
  }
  r.Validate();
  return r;
}

json RecordToJson(const RecordManifest& r) {
  json j = {{"id", r.id},
            {"duration", r.duration},
            {"sampling_rate", r.sampling_rate},
            {"channels", r.channels},
            {"compression_ok", r.compression_ok},
            {"energy_ok", r.energy_ok},
            {"quality_scores", r.quality_scores}};
  if (r.lrc) {
    j["lyrics"] = SerializeLrc(*r.lrc);
  } else if (!r.lyric_lines.empty()) {
    j["lyrics"] = r.lyric_lines;
  }
  if (r.transcript) j["transcript"] = *r.transcript;
  if (!r.segments.empty()) j["segments"] = StructureToJson(r.segments);
  if (r.global_caption || !r.segment_captions.empty()) {
    json captions = json::object();
    if (r.global_caption) captions["global"] = *r.global_caption;
    for (const auto& [idx, text] : r.segment_captions) captions[std::to_string(idx)] = text;
    j["captions"] = std::move(captions);
  }
  return j;
}

Manifest ReadManifest(std::istream& in) {
  Manifest m;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::string id;
    try {
      const json j = json::parse(line);
      if (j.is_object() && j.contains("id") && j.at("id").is_string()) id = j.at("id");
      m.records.push_back(RecordFromJson(j));
    } catch (const std::exception& e) {
      m.issues.push_back({line_no, id, e.what()});
    }
  }
  return m;
}

Manifest ReadManifestFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read manifest " + path.string());
  return ReadManifest(in);
}

json FilterReportToJson(const FilterReport& report, const std::vector<ManifestIssue>& issues) {
  json rejected = json::array();
  for (const auto& [id, why] : report.rejected) rejected.push_back({{"id", id}, {"reason", why}});
  for (const auto& issue : issues) {
    rejected.push_back({{"id", issue.id},
                        {"reason", reason::kInvalid},
                        {"line", issue.line},
                        {"message", issue.message}});
  }
  json flagged = json::array();
  for (const auto& [id, note] : report.flagged) flagged.push_back({{"id", id}, {"note", note}});
  return {{"kept", report.kept},
          {"rejected", std::move(rejected)},
          {"flagged", std::move(flagged)},
          {"counts",
           {{"input", report.kept.size() + report.rejected.size() + issues.size()},
            {"kept", report.kept.size()},
            {"rejected", report.rejected.size() + issues.size()}}}};
}

json ReadJsonFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

std::string ReadTextFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteTextFile(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

json LatentToJson(const LatentSequence& latent) {
  return {{"frames", latent.rows()}, {"channels", latent.cols()}, {"values", latent.data()}};
}

LatentSequence LatentFromJson(const json& j) {
  return LatentSequence(j.at("frames").get<std::size_t>(), j.at("channels").get<std::size_t>(),
                        j.at("values").get<std::vector<double>>());
}

}  // namespace segflow
