#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <string>
#include <vector>

#include <json.hpp>

#include "segflow/conditioning.h"
#include "segflow/pipeline.h"
#include "segflow/windows.h"

namespace segflow {

// Prompt document:
//   {"global": str,
//    "segments": [{"start_s": num, "end_s": num, "text": str, "kind": str}],
//    "negative": {"global": str, "segment": str}}      ("negative" optional)
PromptSpec PromptSpecFromJson(const nlohmann::json& j);
nlohmann::json PromptSpecToJson(const PromptSpec& spec);

// Structure document: a list (or {"structure": list}) of
//   {"kind": "lyric" | "instrumental", "label": str, "lines": [begin, end]}
// where lines is a half-open lyric-line index range (empty for instrumental).
std::vector<StructureEntry> StructureFromJson(const nlohmann::json& j);
nlohmann::json StructureToJson(const std::vector<StructureEntry>& structure);

// Manifest record (one JSON object per line):
//   {"id": str, "duration": num, "sampling_rate": num, "channels": int,
//    "compression_ok": bool, "energy_ok": bool,          (default true)
//    "quality_scores": {metric: num},
//    "lyrics": LRC text | [plain line, ...],
//    "transcript": [line, ...],                          (optional)
//    "segments": structure list,                         (optional)
//    "captions": {"global": str, "<segment index>": str}} (optional)
RecordManifest RecordFromJson(const nlohmann::json& j);
nlohmann::json RecordToJson(const RecordManifest& r);

struct ManifestIssue {
  std::size_t line = 0;
  std::string id;  // empty when the line did not even name a record
  std::string message;
};

struct Manifest {
  std::vector<RecordManifest> records;
  std::vector<ManifestIssue> issues;  // schema violations, one per bad line
};

Manifest ReadManifest(std::istream& in);
Manifest ReadManifestFile(const std::filesystem::path& path);

nlohmann::json FilterReportToJson(const FilterReport& report,
                                  const std::vector<ManifestIssue>& issues = {});

nlohmann::json ReadJsonFile(const std::filesystem::path& path);
std::string ReadTextFile(const std::filesystem::path& path);
void WriteTextFile(const std::filesystem::path& path, const std::string& text);

nlohmann::json LatentToJson(const LatentSequence& latent);
LatentSequence LatentFromJson(const nlohmann::json& j);

}  // namespace segflow
