#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "segflow/optim.h"

namespace segflow {

// Checkpoint container: a JSON object
//   {"format": "segflow-checkpoint", "version": 1,
//    "params": [{"name": str, "shape": [int...], "values": [num...]}, ...]}
// in parameter order. Doubles are written with shortest round-trip
// formatting, so a save/load cycle is value-exact.
nlohmann::json CheckpointToJson(const ParameterList& params);
ParameterList CheckpointFromJson(const nlohmann::json& j);

void SaveCheckpoint(const std::filesystem::path& path, const ParameterList& params);
ParameterList LoadCheckpoint(const std::filesystem::path& path);

// Copies values from `source` into `target` by name; shapes must match and
// every target name must be present.
void AssignParameters(ParameterList& target, const ParameterList& source);

}  // namespace segflow
