#include "segflow/checkpoint.h"

#include <algorithm>
#include <fstream>
#include <map>

#include "segflow/errors.h"

namespace segflow {

namespace {
constexpr const char* kFormat = "segflow-checkpoint";
constexpr int kVersion = 1;
}  // namespace

nlohmann::json CheckpointToJson(const ParameterList& params) {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& p : params) {
    list.push_back({{"name", p.name},
                    {"shape", p.tensor.shape()},
                    {"values", std::vector<double>(p.tensor.values().begin(),
                                                   p.tensor.values().end())}});
  }
  return {{"format", kFormat}, {"version", kVersion}, {"params", std::move(list)}};
}

ParameterList CheckpointFromJson(const nlohmann::json& j) {
  if (j.value("format", "") != kFormat || j.value("version", 0) != kVersion) {
    throw ValidationError("not a segflow checkpoint (format/version mismatch)");
  }
  ParameterList params;
  for (const auto& rec : j.at("params")) {
    params.push_back({rec.at("name").get<std::string>(),
                      Tensor::Parameter(rec.at("shape").get<Shape>(),
                                        rec.at("values").get<std::vector<double>>())});
  }
  return params;
}

void SaveCheckpoint(const std::filesystem::path& path, const ParameterList& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out << CheckpointToJson(params).dump() << '\n';
}

ParameterList LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read checkpoint " + path.string());
  return CheckpointFromJson(nlohmann::json::parse(in));
}

void AssignParameters(ParameterList& target, const ParameterList& source) {
  std::map<std::string, const Tensor*> by_name;
  for (const auto& p : source) by_name[p.name] = &p.tensor;
  for (auto& p : target) {
    auto it = by_name.find(p.name);
    if (it == by_name.end()) throw ValidationError("checkpoint lacks parameter " + p.name);
    if (it->second->shape() != p.tensor.shape()) {
      throw DimensionError("checkpoint shape mismatch for " + p.name);
    }
    auto dst = p.tensor.mutable_values();
    std::copy(it->second->values().begin(), it->second->values().end(), dst.begin());
  }
}

}  // namespace segflow
