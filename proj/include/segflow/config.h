#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>

#include <json.hpp>

#include "segflow/backbone.h"
#include "segflow/duration.h"
#include "segflow/flow.h"
#include "segflow/pipeline.h"
#include "segflow/sampler.h"
#include "segflow/synthetic.h"

namespace segflow {

struct PipelineConfig {
  PretrainFilterOptions pretrain;
  FinetuneFilterOptions finetune;
  double max_lyric_edit_distance = 0.3;
  std::optional<double> dpo_min_diff;  // required by the dpo-pairs stage
  DurationHeuristic duration;
};

struct PathsConfig {
  std::string run_dir = "run";
  std::string manifest;    // pipeline input (JSON lines)
  std::string scores;      // dpo-pairs input (JSON lines {"group","id","score"})
  std::string checkpoint;  // generate input; empty: <run_dir>/checkpoint.json
};

struct DataConfig {
  std::size_t train_examples = 512;
};

// Everything a command needs. Seeds of the stochastic components are
// derived from `seed`; see the Seed* helpers.
struct RunConfig {
  std::uint64_t seed = 0;
  ModelConfig model;
  TrainConfig train;
  GuidanceConfig guidance;
  SyntheticTaskSpec task = DefaultSyntheticTask();
  DataConfig data;
  PipelineConfig pipeline;
  NegativePrompt negative = kDefaultNegativePrompt;
  PathsConfig paths;

  void Validate() const;
};

nlohmann::json RunConfigToJson(const RunConfig& config);
// Strict: unknown keys raise ValidationError.
RunConfig RunConfigFromJson(const nlohmann::json& j);

// Defaults, then the file (if any), then "a.b.c=value" overrides. Values
// are parsed as JSON, falling back to a plain string.
RunConfig LoadRunConfig(const std::optional<std::filesystem::path>& file,
                        std::span<const std::string> overrides);

// Per-component seeds.
std::uint64_t ModelInitSeed(const RunConfig& c);
std::uint64_t TrainDataSeed(const RunConfig& c);

}  // namespace segflow
