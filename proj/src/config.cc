#include "segflow/config.h"

#include "segflow/errors.h"
#include "segflow/json_io.h"
#include "segflow/rng.h"

namespace segflow {

using nlohmann::json;

namespace {

// Recursively copies `patch` onto `base`; every key must already exist.
void MergeStrict(json& base, const json& patch, const std::string& where) {
  if (!patch.is_object()) throw ValidationError("config: " + where + " must be an object");
  for (const auto& [key, value] : patch.items()) {
    const std::string path = where.empty() ? key : where + "." + key;
    if (!base.contains(key)) throw ValidationError("config: unknown key " + path);
    json& slot = base[key];
    if (slot.is_object() && key != "global_vocab" && key != "segment_vocab") {
      MergeStrict(slot, value, path);
    } else {
      slot = value;
    }
  }
}

void ApplyOverride(json& root, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ValidationError("config: override must be key=value: " + assignment);
  }
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;

  json patch = value;
  std::string rest = key;
  std::vector<std::string> parts;
  for (std::size_t pos; (pos = rest.find('.')) != std::string::npos; rest = rest.substr(pos + 1)) {
    parts.push_back(rest.substr(0, pos));
  }
  parts.push_back(rest);
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) patch = json{{*it, patch}};
  MergeStrict(root, patch, "");
}

template <typename T>
void Get(const json& j, const char* key, T& out) {
  out = j.at(key).get<T>();
}

}  // namespace

void RunConfig::Validate() const {
  model.Validate();
  train.Validate();
  task.Validate();
  if (guidance.steps == 0) throw ValidationError("config: guidance.steps must be >= 1");
  if (model.d_audio != task.d_audio) {
    throw ValidationError("config: model.d_audio must equal task.d_audio");
  }
  if (data.train_examples == 0) throw ValidationError("config: data.train_examples must be >= 1");
  if (paths.run_dir.empty()) throw ValidationError("config: paths.run_dir is empty");
}

json RunConfigToJson(const RunConfig& c) {
  json global_vocab = json::object();
  for (const auto& [text, offset] : c.task.global_vocab) global_vocab[text] = offset;
  json segment_vocab = json::object();
  for (const auto& [text, p] : c.task.segment_vocab) {
    segment_vocab[text] = {{"amplitude", p.amplitude}, {"period", p.period}};
  }
  const auto& m = c.model;
  const auto& t = c.train;
  const auto& pp = c.pipeline;
  return {
      {"seed", c.seed},
      {"model",
       {{"n_blocks", m.n_blocks}, {"model_width", m.model_width}, {"n_heads", m.n_heads},
        {"ffn_width", m.ffn_width}, {"d_global", m.d_global}, {"d_segment", m.d_segment},
        {"d_text", m.d_text}, {"proj_hidden", m.proj_hidden}, {"d_lyrics", m.d_lyrics},
        {"d_audio", m.d_audio}, {"d_time", m.d_time}}},
      {"train",
       {{"steps", t.steps}, {"batch_size", t.batch_size}, {"learning_rate", t.learning_rate},
        {"p_drop_global", t.p_drop_global}, {"p_drop_segment", t.p_drop_segment},
        {"p_drop_lyrics", t.p_drop_lyrics}, {"max_grad_norm", t.max_grad_norm},
        {"checkpoint_interval", t.checkpoint_interval}, {"log_wall_time", t.log_wall_time}}},
      {"guidance",
       {{"cfg", c.guidance.cfg}, {"cfg_n", c.guidance.cfg_n}, {"steps", c.guidance.steps}}},
      {"task",
       {{"T", c.task.T}, {"d_audio", c.task.d_audio}, {"frame_rate", c.task.frame_rate},
        {"sigma", c.task.sigma}, {"syllables", c.task.syllables},
        {"min_segment_frames", c.task.min_segment_frames},
        {"max_segments", c.task.max_segments}, {"global_vocab", global_vocab},
        {"segment_vocab", segment_vocab}}},
      {"data", {{"train_examples", c.data.train_examples}}},
      {"pipeline",
       {{"pretrain",
         {{"min_sampling_rate", pp.pretrain.min_sampling_rate},
          {"min_duration", pp.pretrain.min_duration},
          {"max_duration", pp.pretrain.max_duration},
          {"drop_lowest_fraction", pp.pretrain.drop_lowest_fraction},
          {"score_key", pp.pretrain.score_key}}},
        {"finetune",
         {{"min_sampling_rate", pp.finetune.min_sampling_rate},
          {"channels", pp.finetune.channels}}},
        {"max_lyric_edit_distance", pp.max_lyric_edit_distance},
        {"dpo_min_diff", pp.dpo_min_diff ? json(*pp.dpo_min_diff) : json(nullptr)},
        {"duration",
         {{"base_seconds", pp.duration.base_seconds},
          {"seconds_per_syllable", pp.duration.seconds_per_syllable},
          {"chorus_factor", pp.duration.chorus_factor},
          {"gap_seconds", pp.duration.gap_seconds}}}}},
      {"negative", {{"global", c.negative.global}, {"segment", c.negative.segment}}},
      {"paths",
       {{"run_dir", c.paths.run_dir}, {"manifest", c.paths.manifest},
        {"scores", c.paths.scores}, {"checkpoint", c.paths.checkpoint}}},
  };
}

RunConfig RunConfigFromJson(const json& input) {
  // Strictness: merge onto the default tree first.
  json j = RunConfigToJson(RunConfig{});
  MergeStrict(j, input, "");
  try {
    RunConfig c;
    Get(j, "seed", c.seed);
    const json& m = j.at("model");
    Get(m, "n_blocks", c.model.n_blocks);
    Get(m, "model_width", c.model.model_width);
    Get(m, "n_heads", c.model.n_heads);
    Get(m, "ffn_width", c.model.ffn_width);
    Get(m, "d_global", c.model.d_global);
    Get(m, "d_segment", c.model.d_segment);
    Get(m, "d_text", c.model.d_text);
    Get(m, "proj_hidden", c.model.proj_hidden);
    Get(m, "d_lyrics", c.model.d_lyrics);
    Get(m, "d_audio", c.model.d_audio);
    Get(m, "d_time", c.model.d_time);
    const json& t = j.at("train");
    Get(t, "steps", c.train.steps);
    Get(t, "batch_size", c.train.batch_size);
    Get(t, "learning_rate", c.train.learning_rate);
    Get(t, "p_drop_global", c.train.p_drop_global);
    Get(t, "p_drop_segment", c.train.p_drop_segment);
    Get(t, "p_drop_lyrics", c.train.p_drop_lyrics);
    Get(t, "max_grad_norm", c.train.max_grad_norm);
    Get(t, "checkpoint_interval", c.train.checkpoint_interval);
    Get(t, "log_wall_time", c.train.log_wall_time);
    c.train.seed = DeriveSeed(c.seed, "train");
    const json& g = j.at("guidance");
    Get(g, "cfg", c.guidance.cfg);
    Get(g, "cfg_n", c.guidance.cfg_n);
    Get(g, "steps", c.guidance.steps);
    c.guidance.seed = DeriveSeed(c.seed, "generate");
    const json& k = j.at("task");
    Get(k, "T", c.task.T);
    Get(k, "d_audio", c.task.d_audio);
    Get(k, "frame_rate", c.task.frame_rate);
    Get(k, "sigma", c.task.sigma);
    Get(k, "syllables", c.task.syllables);
    Get(k, "min_segment_frames", c.task.min_segment_frames);
    Get(k, "max_segments", c.task.max_segments);
    c.task.global_vocab.clear();
    for (const auto& [text, offset] : k.at("global_vocab").items()) {
      c.task.global_vocab[text] = offset.get<std::vector<double>>();
    }
    c.task.segment_vocab.clear();
    for (const auto& [text, p] : k.at("segment_vocab").items()) {
      c.task.segment_vocab[text] = {p.at("amplitude").get<double>(),
                                    p.at("period").get<std::size_t>()};
    }
    Get(j.at("data"), "train_examples", c.data.train_examples);
    const json& pp = j.at("pipeline");
    const json& pre = pp.at("pretrain");
    Get(pre, "min_sampling_rate", c.pipeline.pretrain.min_sampling_rate);
    Get(pre, "min_duration", c.pipeline.pretrain.min_duration);
    Get(pre, "max_duration", c.pipeline.pretrain.max_duration);
    Get(pre, "drop_lowest_fraction", c.pipeline.pretrain.drop_lowest_fraction);
    Get(pre, "score_key", c.pipeline.pretrain.score_key);
    Get(pp.at("finetune"), "min_sampling_rate", c.pipeline.finetune.min_sampling_rate);
    Get(pp.at("finetune"), "channels", c.pipeline.finetune.channels);
    Get(pp, "max_lyric_edit_distance", c.pipeline.max_lyric_edit_distance);
    if (!pp.at("dpo_min_diff").is_null()) {
      c.pipeline.dpo_min_diff = pp.at("dpo_min_diff").get<double>();
    }
    const json& d = pp.at("duration");
    Get(d, "base_seconds", c.pipeline.duration.base_seconds);
    Get(d, "seconds_per_syllable", c.pipeline.duration.seconds_per_syllable);
    Get(d, "chorus_factor", c.pipeline.duration.chorus_factor);
    Get(d, "gap_seconds", c.pipeline.duration.gap_seconds);
    Get(j.at("negative"), "global", c.negative.global);
    Get(j.at("negative"), "segment", c.negative.segment);
    const json& p = j.at("paths");
    Get(p, "run_dir", c.paths.run_dir);
    Get(p, "manifest", c.paths.manifest);
    Get(p, "scores", c.paths.scores);
    Get(p, "checkpoint", c.paths.checkpoint);
    c.Validate();
    return c;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  } catch (const ContractError& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
}

RunConfig LoadRunConfig(const std::optional<std::filesystem::path>& file,
                        std::span<const std::string> overrides) {
  json j = RunConfigToJson(RunConfig{});
  if (file) MergeStrict(j, ReadJsonFile(*file), "");
  for (const auto& o : overrides) ApplyOverride(j, o);
  return RunConfigFromJson(j);
}

std::uint64_t ModelInitSeed(const RunConfig& c) { return DeriveSeed(c.seed, "model.init"); }
std::uint64_t TrainDataSeed(const RunConfig& c) { return DeriveSeed(c.seed, "train.data"); }

}  // namespace segflow
