#include "segflow/commands.h"

#include <algorithm>
#include <atomic>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "segflow/checkpoint.h"
#include "segflow/config.h"
#include "segflow/errors.h"
#include "segflow/json_io.h"
#include "segflow/metrics.h"
#include "segflow/rng.h"

namespace segflow {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Usage problems detected after argument parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string Hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Tracks the files a command writes and records them in <run_dir>/manifest.json.
class RunDir {
 public:
  explicit RunDir(const std::string& dir) : root_(dir) { fs::create_directories(root_); }

  fs::path path(const std::string& name) const { return root_ / name; }

  void Write(const std::string& name, const std::string& bytes) {
    WriteTextFile(path(name), bytes);
    produced_.push_back(name);
  }
  void WriteJson(const std::string& name, const json& j) { Write(name, j.dump(2) + "\n"); }

  // Merges this command's files into the manifest; entries sorted by name.
  void Finish(const std::string& command) {
    const fs::path mpath = path("manifest.json");
    json manifest = {{"files", json::object()}};
    if (fs::exists(mpath)) {
      try {
        manifest = json::parse(ReadTextFile(mpath));
      } catch (const json::exception&) {
      }
    }
    for (const auto& name : produced_) {
      const std::string bytes = ReadTextFile(path(name));
      manifest["files"][name] = {
          {"command", command}, {"bytes", bytes.size()}, {"fnv1a64", Hex(Fnv1a64(bytes))}};
    }
    WriteTextFile(mpath, manifest.dump(2) + "\n");
  }

 private:
  fs::path root_;
  std::vector<std::string> produced_;
};

std::string JsonLines(const std::vector<json>& rows) {
  std::string s;
  for (const auto& r : rows) s += r.dump() + "\n";
  return s;
}

std::vector<std::string> ReadPlainLines(const fs::path& path) {
  std::istringstream in(ReadTextFile(path));
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    lines.push_back(line);
  }
  return lines;
}

ConditionEncoder MakeEncoder(const RunConfig& c) {
  return ConditionEncoder::WithStubs(c.model.d_global, c.model.d_segment, c.model.d_lyrics,
                                     c.task.frame_rate);
}

std::string DefaultCheckpoint(const RunConfig& c) {
  return c.paths.checkpoint.empty() ? (fs::path(c.paths.run_dir) / "checkpoint.json").string()
                                    : c.paths.checkpoint;
}

// ---- pipeline ----

void CmdPipeline(const RunConfig& c, const std::string& stage) {
  RunDir run(c.paths.run_dir);
  if (stage == "dpo-pairs") {
    if (!c.pipeline.dpo_min_diff) {
      throw UsageError("dpo-pairs needs pipeline.dpo_min_diff (no default is provided)");
    }
    if (c.paths.scores.empty()) throw UsageError("dpo-pairs needs paths.scores");
    std::map<std::string, std::vector<ScoredSample>> groups;
    std::istringstream in(ReadTextFile(c.paths.scores));
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        const json j = json::parse(line);
        groups[j.at("group").get<std::string>()].push_back(
            {j.at("id").get<std::string>(), j.at("score").get<double>()});
      } catch (const json::exception& e) {
        throw ValidationError("scores line " + std::to_string(line_no) + ": " + e.what());
      }
    }
    json pairs = json::array();
    for (const auto& [group, samples] : groups) {
      for (const auto& [w, l] : DpoPairSelect(samples, *c.pipeline.dpo_min_diff)) {
        pairs.push_back({{"group", group}, {"chosen", w}, {"rejected", l}});
      }
    }
    run.WriteJson("dpo_pairs.json", {{"pairs", pairs}, {"count", pairs.size()}});
    run.Finish("pipeline dpo-pairs");
    return;
  }

  if (c.paths.manifest.empty()) throw UsageError(stage + " needs paths.manifest");
  const Manifest manifest = ReadManifestFile(c.paths.manifest);
  if (stage == "pretrain") {
    const FilterReport r = PretrainFilter(manifest.records, c.pipeline.pretrain);
    run.WriteJson("pretrain_report.json", FilterReportToJson(r, manifest.issues));
  } else if (stage == "finetune") {
    const FilterReport r = FinetuneFilter(manifest.records, c.pipeline.finetune);
    run.WriteJson("finetune_report.json", FilterReportToJson(r, manifest.issues));
  } else if (stage == "lyric-check") {
    const FilterReport r = LyricEditFilter(manifest.records, c.pipeline.max_lyric_edit_distance);
    run.WriteJson("lyric_check_report.json", FilterReportToJson(r, manifest.issues));
  } else if (stage == "duration-dataset") {
    const DurationDataset d = BuildDurationDataset(manifest.records);
    std::vector<json> rows;
    for (const auto& e : d.examples) {
      rows.push_back({{"id", e.id}, {"instruction", e.instruction}, {"target", e.target}});
    }
    json skipped = json::array();
    for (const auto& [id, why] : d.skipped) skipped.push_back({{"id", id}, {"reason", why}});
    for (const auto& issue : manifest.issues) {
      skipped.push_back({{"id", issue.id}, {"reason", reason::kInvalid}, {"line", issue.line}});
    }
    run.Write("duration_dataset.jsonl", JsonLines(rows));
    run.WriteJson("duration_dataset_report.json",
                  {{"examples", d.examples.size()}, {"skipped", skipped}});
  }
  run.Finish("pipeline " + stage);
}

// ---- train ----

void CmdTrain(const RunConfig& c) {
  RunDir run(c.paths.run_dir);
  run.WriteJson("config.json", RunConfigToJson(c));
  const ConditionEncoder encoder = MakeEncoder(c);
  const auto dataset =
      BuildSyntheticDataset(c.task, encoder, c.data.train_examples, TrainDataSeed(c));
  VelocityModel model(c.model, ModelInitSeed(c));

  std::ostringstream log;
  TrainHooks hooks;
  hooks.log = &log;
  std::vector<std::string> checkpoints;
  hooks.checkpoint = [&](std::size_t step, const VelocityModel& m) {
    const std::string name = step == c.train.steps
                                 ? std::string("checkpoint.json")
                                 : "checkpoint_step" + std::to_string(step) + ".json";
    run.Write(name, CheckpointToJson(m.parameters()).dump() + "\n");
  };
  TrainReport report;
  try {
    report = Train(model, dataset, c.train, hooks);
  } catch (const NumericError&) {
    run.Write("train_log.jsonl", log.str());
    run.Finish("train");
    throw;
  }
  run.Write("train_log.jsonl", log.str());
  run.WriteJson("train_report.json",
                {{"steps", report.losses.size()},
                 {"initial_loss", report.InitialSmoothedLoss()},
                 {"final_loss", report.FinalSmoothedLoss()},
                 {"dropped", {{"global", report.dropped_global},
                              {"segment", report.dropped_segment},
                              {"lyrics", report.dropped_lyrics}}},
                 {"elements_seen", report.elements_seen},
                 {"parameter_count", ParameterCount(c.model)}});
  run.Finish("train");
}

// ---- generate ----

struct GenerateArgs {
  std::string prompt;
  std::string lrc;
  std::string lyrics;
  std::string structure;
  bool predict = false;
  std::string format = "json";
  std::string name = "sample";
};

DurationRequest MakeDurationRequest(const PromptSpec& spec, std::vector<std::string> lyrics,
                                    const std::vector<StructureEntry>& structure) {
  DurationRequest req;
  req.lyrics = std::move(lyrics);
  req.global_prompt = spec.global;
  if (!structure.empty()) {
    if (structure.size() != spec.segments.size()) {
      throw ValidationError("structure has " + std::to_string(structure.size()) +
                            " entries but the prompt has " +
                            std::to_string(spec.segments.size()) + " segments");
    }
    for (std::size_t i = 0; i < structure.size(); ++i) {
      req.segments.push_back({spec.segments[i].text, structure[i]});
    }
  }
  return req;
}

void CmdGenerate(const RunConfig& c, const GenerateArgs& a) {
  if (a.predict == !a.lrc.empty()) {
    throw UsageError(a.predict ? "--lrc and --predict-durations are exclusive"
                               : "an --lrc file or --predict-durations is required");
  }
  if (a.predict && a.lyrics.empty()) throw UsageError("--predict-durations needs --lyrics");
  RunDir run(c.paths.run_dir);

  const PromptSpec spec = PromptSpecFromJson(ReadJsonFile(a.prompt));
  std::vector<StructureEntry> structure;
  if (!a.structure.empty()) structure = StructureFromJson(ReadJsonFile(a.structure));
  const std::size_t T = c.task.T;
  const double total = c.task.Duration();

  LrcDocument doc;
  if (a.predict) {
    DurationRequest req = MakeDurationRequest(spec, ReadPlainLines(a.lyrics), structure);
    req.total_duration_hint = total;
    doc = PredictDurations(req, c.pipeline.duration);
    run.Write(a.name + ".lrc", SerializeLrc(doc));
  } else {
    doc = ParseLrc(ReadTextFile(a.lrc), total);
  }

  const std::vector<SegmentWindow> windows =
      structure.empty() ? WindowsFromSegments(spec.segments, c.task.frame_rate, T)
                        : DeriveWindows(doc, structure, c.task.frame_rate, T);
  if (windows.size() != spec.segments.size()) {
    throw ValidationError("derived windows do not match the prompt segments");
  }

  const ConditionEncoder encoder = MakeEncoder(c);
  const ConditionTriple triple = BuildConditionTriple(spec, windows, &doc, T, encoder, c.negative);
  VelocityModel model(c.model, ModelInitSeed(c));
  ParameterList params = model.parameters();
  AssignParameters(params, LoadCheckpoint(DefaultCheckpoint(c)));

  std::ostringstream log;
  const LatentSequence latent = EulerSample(model, triple, c.guidance, T, c.task.d_audio, &log);
  run.Write(a.name + "_log.jsonl", log.str());

  if (a.format == "raw") {
    std::string bytes(latent.data().size() * sizeof(double), '\0');
    for (std::size_t i = 0; i < latent.data().size(); ++i) {
      const double v = latent.data()[i];
      std::uint64_t bits;
      std::memcpy(&bits, &v, sizeof bits);
      for (int b = 0; b < 8; ++b) bytes[i * 8 + b] = static_cast<char>((bits >> (8 * b)) & 0xff);
    }
    run.Write(a.name + ".f64", bytes);
  } else {
    run.WriteJson(a.name + ".json", LatentToJson(latent));
  }
  json win = json::array();
  for (std::size_t i = 0; i < windows.size(); ++i) {
    win.push_back({{"text", spec.segments[i].text},
                   {"start_frame", windows[i].frame_start},
                   {"end_frame", windows[i].frame_end}});
  }
  run.WriteJson(a.name + "_diagnostics.json",
                {{"frames", T},
                 {"channels", c.task.d_audio},
                 {"format", a.format},
                 {"cfg", c.guidance.cfg},
                 {"cfg_n", c.guidance.cfg_n},
                 {"steps", c.guidance.steps},
                 {"seed", c.guidance.seed},
                 {"windows", win}});
  run.Finish("generate");
}

// ---- eval ----

struct EvalArgs {
  std::vector<std::string> latents;
  std::vector<std::string> prompts;
  std::vector<std::string> predicted_lrc;
  std::vector<std::string> reference_lrc;
  std::size_t jobs = 1;
};

json EvalOne(const RunConfig& c, const std::string& latent_path, const std::string& prompt_path,
             const SimilarityScorer& scorer) {
  const LatentSequence latent = LatentFromJson(ReadJsonFile(latent_path));
  const PromptSpec spec = PromptSpecFromJson(ReadJsonFile(prompt_path));
  const auto windows = WindowsFromSegments(spec.segments, c.task.frame_rate, latent.rows());
  const SegmentScores seg = SegmentAlignmentScore(latent, spec, windows, scorer);
  return {{"latent", latent_path},
          {"prompt", prompt_path},
          {"global_score", GlobalAlignmentScore(latent, spec.global, scorer)},
          {"segment_scores", seg.per_segment},
          {"segment_mean", seg.mean}};
}

void CmdEval(const RunConfig& c, const EvalArgs& a) {
  if (a.latents.size() != a.prompts.size()) {
    throw ValidationError("eval: " + std::to_string(a.latents.size()) + " latents but " +
                          std::to_string(a.prompts.size()) + " prompts");
  }
  if (a.predicted_lrc.size() != a.reference_lrc.size()) {
    throw ValidationError("eval: predicted and reference LRC counts differ");
  }
  RunDir run(c.paths.run_dir);
  const SyntheticOracleScorer scorer(c.task);

  // Bounded pool; results land at their input index.
  const std::size_t n = a.latents.size();
  std::vector<json> results(n);
  std::vector<std::string> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        results[i] = EvalOne(c, a.latents[i], a.prompts[i], scorer);
      } catch (const std::exception& e) {
        errors[i] = a.latents[i] + ": " + e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  const std::size_t workers = std::min(std::max<std::size_t>(a.jobs, 1), std::max<std::size_t>(n, 1));
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (!e.empty()) throw ValidationError(e);
  }

  json aggregate = {{"count", n}};
  if (n > 0) {
    double g = 0.0, s = 0.0;
    for (const auto& r : results) {
      g += r.at("global_score").get<double>();
      s += r.at("segment_mean").get<double>();
    }
    aggregate["global_mean"] = g / static_cast<double>(n);
    aggregate["segment_mean"] = s / static_cast<double>(n);
  }
  json report = {{"samples", results}, {"aggregate", aggregate}};
  if (!a.predicted_lrc.empty()) {
    json maes = json::array();
    double total = 0.0;
    for (std::size_t i = 0; i < a.predicted_lrc.size(); ++i) {
      const double mae = DurationMae(ParseLrc(ReadTextFile(a.predicted_lrc[i])),
                                     ParseLrc(ReadTextFile(a.reference_lrc[i])));
      maes.push_back(mae);
      total += mae;
    }
    report["duration_mae"] = {{"per_pair", maes},
                              {"mean", total / static_cast<double>(a.predicted_lrc.size())}};
  }
  run.WriteJson("eval_report.json", report);
  run.Finish("eval");
}

// ---- predict-durations ----

void CmdPredictDurations(const RunConfig& c, const std::string& lyrics, const std::string& prompt,
                         const std::string& structure_file, std::optional<double> total,
                         const std::string& name) {
  RunDir run(c.paths.run_dir);
  PromptSpec spec;
  if (!prompt.empty()) spec = PromptSpecFromJson(ReadJsonFile(prompt));
  std::vector<StructureEntry> structure;
  if (!structure_file.empty()) structure = StructureFromJson(ReadJsonFile(structure_file));
  DurationRequest req = MakeDurationRequest(spec, ReadPlainLines(lyrics), structure);
  req.total_duration_hint = total;
  run.Write(name, SerializeLrc(PredictDurations(req, c.pipeline.duration)));
  run.Finish("predict-durations");
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"segment-conditioned flow matching toolkit", "segflow"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_file;
  std::vector<std::string> overrides;
  std::string run_dir;
  app.add_option("-c,--config", config_file, "JSON config file");
  app.add_option("-s,--set", overrides, "override, dotted key: model.n_blocks=2");
  app.add_option("--run-dir", run_dir, "run directory (paths.run_dir)");

  auto* pipeline = app.add_subcommand("pipeline", "data pipeline stages");
  std::string stage;
  std::string manifest;
  pipeline->add_option("stage", stage, "pretrain | finetune | lyric-check | dpo-pairs | duration-dataset")
      ->required()
      ->check(CLI::IsMember({"pretrain", "finetune", "lyric-check", "dpo-pairs", "duration-dataset"}));
  pipeline->add_option("--manifest", manifest, "manifest (JSON lines)");

  auto* train = app.add_subcommand("train", "train on the synthetic task");

  auto* generate = app.add_subcommand("generate", "sample a latent");
  GenerateArgs gen;
  std::optional<double> cfg, cfg_n;
  std::string checkpoint;
  generate->add_option("--prompt", gen.prompt, "prompt JSON")->required();
  generate->add_option("--lrc", gen.lrc, "timestamped lyrics");
  generate->add_flag("--predict-durations", gen.predict, "predict timestamps from --lyrics");
  generate->add_option("--lyrics", gen.lyrics, "plain lyrics, one line per row");
  generate->add_option("--structure", gen.structure, "structure JSON");
  generate->add_option("--checkpoint", checkpoint, "checkpoint (paths.checkpoint)");
  generate->add_option("--cfg", cfg, "guidance.cfg");
  generate->add_option("--cfg-n", cfg_n, "guidance.cfg_n");
  generate->add_option("--format", gen.format, "json | raw")->check(CLI::IsMember({"json", "raw"}));
  generate->add_option("--name", gen.name, "output file stem");

  auto* eval = app.add_subcommand("eval", "score latents against prompts");
  EvalArgs ev;
  eval->add_option("--latent", ev.latents, "latent JSON files");
  eval->add_option("--prompt", ev.prompts, "prompt JSON files, one per latent");
  eval->add_option("--predicted-lrc", ev.predicted_lrc, "predicted LRC files");
  eval->add_option("--reference-lrc", ev.reference_lrc, "reference LRC files");
  eval->add_option("--jobs", ev.jobs, "worker threads");

  auto* predict = app.add_subcommand("predict-durations", "heuristic LRC timestamps");
  std::string p_lyrics, p_prompt, p_structure, p_name = "predicted.lrc";
  std::optional<double> p_total;
  predict->add_option("--lyrics", p_lyrics, "plain lyrics")->required();
  predict->add_option("--prompt", p_prompt, "prompt JSON (global + segment texts)");
  predict->add_option("--structure", p_structure, "structure JSON");
  predict->add_option("--total", p_total, "target song length in seconds");
  predict->add_option("--out", p_name, "output file name in the run dir");

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  try {
    std::vector<std::string> sets = overrides;
    if (!run_dir.empty()) sets.push_back("paths.run_dir=" + json(run_dir).dump());
    if (!manifest.empty()) sets.push_back("paths.manifest=" + json(manifest).dump());
    if (!checkpoint.empty()) sets.push_back("paths.checkpoint=" + json(checkpoint).dump());
    if (cfg) sets.push_back("guidance.cfg=" + json(*cfg).dump());
    if (cfg_n) sets.push_back("guidance.cfg_n=" + json(*cfg_n).dump());
    std::optional<fs::path> file;
    if (!config_file.empty()) file = config_file;
    RunConfig config;
    try {
      config = LoadRunConfig(file, sets);
    } catch (const ValidationError& e) {
      err << "usage error: " << e.what() << "\n";
      return kExitUsage;
    }

    if (*pipeline) CmdPipeline(config, stage);
    if (*train) CmdTrain(config);
    if (*generate) CmdGenerate(config, gen);
    if (*eval) CmdEval(config, ev);
    if (*predict) CmdPredictDurations(config, p_lyrics, p_prompt, p_structure, p_total, p_name);
    return kExitOk;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
}

}  // namespace segflow
