#include "gaitbreath/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <ostream>

#include "gaitbreath/error.hpp"
#include "gaitbreath/pipeline.hpp"
#include "gaitbreath/protocol.hpp"
#include "gaitbreath/synth.hpp"

namespace gaitbreath {

namespace fs = std::filesystem;

namespace {

void write_json(const fs::path& path, const nlohmann::ordered_json& j) {
  write_text(path, j.dump(2) + "\n");
}

nlohmann::json read_json(const fs::path& path) {
  try {
    return nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path.string() + ": invalid JSON: " + e.what());
  }
}

void write_trace(const fs::path& path, const std::vector<double>& trace) {
  std::string s = "iteration,objective\n";
  for (std::size_t i = 0; i < trace.size(); ++i) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i, trace[i]);
    s += buf;
  }
  write_text(path, s);
}

nlohmann::ordered_json selection_json(const SelectionResult& sel, const std::string& hash) {
  nlohmann::ordered_json j;
  j["selected"] = std::string(kChannelNames[sel.channel]);
  j["selected_index"] = sel.channel;
  auto channels = nlohmann::ordered_json::array();
  for (std::size_t c = 0; c < kChannelCount; ++c) {
    nlohmann::ordered_json ch;
    ch["name"] = std::string(kChannelNames[c]);
    ch["usable"] = sel.usable[c];
    ch["periodicity_index"] = sel.usable[c] ? nlohmann::ordered_json(sel.index[c]) : nullptr;
    channels.push_back(std::move(ch));
  }
  j["channels"] = std::move(channels);
  j["config_hash"] = hash;
  return j;
}

nlohmann::ordered_json feature_file_json(const std::string& id, double frame_rate,
                                         const FeatureVector& f, const std::string& hash) {
  nlohmann::ordered_json j;
  j["id"] = id;
  j["frame_rate"] = frame_rate;
  j["features"] = features_to_json(f);
  j["config_hash"] = hash;
  return j;
}

struct FeatureFile {
  std::string id;
  FeatureVector features{};
};

FeatureFile read_feature_file(const fs::path& path) {
  const nlohmann::json j = read_json(path);
  if (!j.is_object() || !j.contains("features"))
    throw FormatError(path.string() + ": missing \"features\"");
  FeatureFile f;
  f.id = j.value("id", path.parent_path().filename().string());
  f.features = features_from_json(j.at("features"));
  return f;
}

nlohmann::ordered_json prediction_json(const std::string& id, const Prediction& p,
                                       const std::string& hash) {
  nlohmann::ordered_json j;
  j["id"] = id;
  j["label"] = std::string(label_name(p.label));
  j["margin"] = p.margin;
  j["config_hash"] = hash;
  return j;
}

bool is_sample_dir(const fs::path& p) { return fs::is_directory(p) && fs::exists(p / "meta.json"); }

// ---------------------------------------------------------------------------
// Staged execution for `run`

enum class Stage { Load, Extract, Preprocess, Denoise, Select, Features, Predict };

constexpr std::array<std::string_view, 7> kStageNames = {
    "load", "extract", "preprocess", "denoise", "select", "features", "predict"};

Stage stage_from_name(const std::string& name) {
  for (std::size_t i = 1; i < kStageNames.size(); ++i)
    if (kStageNames[i] == name) return static_cast<Stage>(i);
  throw ParameterError("unknown stage \"" + name + "\"");
}

struct StagedSample {
  std::string id;
  fs::path dir;
  std::optional<DepthSample> sample;
  std::optional<RawChannels> raw;
  std::optional<CleanChannels> clean;
  std::optional<GsaResult> gsa;
  std::optional<SelectionResult> selection;
  std::optional<FeatureVector> features;
  std::optional<Prediction> prediction;

  bool failed = false;
  Stage failed_stage = Stage::Load;
  ErrorKind kind = ErrorKind::Numerical;
  std::string message;
};

void run_stages(StagedSample& s, const PipelineConfig& cfg, Stage last, const TrainedModel* model) {
  Stage stage = Stage::Load;
  try {
    s.sample = read_depth_sample(s.dir);
    stage = Stage::Extract;
    const RoiSet rois = build_rois(s.sample->joints, s.sample->depth.width,
                                   s.sample->depth.height, cfg.chestwall_side);
    s.raw = extract_raw_channels(s.sample->depth, rois);
    if (last == Stage::Extract) return;
    stage = Stage::Preprocess;
    s.clean = preprocess_all(*s.raw, cfg.preprocess);
    if (last == Stage::Preprocess) return;
    stage = Stage::Denoise;
    s.gsa = denoise(*s.clean, cfg.gsa);
    if (last == Stage::Denoise) return;
    stage = Stage::Select;
    s.selection = select_informative(s.gsa->denoised, cfg.selection_welch);
    if (last == Stage::Select) return;
    stage = Stage::Features;
    s.features = extract_features(s.selection->signal, s.selection->frame_rate, cfg.features);
    if (last == Stage::Features || model == nullptr) return;
    stage = Stage::Predict;
    s.prediction = predict(*model, *s.features);
  } catch (const Error& e) {
    s.failed = true;
    s.failed_stage = stage;
    s.kind = e.kind();
    s.message = e.what();
  } catch (const std::exception& e) {
    s.failed = true;
    s.failed_stage = stage;
    s.kind = ErrorKind::Numerical;
    s.message = e.what();
  }
}

void write_stages(const StagedSample& s, const fs::path& out, const std::string& hash) {
  fs::create_directories(out);
  if (s.raw) write_channels(*s.raw, out / "channels.csv");
  if (s.clean) write_clean_channels(*s.clean, out / "clean.csv");
  if (s.gsa) {
    write_clean_channels(s.gsa->denoised, out / "denoised.csv");
    write_trace(out / "trace.csv", s.gsa->objective_trace);
  }
  if (s.selection) {
    write_time_series({s.selection->frame_rate, s.selection->signal}, out / "selected.csv");
    write_json(out / "indices.json", selection_json(*s.selection, hash));
  }
  if (s.features)
    write_json(out / "features.json",
               feature_file_json(s.id, s.selection->frame_rate, *s.features, hash));
  if (s.prediction) write_json(out / "prediction.json", prediction_json(s.id, *s.prediction, hash));
}

[[noreturn]] void report_failure(const StagedSample& s, const fs::path& out) {
  fs::create_directories(out);
  nlohmann::ordered_json j;
  j["sample"] = s.id;
  j["stage"] = std::string(kStageNames[static_cast<std::size_t>(s.failed_stage)]);
  j["kind"] = kind_name(s.kind);
  j["message"] = s.message;
  write_json(out / "failure.json", j);
  throw Error(s.kind, "stage " + j["stage"].get<std::string>() + " failed for " + s.id + ": " +
                          s.message);
}

int command_run(const fs::path& input, const fs::path& out, const PipelineConfig& cfg,
                const std::optional<fs::path>& model_path, const std::string& stop_after,
                std::ostream& log) {
  const std::string hash = config_hash(cfg);
  const Stage last = stop_after.empty() ? Stage::Predict : stage_from_name(stop_after);
  std::optional<TrainedModel> model;
  if (model_path) model = read_model(*model_path);
  const TrainedModel* model_ptr = model ? &*model : nullptr;

  if (is_sample_dir(input)) {
    StagedSample s;
    s.dir = input;
    s.id = input.filename().string();
    if (s.id.empty()) s.id = input.parent_path().filename().string();
    run_stages(s, cfg, last, model_ptr);
    if (s.failed) report_failure(s, out);
    write_stages(s, out, hash);
    if (s.prediction)
      log << s.id << ' ' << label_name(s.prediction->label) << ' ' << s.prediction->margin << '\n';
    return 0;
  }

  const auto dirs = read_manifest(resolve_manifest(input));
  std::vector<StagedSample> samples(dirs.size());
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    samples[i].dir = dirs[i];
    samples[i].id = dirs[i].filename().string();
  }
#pragma omp parallel for schedule(dynamic)
  for (long k = 0; k < static_cast<long>(samples.size()); ++k)
    run_stages(samples[static_cast<std::size_t>(k)], cfg, last, model_ptr);
  for (const auto& s : samples)
    if (s.failed) report_failure(s, out);
  for (const auto& s : samples) write_stages(s, out / s.id, hash);

  if (last != Stage::Predict) return 0;
  if (model) {
    auto preds = nlohmann::ordered_json::array();
    for (const auto& s : samples) preds.push_back(prediction_json(s.id, *s.prediction, hash));
    write_json(out / "predictions.json", nlohmann::ordered_json{{"predictions", preds},
                                                                 {"config_hash", hash}});
    return 0;
  }
  std::vector<FeatureVector> xs;
  std::vector<Label> ys;
  for (const auto& s : samples) {
    xs.push_back(*s.features);
    ys.push_back(s.sample->label);
  }
  const TrainedModel trained = train_svm(xs, ys, cfg.svm);
  write_model(trained, out / "model.json", hash);
  log << "trained on " << xs.size() << " samples\n";
  return 0;
}

// ---------------------------------------------------------------------------

PipelineConfig load_config(const std::string& path) {
  PipelineConfig cfg = path.empty() ? PipelineConfig{} : read_config(path);
  cfg.validate();
  return cfg;
}

std::string default_id(const fs::path& in) {
  const auto parent = fs::absolute(in).parent_path().filename().string();
  return parent.empty() ? in.stem().string() : parent;
}

fs::path feature_path(const fs::path& dir, const std::string& id) {
  if (fs::exists(dir / (id + ".json"))) return dir / (id + ".json");
  if (fs::exists(dir / id / "features.json")) return dir / id / "features.json";
  throw IoError("no features for sample " + id + " under " + dir.string());
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Deep-breath identification from depth video of a walking person", "gaitbreath"};
  app.require_subcommand(1);
  std::function<int()> action;

  std::string config_path;
  const auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Pipeline configuration JSON")->check(CLI::ExistingFile);
  };

  // extract
  std::string sample_dir, in_path, out_path, side;
  auto* extract = app.add_subcommand("extract", "Six raw channels from a depth sample");
  extract->add_option("--sample", sample_dir)->required();
  extract->add_option("--out", out_path)->required();
  auto* side_opt = extract->add_option("--chestwall-side", side)->check(CLI::IsMember({"left", "right"}));
  add_config(extract);
  extract->callback([&] {
    action = [&] {
      PipelineConfig cfg = load_config(config_path);
      if (side_opt->count()) cfg.chestwall_side = side == "left" ? ChestWallSide::Left : ChestWallSide::Right;
      const DepthSample s = read_depth_sample(sample_dir);
      const RoiSet rois = build_rois(s.joints, s.depth.width, s.depth.height, cfg.chestwall_side);
      write_channels(extract_raw_channels(s.depth, rois), out_path);
      return 0;
    };
  });

  // preprocess
  int order = 0;
  double zthresh = 0.0;
  auto* pre = app.add_subcommand("preprocess", "Outlier repair, detrend and bandpass");
  pre->add_option("--in", in_path)->required();
  pre->add_option("--out", out_path)->required();
  auto* order_opt = pre->add_option("--order", order);
  auto* z_opt = pre->add_option("--zthresh", zthresh);
  add_config(pre);
  pre->callback([&] {
    action = [&] {
      PipelineConfig cfg = load_config(config_path);
      if (order_opt->count()) cfg.preprocess.filter_order = order;
      if (z_opt->count()) cfg.preprocess.z_thresh = zthresh;
      cfg.validate();
      write_clean_channels(preprocess_all(read_channels(in_path), cfg.preprocess), out_path);
      return 0;
    };
  });

  // denoise
  double mu = 0.0;
  int window = 0, max_iters = 0;
  std::string trace_path;
  bool dense = false;
  auto* den = app.add_subcommand("denoise", "Graph-Laplacian smoothing with a learned metric");
  den->add_option("--in", in_path)->required();
  den->add_option("--out", out_path)->required();
  auto* mu_opt = den->add_option("--mu", mu);
  auto* window_opt = den->add_option("--window", window);
  auto* iters_opt = den->add_option("--max-iters", max_iters);
  den->add_option("--trace", trace_path);
  den->add_flag("--dense", dense, "Connect every pair of nodes");
  add_config(den);
  den->callback([&] {
    action = [&] {
      PipelineConfig cfg = load_config(config_path);
      if (mu_opt->count()) cfg.gsa.mu = mu;
      if (window_opt->count()) cfg.gsa.neighborhood.window = window;
      if (iters_opt->count()) cfg.gsa.max_iters = max_iters;
      if (dense) cfg.gsa.neighborhood.dense = true;
      cfg.validate();
      const GsaResult r = denoise(read_clean_channels(in_path), cfg.gsa);
      write_clean_channels(r.denoised, out_path);
      if (!trace_path.empty()) write_trace(trace_path, r.objective_trace);
      return 0;
    };
  });

  // select
  std::string report_path;
  auto* sel = app.add_subcommand("select", "Pick the most periodic channel");
  sel->add_option("--in", in_path)->required();
  sel->add_option("--out", out_path)->required();
  sel->add_option("--report", report_path)->required();
  add_config(sel);
  sel->callback([&] {
    action = [&] {
      const PipelineConfig cfg = load_config(config_path);
      const SelectionResult r = select_informative(read_clean_channels(in_path), cfg.selection_welch);
      write_time_series({r.frame_rate, r.signal}, out_path);
      write_json(report_path, selection_json(r, config_hash(cfg)));
      return 0;
    };
  });

  // features
  std::string id;
  auto* feat = app.add_subcommand("features", "Fifteen features of the selected signal");
  feat->add_option("--in", in_path)->required();
  feat->add_option("--out", out_path)->required();
  feat->add_option("--id", id, "Sample id; defaults to the input's directory name");
  add_config(feat);
  feat->callback([&] {
    action = [&] {
      const PipelineConfig cfg = load_config(config_path);
      const TimeSeries ts = read_time_series(in_path);
      const FeatureVector f = extract_features(ts.values, ts.frame_rate, cfg.features);
      write_json(out_path, feature_file_json(id.empty() ? default_id(in_path) : id, ts.frame_rate, f,
                                             config_hash(cfg)));
      return 0;
    };
  });

  // train
  std::string features_dir, labels_path;
  double c_value = 0.0;
  std::uint64_t seed = 0;
  auto* train = app.add_subcommand("train", "Fit the linear SVM");
  train->add_option("--features", features_dir)->required();
  train->add_option("--labels", labels_path, "Dataset manifest or directory")->required();
  train->add_option("--out", out_path)->required();
  auto* c_opt = train->add_option("--C", c_value);
  auto* seed_opt = train->add_option("--seed", seed);
  add_config(train);
  train->callback([&] {
    action = [&] {
      PipelineConfig cfg = load_config(config_path);
      if (c_opt->count()) cfg.svm.C = c_value;
      if (seed_opt->count()) cfg.svm.seed = seed;
      cfg.validate();
      std::vector<FeatureVector> xs;
      std::vector<Label> ys;
      for (const auto& dir : read_manifest(resolve_manifest(labels_path))) {
        const std::string sid = dir.filename().string();
        xs.push_back(read_feature_file(feature_path(features_dir, sid)).features);
        ys.push_back(read_sample_meta(dir).label);
      }
      write_model(train_svm(xs, ys, cfg.svm), out_path, config_hash(cfg));
      return 0;
    };
  });

  // predict
  std::string model_path, features_path;
  auto* pred = app.add_subcommand("predict", "Classify one feature file");
  pred->add_option("--model", model_path)->required();
  pred->add_option("--features", features_path)->required();
  pred->add_option("--out", out_path, "Write the prediction here instead of stdout");
  pred->callback([&] {
    action = [&] {
      const TrainedModel model = read_model(model_path);
      const FeatureFile f = read_feature_file(features_path);
      const nlohmann::json mj = read_json(model_path);
      const auto j = prediction_json(f.id, predict(model, f.features), mj.value("config_hash", ""));
      if (out_path.empty()) out << j.dump(2) << '\n';
      else write_json(out_path, j);
      return 0;
    };
  });

  // run
  std::string input, stop_after;
  auto* run = app.add_subcommand("run", "End-to-end pipeline on a sample or dataset");
  run->add_option("--input", input, "Sample directory, dataset directory or manifest")->required();
  run->add_option("--out", out_path)->required();
  auto* run_model_opt = run->add_option("--model", model_path);
  run->add_option("--stop-after", stop_after)
      ->check(CLI::IsMember({"extract", "preprocess", "denoise", "select", "features", "predict"}));
  add_config(run);
  run->callback([&] {
    action = [&] {
      const PipelineConfig cfg = load_config(config_path);
      std::optional<fs::path> mp;
      if (run_model_opt->count()) mp = model_path;
      return command_run(input, out_path, cfg, mp, stop_after, out);
    };
  });

  // synth
  std::string synth_config;
  auto* syn = app.add_subcommand("synth", "Render a synthetic dataset");
  syn->add_option("--config", synth_config, "Generator configuration JSON")->check(CLI::ExistingFile);
  syn->add_option("--out", out_path)->required();
  syn->callback([&] {
    action = [&] {
      const SynthConfig sc = synth_config.empty() ? SynthConfig{}
                                                  : synth_config_from_json(read_json(synth_config));
      write_dataset(sc, out_path);
      return 0;
    };
  });

  // bench / ablate
  std::string dataset;
  std::size_t splits = 200;
  const auto add_protocol = [&](CLI::App* sub) {
    sub->add_option("--dataset", dataset)->required();
    sub->add_option("--out", out_path)->required();
    sub->add_option("--splits", splits)->check(CLI::PositiveNumber);
    add_config(sub);
  };
  auto* bench = app.add_subcommand("bench", "Repeated subject-disjoint evaluation");
  add_protocol(bench);
  auto* bench_seed = bench->add_option("--seed", seed);
  auto* ablate = app.add_subcommand("ablate", "Four-variant ablation on shared splits");
  add_protocol(ablate);
  auto* ablate_seed = ablate->add_option("--seed", seed);
  const auto protocol_action = [&](bool all_variants, CLI::Option* seed_opt_p) {
    return [&, all_variants, seed_opt_p] {
      PipelineConfig cfg = load_config(config_path);
      if (seed_opt_p->count()) cfg.svm.seed = seed;
      const auto samples = load_dataset(dataset);
      const AblationReport r = all_variants ? run_ablation(samples, cfg, splits, cfg.svm.seed)
                                            : run_benchmark(samples, cfg, splits, cfg.svm.seed);
      write_json(out_path, report_to_json(r));
      for (const auto& row : r.rows)
        out << extraction_label(row.variant.extraction) << " / "
            << processing_label(row.variant.processing) << ": accuracy "
            << row.result.accuracy.mean << " +- " << row.result.accuracy.std << '\n';
      return 0;
    };
  };
  bench->callback([&] { action = protocol_action(false, bench_seed); });
  ablate->callback([&] { action = protocol_action(true, ablate_seed); });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return exit_code(ErrorKind::Parameter);
  }

  try {
    return action ? action() : 0;
  } catch (const Error& e) {
    err << "error (" << kind_name(e.kind()) << "): " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error (io): " << e.what() << '\n';
    return exit_code(ErrorKind::Io);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace gaitbreath
