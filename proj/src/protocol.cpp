#include "gaitbreath/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include "gaitbreath/error.hpp"

namespace gaitbreath {

namespace {

constexpr int kMaxSplitAttempts = 100;

std::mt19937_64 split_stream(std::uint64_t seed, std::size_t index, int attempt) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    static_cast<std::uint32_t>(attempt)};
  return std::mt19937_64(seq);
}

struct SubjectClasses {
  bool normal = false;
  bool deep = false;
};

std::map<std::string, SubjectClasses> subject_classes(const std::vector<LabeledFeatures>& rows) {
  std::map<std::string, SubjectClasses> out;
  for (const auto& r : rows) {
    auto& c = out[r.subject_id];
    (r.label == Label::Deep ? c.deep : c.normal) = true;
  }
  return out;
}

bool both_classes(const std::vector<std::string>& subjects,
                  const std::map<std::string, SubjectClasses>& classes) {
  bool normal = false, deep = false;
  for (const auto& s : subjects) {
    normal = normal || classes.at(s).normal;
    deep = deep || classes.at(s).deep;
  }
  return normal && deep;
}

Metrics run_split(const std::vector<LabeledFeatures>& rows, const Split& split,
                  const SvmConfig& svm) {
  check_disjoint(split, rows);
  const std::set<std::string> train(split.train_subjects.begin(), split.train_subjects.end());
  const std::set<std::string> test(split.test_subjects.begin(), split.test_subjects.end());
  std::vector<FeatureVector> xs;
  std::vector<Label> ys;
  std::vector<const LabeledFeatures*> held_out;
  for (const auto& r : rows) {
    if (train.count(r.subject_id)) {
      xs.push_back(r.features);
      ys.push_back(r.label);
    } else if (test.count(r.subject_id)) {
      held_out.push_back(&r);
    }
  }
  const TrainedModel model = train_svm(xs, ys, svm);
  std::vector<Label> predicted, truth;
  for (const auto* r : held_out) {
    predicted.push_back(predict(model, r->features).label);
    truth.push_back(r->label);
  }
  return evaluate(predicted, truth);
}

MetricSummary summarize(const std::vector<Metrics>& all, double Metrics::*field) {
  MetricSummary s;
  if (all.empty()) return s;
  const auto n = static_cast<double>(all.size());
  for (const auto& m : all) s.mean += m.*field;
  s.mean /= n;
  double var = 0.0;
  for (const auto& m : all) var += (m.*field - s.mean) * (m.*field - s.mean);
  s.std = std::sqrt(var / n);
  return s;
}

ProtocolResult finish(std::vector<Metrics> per_split, const SplitPlan& plan) {
  ProtocolResult r;
  r.per_split = std::move(per_split);
  r.accuracy = summarize(r.per_split, &Metrics::accuracy);
  r.precision = summarize(r.per_split, &Metrics::precision);
  r.recall = summarize(r.per_split, &Metrics::recall);
  r.f1 = summarize(r.per_split, &Metrics::f1);
  r.resampled = plan.resampled;
  return r;
}

nlohmann::ordered_json summary_json(const MetricSummary& s) {
  return nlohmann::ordered_json{{"mean", s.mean}, {"std", s.std}};
}

std::size_t subject_count(const std::vector<DepthSample>& samples) {
  std::set<std::string> s;
  for (const auto& x : samples) s.insert(x.subject_id);
  return s.size();
}

}  // namespace

FeatureTable compute_features(const std::vector<DepthSample>& samples, const PipelineConfig& cfg,
                              PipelineVariant variant) {
  cfg.validate();
  FeatureTable table;
  table.rows.resize(samples.size());
  std::vector<GsaDiagnostics> diag(samples.size());
  std::vector<std::string> failures(samples.size());
  std::vector<int> failure_kind(samples.size(), -1);

#pragma omp parallel for schedule(dynamic)
  for (long k = 0; k < static_cast<long>(samples.size()); ++k) {
    const auto i = static_cast<std::size_t>(k);
    const DepthSample& s = samples[i];
    try {
      const SampleArtifacts a = process_sample(s, cfg, variant);
      table.rows[i] = {s.id, s.subject_id, s.label, a.features};
      if (a.gsa) {
        diag[i].runs = 1;
        diag[i].accepted_steps = static_cast<std::size_t>(a.gsa->accepted);
        const auto& tr = a.gsa->objective_trace;
        for (std::size_t t = 1; t < tr.size(); ++t)
          if (tr[t] > tr[t - 1]) ++diag[i].trace_increases;
      }
    } catch (const Error& e) {
      failures[i] = e.what();
      failure_kind[i] = static_cast<int>(e.kind());
    } catch (const std::exception& e) {
      failures[i] = e.what();
      failure_kind[i] = static_cast<int>(ErrorKind::Numerical);
    }
  }
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (failure_kind[i] >= 0)
      throw Error(static_cast<ErrorKind>(failure_kind[i]),
                  "sample " + samples[i].id + ": " + failures[i]);
    table.gsa.runs += diag[i].runs;
    table.gsa.accepted_steps += diag[i].accepted_steps;
    table.gsa.trace_increases += diag[i].trace_increases;
  }
  return table;
}

std::vector<DepthSample> load_dataset(const std::filesystem::path& dataset) {
  const auto dirs = read_manifest(resolve_manifest(dataset));
  std::vector<DepthSample> out;
  out.reserve(dirs.size());
  for (const auto& d : dirs) out.push_back(read_depth_sample(d));
  return out;
}

SplitPlan make_splits(const std::vector<LabeledFeatures>& rows, std::size_t count,
                      std::uint64_t seed) {
  if (count == 0) throw ParameterError("protocol: need at least one split");
  const auto classes = subject_classes(rows);
  std::size_t with_normal = 0, with_deep = 0;
  for (const auto& [_, c] : classes) {
    with_normal += c.normal;
    with_deep += c.deep;
  }
  if (with_normal < 2 || with_deep < 2)
    throw ProtocolError("protocol: need at least two subjects per class");

  std::vector<std::string> subjects;
  for (const auto& [s, _] : classes) subjects.push_back(s);
  const std::size_t n = subjects.size();
  const auto n_train = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::lround(2.0 * static_cast<double>(n) / 3.0)), 1, n - 1);

  SplitPlan plan;
  for (std::size_t k = 0; k < count; ++k) {
    bool done = false;
    for (int attempt = 0; attempt < kMaxSplitAttempts && !done; ++attempt) {
      auto rng = split_stream(seed, k, attempt);
      std::vector<std::string> order = subjects;
      std::shuffle(order.begin(), order.end(), rng);
      Split s;
      s.train_subjects.assign(order.begin(), order.begin() + static_cast<long>(n_train));
      s.test_subjects.assign(order.begin() + static_cast<long>(n_train), order.end());
      std::sort(s.train_subjects.begin(), s.train_subjects.end());
      std::sort(s.test_subjects.begin(), s.test_subjects.end());
      if (both_classes(s.train_subjects, classes) && both_classes(s.test_subjects, classes)) {
        plan.splits.push_back(std::move(s));
        done = true;
      } else {
        ++plan.resampled;
      }
    }
    if (!done) throw ProtocolError("protocol: could not draw a non-degenerate split");
  }
  return plan;
}

void check_disjoint(const Split& split, const std::vector<LabeledFeatures>& rows) {
  const std::set<std::string> train(split.train_subjects.begin(), split.train_subjects.end());
  for (const auto& s : split.test_subjects)
    if (train.count(s)) throw ProtocolError("protocol: subject " + s + " on both sides of a split");
  const std::set<std::string> test(split.test_subjects.begin(), split.test_subjects.end());
  std::set<std::string> train_ids, test_ids;
  for (const auto& r : rows) {
    if (train.count(r.subject_id)) train_ids.insert(r.id);
    if (test.count(r.subject_id)) test_ids.insert(r.id);
  }
  for (const auto& id : test_ids)
    if (train_ids.count(id)) throw ProtocolError("protocol: sample " + id + " on both sides of a split");
}

ProtocolResult run_protocol(const std::vector<LabeledFeatures>& rows, const SplitPlan& plan,
                            const SvmConfig& svm) {
  svm.validate();
  std::vector<Metrics> per_split(plan.splits.size());
  std::vector<std::string> errors(plan.splits.size());
  std::vector<int> kinds(plan.splits.size(), -1);
#pragma omp parallel for schedule(dynamic)
  for (long k = 0; k < static_cast<long>(plan.splits.size()); ++k) {
    const auto i = static_cast<std::size_t>(k);
    try {
      per_split[i] = run_split(rows, plan.splits[i], svm);
    } catch (const Error& e) {
      errors[i] = e.what();
      kinds[i] = static_cast<int>(e.kind());
    }
  }
  for (std::size_t i = 0; i < kinds.size(); ++i)
    if (kinds[i] >= 0) throw Error(static_cast<ErrorKind>(kinds[i]), errors[i]);
  return finish(std::move(per_split), plan);
}

namespace serial {
ProtocolResult run_protocol(const std::vector<LabeledFeatures>& rows, const SplitPlan& plan,
                            const SvmConfig& svm) {
  svm.validate();
  std::vector<Metrics> per_split;
  for (const auto& s : plan.splits) per_split.push_back(run_split(rows, s, svm));
  return finish(std::move(per_split), plan);
}
}  // namespace serial

namespace {

AblationReport run_variants(const std::vector<DepthSample>& samples, const PipelineConfig& cfg,
                            std::size_t splits, std::uint64_t seed,
                            const std::vector<PipelineVariant>& variants) {
  AblationReport report;
  report.splits = splits;
  report.seed = seed;
  report.samples = samples.size();
  report.subjects = subject_count(samples);
  report.config_hash = config_hash(cfg);
  std::optional<SplitPlan> plan;
  for (const auto& v : variants) {
    FeatureTable table = compute_features(samples, cfg, v);
    if (!plan) plan = make_splits(table.rows, splits, seed);
    AblationRow row;
    row.variant = v;
    row.result = run_protocol(table.rows, *plan, cfg.svm);
    row.gsa = table.gsa;
    report.rows.push_back(std::move(row));
  }
  report.resampled = plan ? plan->resampled : 0;
  return report;
}

}  // namespace

AblationReport run_benchmark(const std::vector<DepthSample>& samples, const PipelineConfig& cfg,
                             std::size_t splits, std::uint64_t seed) {
  return run_variants(samples, cfg, splits, seed, {PipelineVariant{}});
}

AblationReport run_ablation(const std::vector<DepthSample>& samples, const PipelineConfig& cfg,
                            std::size_t splits, std::uint64_t seed) {
  return run_variants(samples, cfg, splits, seed,
                      {{Extraction::MultiRoiSelection, Processing::BandpassGsa},
                       {Extraction::MultiRoiSelection, Processing::Bandpass},
                       {Extraction::SingleRoi, Processing::BandpassGsa},
                       {Extraction::SingleRoi, Processing::Bandpass}});
}

nlohmann::ordered_json report_to_json(const AblationReport& report) {
  nlohmann::ordered_json j;
  j["splits"] = report.splits;
  j["seed"] = report.seed;
  j["samples"] = report.samples;
  j["subjects"] = report.subjects;
  j["resampled_splits"] = report.resampled;
  j["config_hash"] = report.config_hash;
  auto rows = nlohmann::ordered_json::array();
  for (const auto& r : report.rows) {
    nlohmann::ordered_json row;
    row["extraction"] = extraction_label(r.variant.extraction);
    row["processing"] = processing_label(r.variant.processing);
    row["accuracy"] = summary_json(r.result.accuracy);
    row["precision"] = summary_json(r.result.precision);
    row["recall"] = summary_json(r.result.recall);
    row["f1"] = summary_json(r.result.f1);
    std::size_t undefined_precision = 0;
    for (const auto& m : r.result.per_split) undefined_precision += m.precision_undefined;
    row["splits_with_undefined_precision"] = undefined_precision;
    if (r.gsa.runs > 0) {
      row["gsa"] = {{"runs", r.gsa.runs},
                    {"accepted_steps", r.gsa.accepted_steps},
                    {"objective_increases", r.gsa.trace_increases}};
    }
    rows.push_back(std::move(row));
  }
  j["rows"] = std::move(rows);
  return j;
}

}  // namespace gaitbreath
