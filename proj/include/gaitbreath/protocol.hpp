#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "gaitbreath/pipeline.hpp"

namespace gaitbreath {

struct LabeledFeatures {
  std::string id;
  std::string subject_id;
  Label label = Label::Normal;
  FeatureVector features{};
};

struct GsaDiagnostics {
  std::size_t runs = 0;
  std::size_t accepted_steps = 0;
  /// Accepted steps whose objective rose above the previous trace entry.
  std::size_t trace_increases = 0;
};

struct FeatureTable {
  std::vector<LabeledFeatures> rows;
  GsaDiagnostics gsa;
};

/// Runs the per-sample pipeline over a dataset, in parallel across samples.
/// Rows keep the input order.
FeatureTable compute_features(const std::vector<DepthSample>& samples, const PipelineConfig& cfg,
                              PipelineVariant variant = {});

std::vector<DepthSample> load_dataset(const std::filesystem::path& dataset);

struct Split {
  std::vector<std::string> train_subjects;
  std::vector<std::string> test_subjects;
};

struct SplitPlan {
  std::vector<Split> splits;
  /// Draws discarded because a side lacked one of the classes.
  std::size_t resampled = 0;
};

/// Subject-disjoint random splits: round(2S/3) training subjects out of S.
/// Split k depends only on (seed, k).
SplitPlan make_splits(const std::vector<LabeledFeatures>& rows, std::size_t count,
                      std::uint64_t seed);

/// Throws ProtocolError if any sample id or subject lands on both sides.
void check_disjoint(const Split& split, const std::vector<LabeledFeatures>& rows);

struct MetricSummary {
  double mean = 0.0;
  double std = 0.0;
};

struct ProtocolResult {
  std::vector<Metrics> per_split;
  MetricSummary accuracy, precision, recall, f1;
  std::size_t resampled = 0;
};

ProtocolResult run_protocol(const std::vector<LabeledFeatures>& rows, const SplitPlan& plan,
                            const SvmConfig& svm);

namespace serial {
ProtocolResult run_protocol(const std::vector<LabeledFeatures>& rows, const SplitPlan& plan,
                            const SvmConfig& svm);
}  // namespace serial

struct AblationRow {
  PipelineVariant variant;
  ProtocolResult result;
  GsaDiagnostics gsa;
};

struct AblationReport {
  std::vector<AblationRow> rows;
  std::size_t splits = 0;
  std::uint64_t seed = 0;
  std::size_t samples = 0;
  std::size_t subjects = 0;
  std::size_t resampled = 0;
  std::string config_hash;
};

/// Full pipeline only.
AblationReport run_benchmark(const std::vector<DepthSample>& samples, const PipelineConfig& cfg,
                             std::size_t splits, std::uint64_t seed);

/// The four extraction x processing variants on one shared split plan.
AblationReport run_ablation(const std::vector<DepthSample>& samples, const PipelineConfig& cfg,
                            std::size_t splits, std::uint64_t seed);

nlohmann::ordered_json report_to_json(const AblationReport& report);

}  // namespace gaitbreath
