#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "gaitbreath/data_io.hpp"
#include "gaitbreath/features.hpp"

namespace gaitbreath {

/// Per-feature z-scoring fitted on training data. A feature with zero
/// training variance keeps std = 1.
struct Standardizer {
  FeatureVector mean{};
  FeatureVector std{};

  static Standardizer fit(std::span<const FeatureVector> xs);
  FeatureVector apply(const FeatureVector& x) const;
};

struct SvmConfig {
  double C = 1.0;
  std::uint64_t seed = 7;
  double tol = 1e-4;
  std::size_t max_iters = 1'000'000;

  void validate() const;
};

struct TrainedModel {
  FeatureVector weights{};
  double bias = 0.0;
  Standardizer standardizer;
  double C = 1.0;
  std::uint64_t seed = 7;
  std::size_t iterations = 0;
  double kkt_gap = 0.0;

  /// w . standardize(x) + b
  double decision(const FeatureVector& x) const;
};

/// Linear soft-margin SVM, min 1/2 |w|^2 + C sum hinge(y (w.x + b)), on
/// standardized features. Solved through its dual by two-coordinate (SMO)
/// updates until the maximal KKT violation is below tol; the seed fixes the
/// order in which tied candidates are visited. Deep is the +1 class.
TrainedModel train_svm(std::span<const FeatureVector> xs, std::span<const Label> labels,
                       const SvmConfig& cfg = {});

/// Primal objective on standardized inputs.
double svm_objective(const TrainedModel& model, std::span<const FeatureVector> xs,
                     std::span<const Label> labels);

struct Prediction {
  Label label = Label::Normal;
  double margin = 0.0;
};

/// Positive margin -> deep; zero margin -> normal.
Prediction predict(const TrainedModel& model, const FeatureVector& x);

struct Metrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  bool precision_undefined = false;
  bool recall_undefined = false;
  bool f1_undefined = false;
};

/// Deep is the positive class. Zero denominators give 0 and raise the flag.
Metrics evaluate(std::span<const Label> predicted, std::span<const Label> truth);

nlohmann::ordered_json model_to_json(const TrainedModel& model);
TrainedModel model_from_json(const nlohmann::json& j);
void write_model(const TrainedModel& model, const std::filesystem::path& path,
                 const std::string& config_hash = {});
TrainedModel read_model(const std::filesystem::path& path);

nlohmann::ordered_json features_to_json(const FeatureVector& f);
FeatureVector features_from_json(const nlohmann::json& j);

}  // namespace gaitbreath
