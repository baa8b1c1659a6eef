#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "gaitbreath/data_io.hpp"
#include "gaitbreath/features.hpp"
#include "gaitbreath/gsa.hpp"
#include "gaitbreath/preprocess.hpp"
#include "gaitbreath/roi.hpp"
#include "gaitbreath/spectral.hpp"
#include "gaitbreath/svm.hpp"

namespace gaitbreath {

/// Every stage parameter in one place. Defaults match the individual stage
/// configs.
struct PipelineConfig {
  ChestWallSide chestwall_side = ChestWallSide::Right;
  PreprocessConfig preprocess;
  GsaConfig gsa;
  WelchConfig selection_welch;
  FeatureConfig features;
  SvmConfig svm;

  void validate() const;
};

nlohmann::ordered_json config_to_json(const PipelineConfig& cfg);
/// Applies the keys present in j on top of base; unknown keys are rejected.
PipelineConfig config_from_json(const nlohmann::json& j, PipelineConfig base = {});
PipelineConfig read_config(const std::filesystem::path& path);
/// FNV-1a over the canonical JSON dump, as 16 hex digits.
std::string config_hash(const PipelineConfig& cfg);

enum class Extraction { MultiRoiSelection, SingleRoi };
enum class Processing { Bandpass, BandpassGsa };

struct PipelineVariant {
  Extraction extraction = Extraction::MultiRoiSelection;
  Processing processing = Processing::BandpassGsa;
};

std::string extraction_label(Extraction e);
std::string processing_label(Processing p);

struct SampleArtifacts {
  RawChannels raw;
  CleanChannels clean;
  std::optional<GsaResult> gsa;
  CleanChannels denoised;
  SelectionResult selection;
  FeatureVector features{};
};

/// extract -> preprocess -> [denoise] -> select -> features for one sample.
/// Single-ROI extraction keeps only the chest-pelvis channel.
SampleArtifacts process_sample(const DepthSample& sample, const PipelineConfig& cfg,
                               PipelineVariant variant = {});

/// Keeps only the chest-pelvis channel; the others are fully masked.
RawChannels single_roi(const RawChannels& raw);

}  // namespace gaitbreath
