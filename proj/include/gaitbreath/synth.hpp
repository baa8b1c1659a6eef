#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <json.hpp>

#include "gaitbreath/data_io.hpp"

namespace gaitbreath {

struct GaitNoise {
  double step_freq_min_hz = 1.6;
  double step_freq_max_hz = 2.2;
  /// Whole-body forward bob at the step frequency; common to every body part.
  double bob_amplitude_mm = 15.0;
  /// Pelvic tilt at the stride frequency (half the step frequency), seen only
  /// by the pelvis.
  double pelvis_sway_mm = 10.0;
  /// Shoulder rotation at the stride frequency; moves the lateral torso halves
  /// in opposite directions.
  double trunk_rotation_mm = 10.0;
  /// Slow wandering of the head and of the pelvis inside the breathing band,
  /// as RMS. The strength is redrawn per walk.
  double head_motion_mm = 4.0;
  double pelvis_motion_mm = 4.0;
};

/// Synthetic walking-breath recordings with known ground truth.
struct SynthConfig {
  int subjects = 15;
  int walks_per_class = 3;
  double fs = 30.0;
  int width = 64;
  int height = 48;
  double duration_min_s = 6.0;
  double duration_max_s = 18.0;
  double rate_min_hz = 0.3;
  double rate_max_hz = 0.5;
  double normal_amplitude_min_mm = 3.5;
  double normal_amplitude_max_mm = 4.5;
  double deep_multiplier = 2.5;
  GaitNoise gait;
  /// Per-pixel depth noise at 1 m; grows with the square of the distance.
  double sensor_noise_mm = 1.0;
  double dropout_probability = 0.01;
  /// Subject chest share of the breathing motion, drawn uniformly.
  double chest_weight_min = 1.0 / 3.0;
  double chest_weight_max = 2.0 / 3.0;
  double start_distance_m = 6.0;
  double end_distance_m = 1.2;
  std::uint64_t seed = 7;

  void validate() const;
  /// Same layout, every noise source off.
  SynthConfig noise_free() const;
};

nlohmann::ordered_json synth_config_to_json(const SynthConfig& cfg);
SynthConfig synth_config_from_json(const nlohmann::json& j);

/// Ground truth behind one rendered walk.
struct SynthTruth {
  double rate_hz = 0.0;
  double phase = 0.0;
  double amplitude_mm = 0.0;
  /// Breathing amplitude seen by the chest and abdomen regions.
  double chest_amplitude_mm = 0.0;
  double abdomen_amplitude_mm = 0.0;
  double duration_s = 0.0;

  double breathing(double t) const;
};

struct SynthSample {
  DepthSample sample;
  SynthTruth truth;
};

/// Walk `walk` (0..2*walks_per_class-1; the first half normal) of `subject`.
/// Depends only on (seed, subject, walk).
SynthSample generate_sample(const SynthConfig& cfg, int subject, int walk);

std::vector<SynthSample> generate_dataset(const SynthConfig& cfg);

/// Writes every sample directory and manifest.json under dir.
void write_dataset(const SynthConfig& cfg, const std::filesystem::path& dir);

}  // namespace gaitbreath
