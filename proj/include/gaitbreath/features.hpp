#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>

#include "gaitbreath/spectral.hpp"

namespace gaitbreath {

inline constexpr std::size_t kFeatureCount = 15;

// 4 time-domain, 4 short-term, 5 time-frequency, 2 self-defined.
inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "mean",
    "std",
    "rms",
    "peak_to_peak",
    "short_energy_mean",
    "short_energy_std",
    "short_zero_cross_mean",
    "short_zero_cross_std",
    "spectral_centroid_hz",
    "spectral_bandwidth_hz",
    "spectral_entropy",
    "inband_peak_ratio",
    "inband_power",
    "autocorr_std",
    "respiratory_rate_bpm",
};

namespace feature {
enum : std::size_t {
  Mean = 0,
  Std,
  Rms,
  PeakToPeak,
  ShortEnergyMean,
  ShortEnergyStd,
  ShortZeroCrossMean,
  ShortZeroCrossStd,
  SpectralCentroid,
  SpectralBandwidth,
  SpectralEntropy,
  InbandPeakRatio,
  InbandPower,
  AutocorrStd,
  RespiratoryRate,
};
}  // namespace feature

using FeatureVector = std::array<double, kFeatureCount>;

struct FeatureConfig {
  WelchConfig welch;
  double short_window_seconds = 1.0;
  double short_overlap = 0.5;
  double min_seconds = 5.0;
  double low_hz = kBandLowHz;
  double high_hz = kBandHighHz;

  void validate() const;
};

FeatureVector extract_features(std::span<const double> s, double fs, const FeatureConfig& cfg = {});

/// Biased autocorrelation normalised to 1 at lag 0, lags 0..n-1. All zeros
/// for a zero signal.
std::vector<double> autocorrelation(std::span<const double> s);

}  // namespace gaitbreath
