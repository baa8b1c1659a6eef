#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "gaitbreath/channels.hpp"

namespace gaitbreath {

inline constexpr double kBandLowHz = 0.167;
inline constexpr double kBandHighHz = 0.667;

/// One biquad, a0 normalised to 1.
struct Biquad {
  double b0 = 1, b1 = 0, b2 = 0;
  double a1 = 0, a2 = 0;
};

/// Cascade of second-order sections with an overall gain.
struct SosFilter {
  std::vector<Biquad> sections;
  double gain = 1.0;
};

/// Digital Butterworth bandpass of the given (even) order via bilinear
/// transform with prewarped corners. Unit gain at the geometric centre.
SosFilter design_butterworth_bandpass(int order, double low_hz, double high_hz, double fs);

/// Complex frequency response magnitude of the cascade at f Hz.
double magnitude_response(const SosFilter& filter, double f_hz, double fs);

/// Causal filtering, transposed direct form II, starting from the steady state
/// of a constant input equal to x[0].
Signal sos_filter(const SosFilter& filter, std::span<const double> x);

/// Forward-backward filtering with odd reflection padding of `pad` samples on
/// each side (clamped to length-1).
Signal filtfilt(const SosFilter& filter, std::span<const double> x, std::size_t pad);

struct PreprocessConfig {
  double z_thresh = 3.5;
  int filter_order = 4;
  double low_hz = kBandLowHz;
  double high_hz = kBandHighHz;
  double pad_seconds = 3.0;

  void validate() const;
};

/// Replaces masked samples and robust-z outliers (median, 1.4826*MAD) by
/// linear interpolation between the nearest surviving neighbours, extending
/// the nearest value over boundary runs. Detection repeats on the repaired
/// signal until nothing is flagged, so the result is a fixed point.
Signal repair_outliers(std::span<const double> x, std::span<const std::uint8_t> valid,
                       double z_thresh);
Signal repair_outliers(std::span<const double> x, double z_thresh);

/// x minus its ordinary least-squares line.
Signal detrend_least_squares(std::span<const double> x);

/// Zero-phase Butterworth bandpass over [low_hz, high_hz].
Signal bandpass(std::span<const double> x, double fs, const PreprocessConfig& cfg = {});

/// repair -> detrend -> bandpass on every channel. A channel that cannot be
/// repaired is flagged unusable; the call fails only if all six are.
CleanChannels preprocess_all(const RawChannels& raw, const PreprocessConfig& cfg = {});

}  // namespace gaitbreath
