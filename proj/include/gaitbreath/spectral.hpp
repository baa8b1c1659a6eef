#pragma once

#include <array>
#include <span>
#include <vector>

#include "gaitbreath/channels.hpp"
#include "gaitbreath/preprocess.hpp"

namespace gaitbreath {

enum class WindowKind { Hann, Rectangular };

struct WelchConfig {
  /// Segment length in seconds, capped at the record length. <= 0 means one
  /// segment spanning the whole record.
  double segment_seconds = 8.0;
  double overlap = 0.5;
  WindowKind window = WindowKind::Hann;

  void validate() const;
  /// One rectangular segment over the whole record: a plain periodogram.
  static WelchConfig whole_record_periodogram() { return {0.0, 0.0, WindowKind::Rectangular}; }
};

/// One-sided power spectral density (units^2 / Hz).
struct PowerSpectrum {
  std::vector<double> freqs;
  std::vector<double> power;
  std::size_t segment_length = 0;
  std::size_t segment_count = 0;
  double overlap = 0.0;
  WindowKind window = WindowKind::Hann;

  double bin_width() const { return freqs.size() > 1 ? freqs[1] - freqs[0] : 0.0; }
};

/// Welch average of mean-removed, windowed periodograms. Scaled so that the
/// PSD integrates to the signal variance.
PowerSpectrum welch_psd(std::span<const double> x, double fs, const WelchConfig& cfg = {});

/// Plain DFT power of one segment; O(n^2). Used as an independent check of the
/// FFT path.
std::vector<double> dft_power(std::span<const double> x);

/// (P(f_m) + P(2 f_m)) / sum of in-band P, with f_m the in-band argmax.
/// P(2 f_m) is read at the nearest bin and is 0 beyond the spectrum. Zero
/// in-band power gives 0.
double periodicity_index(const PowerSpectrum& spec, double low_hz = kBandLowHz,
                         double high_hz = kBandHighHz);

struct SelectionResult {
  std::size_t channel = 0;
  std::array<double, kChannelCount> index{};
  std::array<bool, kChannelCount> usable{};
  Signal signal;
  double frame_rate = 0.0;
};

/// Picks the usable channel with the largest periodicity index; ties go to
/// the lower channel index.
SelectionResult select_informative(const CleanChannels& denoised, const WelchConfig& cfg = {});

}  // namespace gaitbreath
