#include "gaitbreath/features.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gaitbreath/error.hpp"

namespace gaitbreath {

void FeatureConfig::validate() const {
  welch.validate();
  if (!(short_window_seconds > 0.0)) throw ParameterError("features: short window must be positive");
  if (!(short_overlap >= 0.0 && short_overlap < 1.0))
    throw ParameterError("features: short-window overlap must be in [0, 1)");
  if (!(0.0 < low_hz && low_hz < high_hz)) throw ParameterError("features: bad band");
}

namespace {

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

MeanStd mean_std(std::span<const double> v) {
  MeanStd r;
  if (v.empty()) return r;
  for (double x : v) r.mean += x;
  r.mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - r.mean) * (x - r.mean);
  r.std = std::sqrt(var / static_cast<double>(v.size()));
  return r;
}

}  // namespace

std::vector<double> autocorrelation(std::span<const double> s) {
  const std::size_t n = s.size();
  const double mean = mean_std(s).mean;
  std::vector<double> centred(n);
  for (std::size_t i = 0; i < n; ++i) centred[i] = s[i] - mean;
  std::vector<double> r(n, 0.0);
  double r0 = 0.0;
  for (double v : centred) r0 += v * v;
  if (r0 == 0.0) return r;
  for (std::size_t lag = 0; lag < n; ++lag) {
    double acc = 0.0;
    for (std::size_t t = 0; t + lag < n; ++t) acc += centred[t] * centred[t + lag];
    r[lag] = acc / r0;
  }
  return r;
}

FeatureVector extract_features(std::span<const double> s, double fs, const FeatureConfig& cfg) {
  cfg.validate();
  if (!(fs > 0.0)) throw ParameterError("features: sampling rate must be positive");
  const std::size_t n = s.size();
  if (static_cast<double>(n) < cfg.min_seconds * fs)
    throw ParameterError("features: signal of " + std::to_string(n) + " samples is shorter than " +
                         std::to_string(cfg.min_seconds) + " s");
  FeatureVector f{};

  // Time domain.
  const MeanStd ms = mean_std(s);
  double sq = 0.0;
  for (double v : s) sq += v * v;
  const auto [lo, hi] = std::minmax_element(s.begin(), s.end());
  f[feature::Mean] = ms.mean;
  f[feature::Std] = ms.std;
  f[feature::Rms] = std::sqrt(sq / static_cast<double>(n));
  f[feature::PeakToPeak] = *hi - *lo;

  // Short-term windows.
  const auto win = std::max<std::size_t>(2, static_cast<std::size_t>(std::lround(cfg.short_window_seconds * fs)));
  const auto hop = std::max<std::size_t>(
      1, win - static_cast<std::size_t>(std::lround(cfg.short_overlap * static_cast<double>(win))));
  std::vector<double> energy;
  std::vector<double> crossings;
  for (std::size_t start = 0; start + win <= n; start += hop) {
    double e = 0.0;
    double zc = 0.0;
    for (std::size_t i = start; i < start + win; ++i) {
      e += s[i] * s[i];
      if (i > start && s[i - 1] * s[i] < 0.0) zc += 1.0;
    }
    energy.push_back(e);
    crossings.push_back(zc);
  }
  const MeanStd es = mean_std(energy);
  const MeanStd zs = mean_std(crossings);
  f[feature::ShortEnergyMean] = es.mean;
  f[feature::ShortEnergyStd] = es.std;
  f[feature::ShortZeroCrossMean] = zs.mean;
  f[feature::ShortZeroCrossStd] = zs.std;

  // Time-frequency, restricted to the breathing band.
  const PowerSpectrum spec = welch_psd(s, fs, cfg.welch);
  const double df = spec.bin_width();
  double total = 0.0;
  double weighted = 0.0;
  std::size_t peak = spec.freqs.size();
  std::size_t band_bins = 0;
  for (std::size_t k = 0; k < spec.freqs.size(); ++k) {
    const double fr = spec.freqs[k];
    if (fr < cfg.low_hz || fr > cfg.high_hz) continue;
    ++band_bins;
    total += spec.power[k];
    weighted += fr * spec.power[k];
    if (peak == spec.freqs.size() || spec.power[k] > spec.power[peak]) peak = k;
  }
  if (peak == spec.freqs.size())
    throw ParameterError("features: spectrum has no bin inside the breathing band");
  if (total > 0.0) {
    const double centroid = weighted / total;
    double spread = 0.0;
    double entropy = 0.0;
    for (std::size_t k = 0; k < spec.freqs.size(); ++k) {
      const double fr = spec.freqs[k];
      if (fr < cfg.low_hz || fr > cfg.high_hz) continue;
      const double p = spec.power[k] / total;
      spread += (fr - centroid) * (fr - centroid) * p;
      if (p > 0.0) entropy -= p * std::log(p);
    }
    f[feature::SpectralCentroid] = centroid;
    f[feature::SpectralBandwidth] = std::sqrt(spread);
    f[feature::SpectralEntropy] = band_bins > 1 ? entropy / std::log(static_cast<double>(band_bins)) : 0.0;
    f[feature::InbandPeakRatio] = spec.power[peak] / total;
  }
  f[feature::InbandPower] = total * df;

  // Self-defined.
  f[feature::AutocorrStd] = mean_std(autocorrelation(s)).std;
  f[feature::RespiratoryRate] = 60.0 * spec.freqs[peak];
  return f;
}

}  // namespace gaitbreath
