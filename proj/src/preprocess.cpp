#include "gaitbreath/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gaitbreath/error.hpp"

namespace gaitbreath {

void PreprocessConfig::validate() const {
  if (!(z_thresh > 0.0)) throw ParameterError("preprocess: z_thresh must be positive");
  if (filter_order < 2 || filter_order % 2 != 0)
    throw ParameterError("preprocess: filter order must be a positive even number");
  if (!(0.0 < low_hz && low_hz < high_hz)) throw ParameterError("preprocess: bad passband");
  if (!(pad_seconds >= 0.0)) throw ParameterError("preprocess: pad_seconds must be >= 0");
}

namespace {

double median_of(std::vector<double> v) {
  const std::size_t n = v.size();
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (n % 2 == 1) return *mid;
  const double hi = *mid;
  const double lo = *std::max_element(v.begin(), mid);
  return 0.5 * (lo + hi);
}

// Flags samples whose robust z-score exceeds the threshold. Scale falls back
// to the mean absolute deviation (x1.2533) when the MAD is zero.
std::vector<std::uint8_t> flag_outliers(const Signal& x, const std::vector<std::uint8_t>& keep,
                                        double z_thresh) {
  std::vector<double> vals;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (keep[i]) vals.push_back(x[i]);
  std::vector<std::uint8_t> flags(x.size(), 0);
  if (vals.size() < 2) return flags;
  const double med = median_of(vals);
  std::vector<double> dev(vals.size());
  double mean_abs = 0.0;
  for (std::size_t i = 0; i < vals.size(); ++i) {
    dev[i] = std::abs(vals[i] - med);
    mean_abs += dev[i];
  }
  mean_abs /= static_cast<double>(vals.size());
  double scale = 1.4826 * median_of(dev);
  if (scale <= 0.0) scale = 1.2533 * mean_abs;
  if (scale <= 0.0) return flags;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (keep[i] && std::abs(x[i] - med) / scale > z_thresh) flags[i] = 1;
  }
  return flags;
}

void interpolate_gaps(Signal& x, const std::vector<std::uint8_t>& keep) {
  const std::size_t n = x.size();
  std::size_t prev = n;  // last kept index
  for (std::size_t i = 0; i < n; ++i) {
    if (!keep[i]) continue;
    if (prev == n) {
      for (std::size_t k = 0; k < i; ++k) x[k] = x[i];
    } else if (i > prev + 1) {
      const double span = static_cast<double>(i - prev);
      for (std::size_t k = prev + 1; k < i; ++k) {
        const double a = static_cast<double>(k - prev) / span;
        x[k] = (1.0 - a) * x[prev] + a * x[i];
      }
    }
    prev = i;
  }
  for (std::size_t k = prev + 1; k < n; ++k) x[k] = x[prev];
}

}  // namespace

Signal repair_outliers(std::span<const double> x, std::span<const std::uint8_t> valid,
                       double z_thresh) {
  if (valid.size() != x.size()) throw ParameterError("repair_outliers: mask length mismatch");
  Signal out(x.begin(), x.end());
  std::vector<std::uint8_t> keep(valid.begin(), valid.end());
  for (std::size_t i = 0; i < out.size(); ++i)
    if (keep[i] && !std::isfinite(out[i])) keep[i] = 0;

  const std::size_t max_rounds = std::max<std::size_t>(out.size(), 1);
  for (std::size_t round = 0; round < max_rounds; ++round) {
    const auto flags = flag_outliers(out, keep, z_thresh);
    std::size_t flagged = 0;
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (flags[i]) {
        keep[i] = 0;
        ++flagged;
      }
    }
    if (std::count(keep.begin(), keep.end(), 1) < 2)
      throw NumericalError("repair_outliers: fewer than 2 usable samples; channel unusable");
    if (flagged == 0 && std::count(keep.begin(), keep.end(), 1) == static_cast<long>(out.size()))
      break;
    interpolate_gaps(out, keep);
    std::fill(keep.begin(), keep.end(), 1);
  }
  return out;
}

Signal repair_outliers(std::span<const double> x, double z_thresh) {
  const std::vector<std::uint8_t> all(x.size(), 1);
  return repair_outliers(x, all, z_thresh);
}

Signal detrend_least_squares(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 2) throw ParameterError("detrend: need at least 2 samples");
  const double tm = 0.5 * static_cast<double>(n - 1);
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dt = static_cast<double>(i) - tm;
    sxy += dt * (x[i] - mean);
    sxx += dt * dt;
  }
  const double slope = sxy / sxx;
  Signal out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] - mean - slope * (static_cast<double>(i) - tm);
  return out;
}

Signal bandpass(std::span<const double> x, double fs, const PreprocessConfig& cfg) {
  cfg.validate();
  if (!(fs > 2.0 * cfg.high_hz))
    throw ParameterError("bandpass: sampling rate " + std::to_string(fs) +
                         " Hz leaves the passband above Nyquist");
  if (x.size() < 10 * static_cast<std::size_t>(cfg.filter_order))
    throw ParameterError("bandpass: signal shorter than 10x the filter order");
  const SosFilter f = design_butterworth_bandpass(cfg.filter_order, cfg.low_hz, cfg.high_hz, fs);
  const auto pad = static_cast<std::size_t>(std::lround(cfg.pad_seconds * fs));
  return filtfilt(f, x, pad);
}

CleanChannels preprocess_all(const RawChannels& raw, const PreprocessConfig& cfg) {
  cfg.validate();
  raw.validate();
  CleanChannels out;
  out.frame_rate = raw.frame_rate;
  const std::size_t n = raw.length();
  for (std::size_t c = 0; c < kChannelCount; ++c) {
    try {
      Signal s = repair_outliers(raw.channels[c], raw.valid[c], cfg.z_thresh);
      s = detrend_least_squares(s);
      out.channels[c] = bandpass(s, raw.frame_rate, cfg);
      out.usable[c] = true;
    } catch (const NumericalError&) {
      out.channels[c].assign(n, 0.0);
      out.usable[c] = false;
    }
  }
  if (out.usable_count() == 0)
    throw NumericalError("preprocess: every channel is unusable");
  return out;
}

}  // namespace gaitbreath
