#include "gaitbreath/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>
#include <string>

#include <fftw3.h>

#include "gaitbreath/error.hpp"

namespace gaitbreath {

void WelchConfig::validate() const {
  if (!(overlap >= 0.0 && overlap < 1.0)) throw ParameterError("welch: overlap must be in [0, 1)");
  if (!std::isfinite(segment_seconds)) throw ParameterError("welch: bad segment length");
}

namespace {

// FFTW planning is not thread-safe; execution on distinct plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

class RealFft {
 public:
  explicit RealFft(std::size_t n) : n_(n) {
    in_ = fftw_alloc_real(n);
    out_ = fftw_alloc_complex(n / 2 + 1);
    std::lock_guard lock(planner_mutex());
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_, out_, FFTW_ESTIMATE);
  }
  ~RealFft() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan_);
    fftw_free(in_);
    fftw_free(out_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  double* input() { return in_; }
  void execute() { fftw_execute(plan_); }
  double power(std::size_t k) const { return out_[k][0] * out_[k][0] + out_[k][1] * out_[k][1]; }

 private:
  std::size_t n_;
  double* in_ = nullptr;
  fftw_complex* out_ = nullptr;
  fftw_plan plan_ = nullptr;
};

std::vector<double> make_window(WindowKind kind, std::size_t n) {
  std::vector<double> w(n, 1.0);
  if (kind == WindowKind::Hann && n > 1) {
    // Periodic Hann, as used for spectral estimation.
    for (std::size_t i = 0; i < n; ++i)
      w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / n);
  }
  return w;
}

}  // namespace

PowerSpectrum welch_psd(std::span<const double> x, double fs, const WelchConfig& cfg) {
  cfg.validate();
  if (!(fs > 0.0)) throw ParameterError("welch: sampling rate must be positive");
  const std::size_t n = x.size();
  std::size_t len = n;
  if (cfg.segment_seconds > 0.0)
    len = std::min(n, static_cast<std::size_t>(std::lround(cfg.segment_seconds * fs)));
  if (n < 2 || len < 2)
    throw ParameterError("welch: sequence of " + std::to_string(n) +
                         " samples is shorter than one usable window");
  const auto step = std::max<std::size_t>(
      1, len - static_cast<std::size_t>(std::lround(cfg.overlap * static_cast<double>(len))));

  const std::vector<double> w = make_window(cfg.window, len);
  double wss = 0.0;
  for (double v : w) wss += v * v;

  PowerSpectrum spec;
  spec.segment_length = len;
  spec.overlap = cfg.overlap;
  spec.window = cfg.window;
  const std::size_t bins = len / 2 + 1;
  spec.freqs.resize(bins);
  for (std::size_t k = 0; k < bins; ++k) spec.freqs[k] = static_cast<double>(k) * fs / len;
  spec.power.assign(bins, 0.0);

  RealFft fft(len);
  for (std::size_t start = 0; start + len <= n; start += step) {
    double mean = 0.0;
    for (std::size_t i = 0; i < len; ++i) mean += x[start + i];
    mean /= static_cast<double>(len);
    for (std::size_t i = 0; i < len; ++i) fft.input()[i] = (x[start + i] - mean) * w[i];
    fft.execute();
    for (std::size_t k = 0; k < bins; ++k) spec.power[k] += fft.power(k);
    ++spec.segment_count;
  }
  const double scale = 1.0 / (fs * wss * static_cast<double>(spec.segment_count));
  for (std::size_t k = 0; k < bins; ++k) {
    const bool nyquist = len % 2 == 0 && k == bins - 1;
    spec.power[k] *= (k == 0 || nyquist) ? scale : 2.0 * scale;
  }
  return spec;
}

std::vector<double> dft_power(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<double> p(n / 2 + 1);
  for (std::size_t k = 0; k < p.size(); ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t t = 0; t < n; ++t)
      acc += x[t] * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k * t % n) / n);
    p[k] = std::norm(acc);
  }
  return p;
}

double periodicity_index(const PowerSpectrum& spec, double low_hz, double high_hz) {
  if (spec.freqs.empty() || spec.freqs.back() < low_hz)
    throw ParameterError("periodicity_index: spectrum does not cover the passband");
  std::size_t fm = spec.freqs.size();
  double total = 0.0;
  for (std::size_t k = 0; k < spec.freqs.size(); ++k) {
    const double f = spec.freqs[k];
    if (f < low_hz || f > high_hz) continue;
    total += spec.power[k];
    if (fm == spec.freqs.size() || spec.power[k] > spec.power[fm]) fm = k;
  }
  if (fm == spec.freqs.size() || !(total > 0.0)) return 0.0;

  double harmonic = 0.0;
  const double f2 = 2.0 * spec.freqs[fm];
  const double df = spec.bin_width();
  if (df > 0.0 && f2 <= spec.freqs.back() + 0.5 * df) {
    const auto k2 = std::min(spec.freqs.size() - 1, static_cast<std::size_t>(std::lround(f2 / df)));
    if (k2 != fm) harmonic = spec.power[k2];
  }
  return (spec.power[fm] + harmonic) / total;
}

SelectionResult select_informative(const CleanChannels& denoised, const WelchConfig& cfg) {
  SelectionResult res;
  res.frame_rate = denoised.frame_rate;
  res.usable = denoised.usable;
  bool any = false;
  double best = -1.0;
  for (std::size_t c = 0; c < kChannelCount; ++c) {
    if (!denoised.usable[c]) continue;
    const PowerSpectrum spec = welch_psd(denoised.channels[c], denoised.frame_rate, cfg);
    res.index[c] = periodicity_index(spec);
    if (!any || res.index[c] > best) {
      best = res.index[c];
      res.channel = c;
      any = true;
    }
  }
  if (!any) throw NumericalError("select_informative: no usable channel");
  res.signal = denoised.channels[res.channel];
  return res;
}

}  // namespace gaitbreath
