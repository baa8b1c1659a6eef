#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "gaitbreath/error.hpp"
#include "gaitbreath/preprocess.hpp"

namespace gaitbreath {

using cplx = std::complex<double>;

SosFilter design_butterworth_bandpass(int order, double low_hz, double high_hz, double fs) {
  if (order < 2 || order % 2 != 0)
    throw ParameterError("butterworth: bandpass order must be a positive even number");
  if (!(fs > 0.0)) throw ParameterError("butterworth: sampling rate must be positive");
  if (!(0.0 < low_hz && low_hz < high_hz && high_hz < 0.5 * fs))
    throw ParameterError("butterworth: corners must satisfy 0 < low < high < fs/2");

  const int n = order / 2;  // lowpass prototype order
  const double pi = std::numbers::pi;
  const double k = 2.0 * fs;
  const double w1 = k * std::tan(pi * low_hz / fs);
  const double w2 = k * std::tan(pi * high_hz / fs);
  const double bw = w2 - w1;
  const double w0sq = w1 * w2;

  std::vector<cplx> poles;
  for (int i = 1; i <= n; ++i) {
    const cplx p = std::polar(1.0, pi * (2.0 * i + n - 1) / (2.0 * n));
    const cplx pb = p * bw;
    const cplx disc = std::sqrt(pb * pb - 4.0 * w0sq);
    for (const cplx s : {(pb + disc) / 2.0, (pb - disc) / 2.0}) poles.push_back((k + s) / (k - s));
  }

  // Pair conjugates; real poles pair with each other.
  std::vector<cplx> upper;
  std::vector<double> real;
  for (const auto& z : poles) {
    if (z.imag() > 1e-12) {
      upper.push_back(z);
    } else if (std::abs(z.imag()) <= 1e-12) {
      real.push_back(z.real());
    }
  }
  std::sort(real.begin(), real.end());

  SosFilter f;
  for (const auto& z : upper) {
    f.sections.push_back(Biquad{1.0, 0.0, -1.0, -2.0 * z.real(), std::norm(z)});
  }
  for (std::size_t i = 0; i + 1 < real.size(); i += 2) {
    f.sections.push_back(Biquad{1.0, 0.0, -1.0, -(real[i] + real[i + 1]), real[i] * real[i + 1]});
  }
  if (static_cast<int>(f.sections.size()) != n)
    throw NumericalError("butterworth: pole pairing failed");

  const double center = 2.0 * std::atan(std::sqrt(w0sq) / k) * fs / (2.0 * pi);
  const double g = magnitude_response(f, center, fs);
  f.gain = 1.0 / g;
  return f;
}

double magnitude_response(const SosFilter& filter, double f_hz, double fs) {
  const cplx z1 = std::polar(1.0, -2.0 * std::numbers::pi * f_hz / fs);
  const cplx z2 = z1 * z1;
  cplx h = filter.gain;
  for (const auto& s : filter.sections) {
    h *= (s.b0 + s.b1 * z1 + s.b2 * z2) / (1.0 + s.a1 * z1 + s.a2 * z2);
  }
  return std::abs(h);
}

Signal sos_filter(const SosFilter& filter, std::span<const double> x) {
  Signal y(x.begin(), x.end());
  if (y.empty()) return y;
  for (auto& v : y) v *= filter.gain;
  for (const auto& s : filter.sections) {
    // Steady state for a constant input u = y[0].
    const double u = y[0];
    const double dc = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
    double z2 = (s.b2 - s.a2 * dc) * u;
    double z1 = (s.b1 - s.a1 * dc) * u + z2;
    for (auto& v : y) {
      const double in = v;
      const double out = s.b0 * in + z1;
      z1 = s.b1 * in - s.a1 * out + z2;
      z2 = s.b2 * in - s.a2 * out;
      v = out;
    }
  }
  return y;
}

Signal filtfilt(const SosFilter& filter, std::span<const double> x, std::size_t pad) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  pad = std::min(pad, n - 1);
  Signal ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  Signal fwd = sos_filter(filter, ext);
  std::reverse(fwd.begin(), fwd.end());
  Signal bwd = sos_filter(filter, fwd);
  std::reverse(bwd.begin(), bwd.end());
  return Signal(bwd.begin() + static_cast<std::ptrdiff_t>(pad),
                bwd.begin() + static_cast<std::ptrdiff_t>(pad + n));
}

}  // namespace gaitbreath
