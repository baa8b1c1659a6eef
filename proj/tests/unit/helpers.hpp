#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "gaitbreath/data_io.hpp"

namespace testing {

inline std::vector<double> sine(double f, double fs, double seconds, double a = 1.0,
                                double phase = 0.0) {
  const auto n = static_cast<std::size_t>(std::lround(fs * seconds));
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i)
    x[i] = a * std::sin(2.0 * std::numbers::pi * f * static_cast<double>(i) / fs + phase);
  return x;
}

inline std::vector<double> white(std::size_t n, std::uint64_t seed, double sd = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, sd);
  std::vector<double> x(n);
  for (auto& v : x) v = d(rng);
  return x;
}

inline double corr(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = a.size();
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

inline double rms(const std::vector<double>& x) {
  double s = 0;
  for (double v : x) s += v * v;
  return std::sqrt(s / x.size());
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("gaitbreath_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

/// Constant-depth sample with every joint present, laid out like the ROI
/// example geometry scaled to the frame.
inline gaitbreath::DepthSample flat_sample(int w, int h, std::size_t frames, std::uint16_t depth) {
  using namespace gaitbreath;
  DepthSample s;
  s.id = "flat";
  s.subject_id = "s00";
  s.depth.width = w;
  s.depth.height = h;
  s.depth.frame_rate = 30.0;
  s.depth.pixels.assign(static_cast<std::size_t>(w) * h * frames, depth);
  s.joints.frames.resize(frames);
  for (std::size_t t = 0; t < frames; ++t) {
    s.joints.set(t, Joint::Nose, Pixel{w / 2, h * 3 / 16});
    s.joints.set(t, Joint::LeftShoulder, Pixel{w / 4, h * 5 / 16});
    s.joints.set(t, Joint::RightShoulder, Pixel{w / 2 + w / 4, h * 5 / 16});
    s.joints.set(t, Joint::SpineChest, Pixel{w / 2, h * 7 / 16});
    s.joints.set(t, Joint::SpineNavel, Pixel{w / 2, h * 10 / 16});
    s.joints.set(t, Joint::Pelvis, Pixel{w / 2, h * 12 / 16});
  }
  return s;
}

}  // namespace testing
