#include "gaitbreath/roi.hpp"

#include <algorithm>
#include <cmath>

#include "gaitbreath/error.hpp"

namespace gaitbreath {

void RoiSet::validate() const {
  for (std::size_t t = 0; t < frames.size(); ++t) {
    const auto& f = frames[t];
    if (!f.valid) continue;
    for (const auto& r : f.rois) {
      if (r.empty() || r.col0 < 0 || r.row0 < 0 || r.col1 >= width || r.row1 >= height)
        throw ParameterError("roi: rectangle out of bounds at frame " + std::to_string(t));
    }
    const auto& chest = f.rois[static_cast<int>(Roi::Chest)];
    const auto& abdomen = f.rois[static_cast<int>(Roi::Abdomen)];
    if (!(chest.row0 < abdomen.row0 && chest.row1 <= abdomen.row0))
      throw ParameterError("roi: chest not above abdomen at frame " + std::to_string(t));
  }
}

namespace {

Rect clip(Rect r, int width, int height) {
  r.col0 = std::max(r.col0, 0);
  r.row0 = std::max(r.row0, 0);
  r.col1 = std::min(r.col1, width - 1);
  r.row1 = std::min(r.row1, height - 1);
  return r;
}

int round_half_up(double v) { return static_cast<int>(std::floor(v + 0.5)); }

}  // namespace

RoiFrame build_roi_frame(const JointFrame& joints, int width, int height, ChestWallSide side) {
  RoiFrame out;
  const auto& ls = joints[static_cast<int>(Joint::LeftShoulder)];
  const auto& rs = joints[static_cast<int>(Joint::RightShoulder)];
  const auto& chest = joints[static_cast<int>(Joint::SpineChest)];
  const auto& navel = joints[static_cast<int>(Joint::SpineNavel)];
  const auto& pelvis = joints[static_cast<int>(Joint::Pelvis)];
  const auto& nose = joints[static_cast<int>(Joint::Nose)];
  if (!ls || !rs || !chest || !navel || !pelvis || !nose) return out;

  // Image columns, not anatomical sides: the person faces the camera.
  const int span_lo = std::min(ls->x, rs->x);
  const int span_hi = std::max(ls->x, rs->x);
  const double span = span_hi - span_lo;
  const int col0 = round_half_up(span_lo + 0.1 * span);
  const int col1 = round_half_up(span_hi - 0.1 * span);
  const int mid = round_half_up(0.5 * (span_lo + span_hi));
  const int shoulder_row = round_half_up(0.5 * (ls->y + rs->y));
  const int chest_row = chest->y;
  const int navel_row = navel->y;
  if (!(shoulder_row < chest_row && chest_row < navel_row)) return out;

  Rect r_chest{col0, col1, shoulder_row, chest_row};
  Rect r_abdomen{col0, col1, chest_row, navel_row};
  Rect r_wall = side == ChestWallSide::Right ? Rect{mid, col1, shoulder_row, navel_row}
                                             : Rect{col0, mid, shoulder_row, navel_row};
  out.rois[static_cast<int>(Roi::Chest)] = clip(r_chest, width, height);
  out.rois[static_cast<int>(Roi::Abdomen)] = clip(r_abdomen, width, height);
  out.rois[static_cast<int>(Roi::ChestWall)] = clip(r_wall, width, height);
  for (const auto& r : out.rois) {
    if (r.empty()) return out;
  }
  const auto& c = out.rois[static_cast<int>(Roi::Chest)];
  const auto& a = out.rois[static_cast<int>(Roi::Abdomen)];
  if (!(c.row0 < a.row0)) return out;

  out.stable[static_cast<int>(StablePoint::Pelvis)] = *pelvis;
  out.stable[static_cast<int>(StablePoint::Nose)] = *nose;
  for (const auto& p : out.stable) {
    if (p.x < 0 || p.y < 0 || p.x >= width || p.y >= height) return out;
  }
  out.valid = true;
  return out;
}

RoiSet build_rois(const JointTrack& joints, int width, int height, ChestWallSide side) {
  if (joints.frame_count() == 0) throw ParameterError("build_rois: empty joint track");
  RoiSet set;
  set.width = width;
  set.height = height;
  set.frames.resize(joints.frame_count());
  for (std::size_t t = 0; t < joints.frame_count(); ++t) {
    set.frames[t] = build_roi_frame(joints.frames[t], width, height, side);
  }
  return set;
}

bool roi_mean_depth(const DepthFrameSequence& depth, std::size_t t, const Rect& r, double& mean) {
  double sum = 0.0;
  long count = 0;
  for (int y = r.row0; y <= r.row1; ++y) {
    for (int x = r.col0; x <= r.col1; ++x) {
      const std::uint16_t v = depth.at(t, x, y);
      if (v != 0) {
        sum += v;
        ++count;
      }
    }
  }
  if (count == 0) return false;
  mean = sum / static_cast<double>(count);
  return true;
}

bool stable_point_depth(const DepthFrameSequence& depth, std::size_t t, Pixel p, double& value) {
  std::array<std::uint16_t, 9> patch{};
  std::size_t n = 0;
  for (int dy = -1; dy <= 1; ++dy) {
    for (int dx = -1; dx <= 1; ++dx) {
      const int x = p.x + dx;
      const int y = p.y + dy;
      if (x < 0 || y < 0 || x >= depth.width || y >= depth.height) continue;
      const std::uint16_t v = depth.at(t, x, y);
      if (v != 0) patch[n++] = v;
    }
  }
  if (n == 0) return false;
  std::sort(patch.begin(), patch.begin() + static_cast<std::ptrdiff_t>(n));
  value = n % 2 == 1 ? patch[n / 2] : 0.5 * (static_cast<double>(patch[n / 2 - 1]) + patch[n / 2]);
  return true;
}

namespace {

void check_inputs(const DepthFrameSequence& depth, const RoiSet& rois) {
  if (rois.frame_count() != depth.frame_count()) {
    throw ParameterError("extract_raw_channels: roi frame count " +
                         std::to_string(rois.frame_count()) + " != depth frame count " +
                         std::to_string(depth.frame_count()));
  }
}

RawChannels allocate(const DepthFrameSequence& depth) {
  RawChannels out;
  out.frame_rate = depth.frame_rate;
  for (std::size_t c = 0; c < kChannelCount; ++c) {
    out.channels[c].assign(depth.frame_count(), 0.0);
    out.valid[c].assign(depth.frame_count(), 0);
  }
  return out;
}

void extract_frame(const DepthFrameSequence& depth, const RoiFrame& f, std::size_t t,
                   RawChannels& out) {
  if (!f.valid) return;
  std::array<double, kStablePointCount> stable{};
  std::array<bool, kStablePointCount> stable_ok{};
  for (std::size_t j = 0; j < kStablePointCount; ++j)
    stable_ok[j] = stable_point_depth(depth, t, f.stable[j], stable[j]);
  for (std::size_t i = 0; i < kRoiCount; ++i) {
    double mean = 0.0;
    if (!roi_mean_depth(depth, t, f.rois[i], mean)) continue;
    for (std::size_t j = 0; j < kStablePointCount; ++j) {
      if (!stable_ok[j]) continue;
      const std::size_t c = i * kStablePointCount + j;
      out.channels[c][t] = mean - stable[j];
      out.valid[c][t] = 1;
    }
  }
}

void require_some_signal(const RawChannels& out) {
  for (const auto& v : out.valid) {
    if (std::find(v.begin(), v.end(), 1) != v.end()) return;
  }
  throw NumericalError("extract_raw_channels: every frame is invalid; empty signal");
}

}  // namespace

RawChannels extract_raw_channels(const DepthFrameSequence& depth, const RoiSet& rois) {
  check_inputs(depth, rois);
  RawChannels out = allocate(depth);
  const auto n = static_cast<long>(depth.frame_count());
#pragma omp parallel for schedule(static)
  for (long t = 0; t < n; ++t) {
    extract_frame(depth, rois.frames[static_cast<std::size_t>(t)], static_cast<std::size_t>(t), out);
  }
  require_some_signal(out);
  return out;
}

namespace serial {

RawChannels extract_raw_channels(const DepthFrameSequence& depth, const RoiSet& rois) {
  check_inputs(depth, rois);
  RawChannels out = allocate(depth);
  for (std::size_t t = 0; t < depth.frame_count(); ++t) {
    const RoiFrame& f = rois.frames[t];
    if (!f.valid) continue;
    for (std::size_t i = 0; i < kRoiCount; ++i) {
      // Straight accumulation without the shared helpers.
      const Rect& r = f.rois[i];
      double sum = 0.0;
      long count = 0;
      for (int y = r.row0; y <= r.row1; ++y)
        for (int x = r.col0; x <= r.col1; ++x)
          if (const auto v = depth.at(t, x, y); v != 0) {
            sum += v;
            ++count;
          }
      if (count == 0) continue;
      for (std::size_t j = 0; j < kStablePointCount; ++j) {
        std::vector<double> patch;
        for (int y = f.stable[j].y - 1; y <= f.stable[j].y + 1; ++y)
          for (int x = f.stable[j].x - 1; x <= f.stable[j].x + 1; ++x)
            if (x >= 0 && y >= 0 && x < depth.width && y < depth.height && depth.at(t, x, y) != 0)
              patch.push_back(depth.at(t, x, y));
        if (patch.empty()) continue;
        std::sort(patch.begin(), patch.end());
        const std::size_t m = patch.size();
        const double med = m % 2 ? patch[m / 2] : 0.5 * (patch[m / 2 - 1] + patch[m / 2]);
        out.channels[i * kStablePointCount + j][t] = sum / static_cast<double>(count) - med;
        out.valid[i * kStablePointCount + j][t] = 1;
      }
    }
  }
  require_some_signal(out);
  return out;
}

}  // namespace serial
}  // namespace gaitbreath
