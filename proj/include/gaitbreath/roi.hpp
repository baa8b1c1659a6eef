#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "gaitbreath/channels.hpp"
#include "gaitbreath/data_io.hpp"

namespace gaitbreath {

/// Inclusive pixel rectangle [col0, col1] x [row0, row1].
struct Rect {
  int col0 = 0;
  int col1 = -1;
  int row0 = 0;
  int row1 = -1;

  bool empty() const { return col1 < col0 || row1 < row0; }
  long area() const { return empty() ? 0 : static_cast<long>(col1 - col0 + 1) * (row1 - row0 + 1); }
  friend bool operator==(const Rect&, const Rect&) = default;
};

enum class ChestWallSide { Left, Right };

struct RoiFrame {
  bool valid = false;
  std::array<Rect, kRoiCount> rois{};
  std::array<Pixel, kStablePointCount> stable{};
};

struct RoiSet {
  int width = 0;
  int height = 0;
  std::vector<RoiFrame> frames;

  std::size_t frame_count() const { return frames.size(); }
  void validate() const;
};

/// Chest: shoulder row down to spine_chest row, inner 80% of the shoulder span.
/// Abdomen: spine_chest row down to spine_navel row, same columns. Chest wall:
/// the chosen lateral half (midline to edge) spanning both. Frames missing a
/// joint, or whose clipped rectangles vanish, are marked invalid.
RoiSet build_rois(const JointTrack& joints, int width, int height,
                  ChestWallSide side = ChestWallSide::Right);

RoiFrame build_roi_frame(const JointFrame& joints, int width, int height, ChestWallSide side);

/// y(i,j)(t) = mean nonzero depth in ROI i minus the stable-point depth j. The
/// stable depth is the median of nonzero pixels in the 3x3 patch around the
/// joint. Unmeasurable samples are masked. Parallel over frames.
RawChannels extract_raw_channels(const DepthFrameSequence& depth, const RoiSet& rois);

namespace serial {
RawChannels extract_raw_channels(const DepthFrameSequence& depth, const RoiSet& rois);
}

/// Mean of nonzero pixels; returns false when the rectangle holds none.
bool roi_mean_depth(const DepthFrameSequence& depth, std::size_t t, const Rect& r, double& mean);
/// Median of nonzero pixels in the 3x3 patch (clipped to the frame).
bool stable_point_depth(const DepthFrameSequence& depth, std::size_t t, Pixel p, double& value);

}  // namespace gaitbreath
