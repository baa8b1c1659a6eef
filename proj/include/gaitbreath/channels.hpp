#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

namespace gaitbreath {

enum class Roi : int { Chest = 0, Abdomen = 1, ChestWall = 2 };
enum class StablePoint : int { Pelvis = 0, Nose = 1 };

inline constexpr std::size_t kRoiCount = 3;
inline constexpr std::size_t kStablePointCount = 2;
inline constexpr std::size_t kChannelCount = kRoiCount * kStablePointCount;

/// Channel (ROI i, stable point j) lives at index 2*i + j; this is also the
/// column order of channels.csv.
constexpr std::size_t channel_index(Roi roi, StablePoint ref) {
  return static_cast<std::size_t>(roi) * kStablePointCount + static_cast<std::size_t>(ref);
}
constexpr Roi channel_roi(std::size_t c) { return static_cast<Roi>(c / kStablePointCount); }
constexpr StablePoint channel_ref(std::size_t c) {
  return static_cast<StablePoint>(c % kStablePointCount);
}

inline constexpr std::array<std::string_view, kChannelCount> kChannelNames = {
    "chest_pelvis", "chest_nose", "abdomen_pelvis", "abdomen_nose", "chestwall_pelvis",
    "chestwall_nose"};

inline constexpr std::size_t kSingleRoiChannel = channel_index(Roi::Chest, StablePoint::Pelvis);

using Signal = std::vector<double>;

/// Six raw ROI-minus-stable-point depth signals in millimetres. valid[c][t]
/// is 0 where the sample could not be measured.
struct RawChannels {
  double frame_rate = 0.0;
  std::array<Signal, kChannelCount> channels;
  std::array<std::vector<std::uint8_t>, kChannelCount> valid;

  std::size_t length() const { return channels[0].size(); }
  void validate() const;
};

/// Channels after outlier repair, detrending and bandpass filtering. A channel
/// that could not be repaired is kept as zeros with usable[c] == false.
struct CleanChannels {
  double frame_rate = 0.0;
  std::array<Signal, kChannelCount> channels;
  std::array<bool, kChannelCount> usable{};

  std::size_t length() const { return channels[0].size(); }
  std::size_t usable_count() const;
  void validate() const;
};

}  // namespace gaitbreath
