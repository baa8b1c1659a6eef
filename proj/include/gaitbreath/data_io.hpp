#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gaitbreath/channels.hpp"

namespace gaitbreath {

/// Depth video: frame-major, row-major millimetres; 0 marks a missing pixel.
struct DepthFrameSequence {
  int width = 0;
  int height = 0;
  double frame_rate = 0.0;
  std::vector<std::uint16_t> pixels;

  std::size_t frame_size() const { return static_cast<std::size_t>(width) * height; }
  std::size_t frame_count() const { return frame_size() == 0 ? 0 : pixels.size() / frame_size(); }

  std::span<const std::uint16_t> frame(std::size_t t) const {
    return {pixels.data() + t * frame_size(), frame_size()};
  }
  std::span<std::uint16_t> frame(std::size_t t) {
    return {pixels.data() + t * frame_size(), frame_size()};
  }
  std::uint16_t at(std::size_t t, int x, int y) const {
    return pixels[t * frame_size() + static_cast<std::size_t>(y) * width + x];
  }

  void validate() const;
};

enum class Joint : int { Nose = 0, Pelvis, LeftShoulder, RightShoulder, SpineChest, SpineNavel };
inline constexpr std::size_t kJointCount = 6;
inline constexpr std::array<std::string_view, kJointCount> kJointNames = {
    "nose", "pelvis", "left_shoulder", "right_shoulder", "spine_chest", "spine_navel"};

std::optional<Joint> joint_from_name(std::string_view name);

struct Pixel {
  int x = 0;  // column
  int y = 0;  // row
  friend bool operator==(const Pixel&, const Pixel&) = default;
};

using JointFrame = std::array<std::optional<Pixel>, kJointCount>;

struct JointTrack {
  std::vector<JointFrame> frames;

  std::size_t frame_count() const { return frames.size(); }
  const std::optional<Pixel>& get(std::size_t t, Joint j) const {
    return frames[t][static_cast<std::size_t>(j)];
  }
  void set(std::size_t t, Joint j, std::optional<Pixel> p) {
    frames[t][static_cast<std::size_t>(j)] = p;
  }
  void validate(int width, int height) const;
};

enum class Label : int { Normal = 0, Deep = 1 };

std::string_view label_name(Label label);
Label label_from_name(std::string_view name);

struct DepthSample {
  std::string id;
  std::string subject_id;
  Label label = Label::Normal;
  DepthFrameSequence depth;
  JointTrack joints;

  void validate() const;
};

// Sample directory: meta.json + depth.bin + joints.csv. The sample id is the
// directory name.
DepthSample read_depth_sample(const std::filesystem::path& dir);
void write_depth_sample(const DepthSample& sample, const std::filesystem::path& dir);

/// Metadata only; avoids loading depth.bin.
struct SampleMeta {
  std::string id;
  std::string subject_id;
  Label label = Label::Normal;
  int width = 0;
  int height = 0;
  double frame_rate = 0.0;
  std::size_t frame_count = 0;
};
SampleMeta read_sample_meta(const std::filesystem::path& dir);

// channels.csv: t,chest_pelvis,...,chestwall_nose. Masked samples are empty
// cells.
RawChannels read_channels(const std::filesystem::path& path);
void write_channels(const RawChannels& channels, const std::filesystem::path& path);

/// Reads a channels file that must be fully valid per channel; a channel with
/// every cell empty is read back as unusable.
CleanChannels read_clean_channels(const std::filesystem::path& path);
void write_clean_channels(const CleanChannels& channels, const std::filesystem::path& path);

RawChannels to_raw(const CleanChannels& clean);

/// A single time series (selected.csv): header `t,selected`.
struct TimeSeries {
  double frame_rate = 0.0;
  Signal values;
};
TimeSeries read_time_series(const std::filesystem::path& path);
void write_time_series(const TimeSeries& series, const std::filesystem::path& path);

// Dataset manifest: JSON list of sample directory paths. Relative entries are
// resolved against the manifest's directory.
std::vector<std::filesystem::path> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::vector<std::filesystem::path>& dirs,
                    const std::filesystem::path& path);

/// Accepts either a manifest file or a dataset directory holding manifest.json.
std::filesystem::path resolve_manifest(const std::filesystem::path& dataset);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);

}  // namespace gaitbreath
