#include <doctest.h>

#include <algorithm>

#include "gaitbreath/data_io.hpp"
#include "gaitbreath/error.hpp"
#include "helpers.hpp"

using namespace gaitbreath;
namespace fs = std::filesystem;

namespace {

DepthSample tiny_sample() {
  DepthSample s;
  s.id = "tiny";
  s.subject_id = "s01";
  s.label = Label::Deep;
  s.depth.width = 4;
  s.depth.height = 4;
  s.depth.frame_rate = 30.0;
  s.depth.pixels.resize(32);
  for (std::size_t i = 0; i < s.depth.pixels.size(); ++i)
    s.depth.pixels[i] = static_cast<std::uint16_t>(1000 + 37 * i);
  s.depth.pixels[5] = 0;
  s.depth.pixels[6] = 65535;
  s.joints.frames.resize(2);
  for (std::size_t t = 0; t < 2; ++t)
    for (std::size_t j = 0; j < kJointCount; ++j)
      s.joints.frames[t][j] = Pixel{static_cast<int>(j % 4), static_cast<int>((j + t) % 4)};
  s.joints.set(1, Joint::Nose, std::nullopt);
  return s;
}

RawChannels random_channels(std::size_t n, std::uint64_t seed) {
  RawChannels raw;
  raw.frame_rate = 30.0;
  for (std::size_t c = 0; c < kChannelCount; ++c) {
    raw.channels[c] = testing::white(n, seed + c, 50.0);
    raw.valid[c].assign(n, 1);
  }
  raw.valid[2][3] = 0;
  raw.channels[2][3] = 0.0;
  return raw;
}

}  // namespace

TEST_CASE("depth sample round trip") {
  const auto dir = testing::scratch_dir("io_roundtrip") / "tiny";
  const auto s = tiny_sample();
  write_depth_sample(s, dir);
  const auto r = read_depth_sample(dir);
  CHECK(r.id == s.id);
  CHECK(r.subject_id == s.subject_id);
  CHECK(r.label == s.label);
  CHECK(r.depth.width == 4);
  CHECK(r.depth.height == 4);
  CHECK(r.depth.frame_rate == 30.0);
  CHECK(r.depth.pixels == s.depth.pixels);
  CHECK(r.joints.frames == s.joints.frames);
}

TEST_CASE("65535 mm is stored as 0xFFFF little-endian") {
  const auto dir = testing::scratch_dir("io_u16") / "tiny";
  write_depth_sample(tiny_sample(), dir);
  const auto bytes = read_text(dir / "depth.bin");
  REQUIRE(bytes.size() == 64);
  CHECK(static_cast<unsigned char>(bytes[12]) == 0xFF);
  CHECK(static_cast<unsigned char>(bytes[13]) == 0xFF);
  // 1000 = 0x03E8
  CHECK(static_cast<unsigned char>(bytes[0]) == 0xE8);
  CHECK(static_cast<unsigned char>(bytes[1]) == 0x03);
}

TEST_CASE("absent joint leaves empty fields") {
  const auto dir = testing::scratch_dir("io_absent") / "tiny";
  write_depth_sample(tiny_sample(), dir);
  const auto csv = read_text(dir / "joints.csv");
  CHECK(csv.find("1,nose,,\n") != std::string::npos);
  CHECK(csv.find("0,nose,0,0\n") != std::string::npos);
}

TEST_CASE("truncated depth.bin is a format error") {
  const auto dir = testing::scratch_dir("io_trunc") / "tiny";
  write_depth_sample(tiny_sample(), dir);
  auto bytes = read_text(dir / "depth.bin");
  bytes.pop_back();
  write_text(dir / "depth.bin", bytes);
  try {
    read_depth_sample(dir);
    FAIL("no error");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("truncated") != std::string::npos);
  }
}

TEST_CASE("three joint frames for a two-frame sequence is a mismatch") {
  const auto dir = testing::scratch_dir("io_mismatch") / "tiny";
  write_depth_sample(tiny_sample(), dir);
  auto csv = read_text(dir / "joints.csv");
  csv += "2,nose,1,1\n";
  write_text(dir / "joints.csv", csv);
  try {
    read_depth_sample(dir);
    FAIL("no error");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("frame count mismatch") != std::string::npos);
  }
}

TEST_CASE("joints outside the frame are rejected") {
  const auto dir = testing::scratch_dir("io_oob") / "tiny";
  write_depth_sample(tiny_sample(), dir);
  auto csv = read_text(dir / "joints.csv");
  const auto at = csv.find("0,nose,0,0");
  csv.replace(at, 10, "0,nose,9,0");
  write_text(dir / "joints.csv", csv);
  CHECK_THROWS_AS(read_depth_sample(dir), FormatError);
}

TEST_CASE("meta.json field errors name the field") {
  const auto dir = testing::scratch_dir("io_meta") / "tiny";
  write_depth_sample(tiny_sample(), dir);
  write_text(dir / "meta.json",
             R"({"width": 4, "height": 4, "frame_rate": 0, "frame_count": 2,
                 "subject_id": "s01", "label": "deep"})");
  try {
    read_depth_sample(dir);
    FAIL("no error");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("frame_rate") != std::string::npos);
  }
  write_text(dir / "meta.json",
             R"({"width": 4, "height": 4, "frame_rate": 30, "frame_count": 2,
                 "subject_id": "s01", "label": "shallow"})");
  CHECK_THROWS_AS(read_depth_sample(dir), FormatError);
}

TEST_CASE("missing sample directory is an io error") {
  CHECK_THROWS_AS(read_depth_sample(testing::scratch_dir("io_missing") / "nope"), IoError);
}

TEST_CASE("channels csv has a header plus one line per sample") {
  const auto dir = testing::scratch_dir("io_channels");
  write_channels(random_channels(10, 1), dir / "c.csv");
  const auto text = read_text(dir / "c.csv");
  CHECK(std::count(text.begin(), text.end(), '\n') == 11);
  CHECK(text.rfind("t,chest_pelvis,chest_nose,abdomen_pelvis,abdomen_nose,chestwall_pelvis,"
                   "chestwall_nose\n",
                   0) == 0);
}

TEST_CASE("channels round trip to 1e-9 with the mask") {
  const auto dir = testing::scratch_dir("io_channels_rt");
  const auto raw = random_channels(200, 11);
  write_channels(raw, dir / "c.csv");
  const auto back = read_channels(dir / "c.csv");
  CHECK(back.frame_rate == doctest::Approx(30.0).epsilon(1e-12));
  for (std::size_t c = 0; c < kChannelCount; ++c) {
    REQUIRE(back.channels[c].size() == 200);
    CHECK(back.valid[c] == raw.valid[c]);
    double worst = 0;
    for (std::size_t t = 0; t < 200; ++t)
      if (raw.valid[c][t]) worst = std::max(worst, std::abs(back.channels[c][t] - raw.channels[c][t]));
    CHECK(worst < 1e-9);
  }
}

TEST_CASE("channels csv missing a column names it") {
  const auto dir = testing::scratch_dir("io_channels_missing");
  write_text(dir / "c.csv",
             "t,chest_pelvis,chest_nose,abdomen_pelvis,chestwall_pelvis,chestwall_nose\n"
             "0,1,1,1,1,1\n0.0333333333333,1,1,1,1,1\n");
  try {
    read_channels(dir / "c.csv");
    FAIL("no error");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("abdomen_nose") != std::string::npos);
  }
}

TEST_CASE("clean channels round trip keeps unusable channels") {
  const auto dir = testing::scratch_dir("io_clean");
  CleanChannels c;
  c.frame_rate = 30.0;
  for (std::size_t k = 0; k < kChannelCount; ++k) {
    c.channels[k] = testing::white(50, 100 + k);
    c.usable[k] = true;
  }
  c.channels[4].assign(50, 0.0);
  c.usable[4] = false;
  write_clean_channels(c, dir / "clean.csv");
  const auto back = read_clean_channels(dir / "clean.csv");
  CHECK(back.usable == c.usable);
  for (std::size_t k = 0; k < kChannelCount; ++k)
    for (std::size_t t = 0; t < 50; ++t) CHECK(back.channels[k][t] == doctest::Approx(c.channels[k][t]).epsilon(1e-12));
}

TEST_CASE("manifest resolves relative entries") {
  const auto dir = testing::scratch_dir("io_manifest");
  write_manifest({dir / "a", dir / "b"}, dir / "manifest.json");
  const auto m = read_manifest(resolve_manifest(dir));
  REQUIRE(m.size() == 2);
  CHECK(fs::weakly_canonical(m[0]) == fs::weakly_canonical(dir / "a"));
  CHECK(fs::weakly_canonical(m[1]) == fs::weakly_canonical(dir / "b"));
}
