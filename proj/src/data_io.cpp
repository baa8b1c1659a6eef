#include "gaitbreath/data_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gaitbreath/error.hpp"
#include "text_util.hpp"

namespace gaitbreath {

namespace fs = std::filesystem;
using detail::append_double;
using detail::parse_double;
using detail::parse_int;
using detail::split;
using detail::trim;

// ---------------------------------------------------------------------------
// Type invariants

void DepthFrameSequence::validate() const {
  if (width <= 0) throw FormatError("depth: width must be positive");
  if (height <= 0) throw FormatError("depth: height must be positive");
  if (!(frame_rate > 0.0) || !std::isfinite(frame_rate))
    throw FormatError("depth: frame_rate must be positive");
  if (pixels.size() % frame_size() != 0)
    throw FormatError("depth: pixel buffer is not a whole number of frames");
  if (frame_count() < 2) throw FormatError("depth: frame_count must be at least 2");
}

void JointTrack::validate(int width, int height) const {
  for (std::size_t t = 0; t < frames.size(); ++t) {
    for (std::size_t j = 0; j < kJointCount; ++j) {
      const auto& p = frames[t][j];
      if (p && (p->x < 0 || p->y < 0 || p->x >= width || p->y >= height)) {
        throw FormatError("joints: " + std::string(kJointNames[j]) + " at frame " +
                          std::to_string(t) + " lies outside the frame");
      }
    }
  }
}

void DepthSample::validate() const {
  depth.validate();
  joints.validate(depth.width, depth.height);
  if (joints.frame_count() != depth.frame_count()) {
    throw FormatError("joints: frame count " + std::to_string(joints.frame_count()) +
                      " does not match depth frame_count " +
                      std::to_string(depth.frame_count()));
  }
}

void RawChannels::validate() const {
  if (!(frame_rate > 0.0)) throw FormatError("channels: frame_rate must be positive");
  const std::size_t n = channels[0].size();
  for (std::size_t c = 0; c < kChannelCount; ++c) {
    if (channels[c].size() != n || valid[c].size() != n)
      throw FormatError("channels: " + std::string(kChannelNames[c]) + " has a different length");
    for (std::size_t t = 0; t < n; ++t) {
      if (valid[c][t] && !std::isfinite(channels[c][t]))
        throw FormatError("channels: non-finite value in " + std::string(kChannelNames[c]));
    }
  }
}

std::size_t CleanChannels::usable_count() const {
  return static_cast<std::size_t>(std::count(usable.begin(), usable.end(), true));
}

void CleanChannels::validate() const {
  if (!(frame_rate > 0.0)) throw FormatError("clean channels: frame_rate must be positive");
  const std::size_t n = channels[0].size();
  for (std::size_t c = 0; c < kChannelCount; ++c) {
    if (channels[c].size() != n)
      throw FormatError("clean channels: " + std::string(kChannelNames[c]) +
                        " has a different length");
    for (double v : channels[c]) {
      if (!std::isfinite(v))
        throw FormatError("clean channels: non-finite value in " + std::string(kChannelNames[c]));
    }
  }
}

std::optional<Joint> joint_from_name(std::string_view name) {
  for (std::size_t j = 0; j < kJointCount; ++j) {
    if (kJointNames[j] == name) return static_cast<Joint>(j);
  }
  return std::nullopt;
}

std::string_view label_name(Label label) { return label == Label::Deep ? "deep" : "normal"; }

Label label_from_name(std::string_view name) {
  if (name == "normal") return Label::Normal;
  if (name == "deep") return Label::Deep;
  throw FormatError("label: expected \"normal\" or \"deep\", got \"" + std::string(name) + "\"");
}

// ---------------------------------------------------------------------------
// Plain file helpers

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, std::string_view text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

namespace {

nlohmann::json parse_json(const fs::path& path) {
  try {
    return nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path.filename().string() + ": " + e.what());
  }
}

template <typename T>
T json_field(const nlohmann::json& j, const char* key, const char* file) {
  if (!j.contains(key)) throw FormatError(std::string(file) + ": missing field \"" + key + "\"");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw FormatError(std::string(file) + ": field \"" + key + "\" has the wrong type");
  }
}

// Snap a frame rate recovered from a time column back to the value that was
// written (t = i / fs loses the last few bits).
double snap_rate(double fs) {
  const double rounded = std::round(fs * 1e6) / 1e6;
  return std::abs(rounded - fs) <= 1e-9 * fs ? rounded : fs;
}

}  // namespace

// ---------------------------------------------------------------------------
// Sample directories

SampleMeta read_sample_meta(const fs::path& dir) {
  const auto meta_path = dir / "meta.json";
  if (!fs::exists(meta_path)) throw IoError("missing " + meta_path.string());
  const auto j = parse_json(meta_path);
  if (!j.is_object()) throw FormatError("meta.json: expected an object");
  SampleMeta meta;
  meta.id = dir.filename().string();
  if (meta.id.empty()) meta.id = dir.parent_path().filename().string();
  meta.width = json_field<int>(j, "width", "meta.json");
  meta.height = json_field<int>(j, "height", "meta.json");
  meta.frame_rate = json_field<double>(j, "frame_rate", "meta.json");
  const auto count = json_field<long long>(j, "frame_count", "meta.json");
  if (count < 0) throw FormatError("meta.json: frame_count must be non-negative");
  meta.frame_count = static_cast<std::size_t>(count);
  meta.subject_id = json_field<std::string>(j, "subject_id", "meta.json");
  meta.label = label_from_name(json_field<std::string>(j, "label", "meta.json"));
  if (meta.width <= 0) throw FormatError("meta.json: width must be positive");
  if (meta.height <= 0) throw FormatError("meta.json: height must be positive");
  if (!(meta.frame_rate > 0.0)) throw FormatError("meta.json: frame_rate must be positive");
  if (meta.frame_count < 2) throw FormatError("meta.json: frame_count must be at least 2");
  return meta;
}

namespace {

JointTrack parse_joints(std::string_view text, std::size_t frame_count, int width, int height) {
  const auto rows = detail::lines(text);
  if (rows.empty() || rows[0] != "frame,joint,x,y")
    throw FormatError("joints.csv: header must be \"frame,joint,x,y\"");
  JointTrack track;
  track.frames.resize(frame_count);
  long long max_frame = -1;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto cells = split(rows[r]);
    const std::string where = "joints.csv line " + std::to_string(r + 1);
    if (cells.size() != 4) throw FormatError(where + ": expected 4 fields");
    const auto frame = parse_int(cells[0]);
    if (!frame || *frame < 0) throw FormatError(where + ": bad frame index");
    max_frame = std::max(max_frame, *frame);
    if (static_cast<std::size_t>(*frame) >= frame_count) {
      throw FormatError("joints.csv: frame count mismatch (frame " + std::to_string(*frame) +
                        " but frame_count is " + std::to_string(frame_count) + ")");
    }
    const auto joint = joint_from_name(trim(cells[1]));
    if (!joint) throw FormatError(where + ": unknown joint \"" + std::string(cells[1]) + "\"");
    const auto xs = trim(cells[2]);
    const auto ys = trim(cells[3]);
    if (xs.empty() && ys.empty()) continue;
    const auto x = parse_int(xs);
    const auto y = parse_int(ys);
    if (!x || !y) throw FormatError(where + ": bad x/y");
    track.set(static_cast<std::size_t>(*frame), *joint,
              Pixel{static_cast<int>(*x), static_cast<int>(*y)});
  }
  if (max_frame + 1 != static_cast<long long>(frame_count)) {
    throw FormatError("joints.csv: frame count mismatch (" + std::to_string(max_frame + 1) +
                      " frames, frame_count is " + std::to_string(frame_count) + ")");
  }
  track.validate(width, height);
  return track;
}

}  // namespace

DepthSample read_depth_sample(const fs::path& dir) {
  const SampleMeta meta = read_sample_meta(dir);
  DepthSample sample;
  sample.id = meta.id;
  sample.subject_id = meta.subject_id;
  sample.label = meta.label;
  sample.depth.width = meta.width;
  sample.depth.height = meta.height;
  sample.depth.frame_rate = meta.frame_rate;

  const auto bin_path = dir / "depth.bin";
  if (!fs::exists(bin_path)) throw IoError("missing " + bin_path.string());
  const std::string bytes = read_text(bin_path);
  const std::size_t expected = meta.frame_count * static_cast<std::size_t>(meta.width) *
                               static_cast<std::size_t>(meta.height) * 2;
  if (bytes.size() < expected) {
    throw FormatError("depth.bin: truncated (" + std::to_string(bytes.size()) + " bytes, expected " +
                      std::to_string(expected) + ")");
  }
  if (bytes.size() > expected) {
    throw FormatError("depth.bin: " + std::to_string(bytes.size() - expected) +
                      " trailing bytes beyond frame_count");
  }
  sample.depth.pixels.resize(expected / 2);
  const auto* raw = reinterpret_cast<const unsigned char*>(bytes.data());
  for (std::size_t i = 0; i < sample.depth.pixels.size(); ++i) {
    sample.depth.pixels[i] = static_cast<std::uint16_t>(raw[2 * i] | (raw[2 * i + 1] << 8));
  }

  const auto joints_path = dir / "joints.csv";
  if (!fs::exists(joints_path)) throw IoError("missing " + joints_path.string());
  sample.joints =
      parse_joints(read_text(joints_path), meta.frame_count, meta.width, meta.height);
  sample.validate();
  return sample;
}

void write_depth_sample(const DepthSample& sample, const fs::path& dir) {
  sample.validate();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  nlohmann::ordered_json meta;
  meta["width"] = sample.depth.width;
  meta["height"] = sample.depth.height;
  meta["frame_rate"] = sample.depth.frame_rate;
  meta["frame_count"] = sample.depth.frame_count();
  meta["subject_id"] = sample.subject_id;
  meta["label"] = label_name(sample.label);
  write_text(dir / "meta.json", meta.dump(2) + "\n");

  std::string bytes(sample.depth.pixels.size() * 2, '\0');
  for (std::size_t i = 0; i < sample.depth.pixels.size(); ++i) {
    const std::uint16_t v = sample.depth.pixels[i];
    bytes[2 * i] = static_cast<char>(v & 0xFF);
    bytes[2 * i + 1] = static_cast<char>(v >> 8);
  }
  write_text(dir / "depth.bin", bytes);

  std::string csv = "frame,joint,x,y\n";
  for (std::size_t t = 0; t < sample.joints.frame_count(); ++t) {
    for (std::size_t j = 0; j < kJointCount; ++j) {
      csv += std::to_string(t);
      csv += ',';
      csv += kJointNames[j];
      const auto& p = sample.joints.frames[t][j];
      if (p) {
        csv += ',' + std::to_string(p->x) + ',' + std::to_string(p->y) + '\n';
      } else {
        csv += ",,\n";
      }
    }
  }
  write_text(dir / "joints.csv", csv);
}

// ---------------------------------------------------------------------------
// Channel CSV

namespace {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string_view>> rows;
  std::string storage;
};

CsvTable load_csv(const fs::path& path) {
  CsvTable table;
  table.storage = read_text(path);
  const auto ls = detail::lines(table.storage);
  if (ls.empty()) throw FormatError(path.filename().string() + ": empty file");
  for (auto h : split(ls[0])) table.header.emplace_back(trim(h));
  for (std::size_t r = 1; r < ls.size(); ++r) {
    auto cells = split(ls[r]);
    if (cells.size() != table.header.size()) {
      throw FormatError(path.filename().string() + " line " + std::to_string(r + 1) +
                        ": expected " + std::to_string(table.header.size()) + " fields");
    }
    table.rows.push_back(std::move(cells));
  }
  return table;
}

std::size_t column_of(const CsvTable& table, std::string_view name, const fs::path& path) {
  const auto it = std::find(table.header.begin(), table.header.end(), name);
  if (it == table.header.end())
    throw FormatError(path.filename().string() + ": missing column \"" + std::string(name) + "\"");
  return static_cast<std::size_t>(it - table.header.begin());
}

double rate_from_times(const std::vector<double>& t, const fs::path& path) {
  if (t.size() < 2) throw FormatError(path.filename().string() + ": need at least 2 rows");
  const double span = t.back() - t.front();
  if (!(span > 0.0)) throw FormatError(path.filename().string() + ": t column must increase");
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (!(t[i] > t[i - 1]))
      throw FormatError(path.filename().string() + ": t column must be strictly increasing");
  }
  return snap_rate(static_cast<double>(t.size() - 1) / span);
}

std::string time_cell(std::size_t i, double fs) {
  std::string s;
  append_double(s, static_cast<double>(i) / fs);
  return s;
}

}  // namespace

RawChannels read_channels(const fs::path& path) {
  const CsvTable table = load_csv(path);
  const std::size_t tcol = column_of(table, "t", path);
  std::array<std::size_t, kChannelCount> cols{};
  for (std::size_t c = 0; c < kChannelCount; ++c) cols[c] = column_of(table, kChannelNames[c], path);

  RawChannels out;
  const std::size_t n = table.rows.size();
  std::vector<double> times(n);
  for (std::size_t c = 0; c < kChannelCount; ++c) {
    out.channels[c].assign(n, 0.0);
    out.valid[c].assign(n, 0);
  }
  for (std::size_t r = 0; r < n; ++r) {
    const auto tv = parse_double(table.rows[r][tcol]);
    if (!tv) throw FormatError(path.filename().string() + ": bad t at row " + std::to_string(r + 2));
    times[r] = *tv;
    for (std::size_t c = 0; c < kChannelCount; ++c) {
      const auto cell = trim(table.rows[r][cols[c]]);
      if (cell.empty()) continue;
      const auto v = parse_double(cell);
      if (!v || !std::isfinite(*v)) {
        throw FormatError(path.filename().string() + ": bad value in column \"" +
                          std::string(kChannelNames[c]) + "\" at row " + std::to_string(r + 2));
      }
      out.channels[c][r] = *v;
      out.valid[c][r] = 1;
    }
  }
  out.frame_rate = rate_from_times(times, path);
  out.validate();
  return out;
}

void write_channels(const RawChannels& channels, const fs::path& path) {
  channels.validate();
  std::string csv = "t";
  for (auto name : kChannelNames) {
    csv += ',';
    csv += name;
  }
  csv += '\n';
  for (std::size_t i = 0; i < channels.length(); ++i) {
    csv += time_cell(i, channels.frame_rate);
    for (std::size_t c = 0; c < kChannelCount; ++c) {
      csv += ',';
      if (channels.valid[c][i]) append_double(csv, channels.channels[c][i]);
    }
    csv += '\n';
  }
  write_text(path, csv);
}

RawChannels to_raw(const CleanChannels& clean) {
  RawChannels raw;
  raw.frame_rate = clean.frame_rate;
  for (std::size_t c = 0; c < kChannelCount; ++c) {
    raw.channels[c] = clean.channels[c];
    raw.valid[c].assign(clean.length(), clean.usable[c] ? 1 : 0);
  }
  return raw;
}

CleanChannels read_clean_channels(const fs::path& path) {
  const RawChannels raw = read_channels(path);
  CleanChannels clean;
  clean.frame_rate = raw.frame_rate;
  for (std::size_t c = 0; c < kChannelCount; ++c) {
    const auto valid_count =
        static_cast<std::size_t>(std::count(raw.valid[c].begin(), raw.valid[c].end(), 1));
    if (valid_count == 0) {
      clean.usable[c] = false;
      clean.channels[c].assign(raw.length(), 0.0);
    } else if (valid_count == raw.length()) {
      clean.usable[c] = true;
      clean.channels[c] = raw.channels[c];
    } else {
      throw FormatError(path.filename().string() + ": column \"" + std::string(kChannelNames[c]) +
                        "\" has gaps; expected a fully processed channel");
    }
  }
  if (clean.usable_count() == 0)
    throw FormatError(path.filename().string() + ": no usable channel");
  return clean;
}

void write_clean_channels(const CleanChannels& channels, const fs::path& path) {
  channels.validate();
  write_channels(to_raw(channels), path);
}

TimeSeries read_time_series(const fs::path& path) {
  const CsvTable table = load_csv(path);
  const std::size_t tcol = column_of(table, "t", path);
  const std::size_t vcol = column_of(table, "selected", path);
  TimeSeries out;
  std::vector<double> times;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto tv = parse_double(table.rows[r][tcol]);
    const auto v = parse_double(table.rows[r][vcol]);
    if (!tv || !v || !std::isfinite(*v))
      throw FormatError(path.filename().string() + ": bad row " + std::to_string(r + 2));
    times.push_back(*tv);
    out.values.push_back(*v);
  }
  out.frame_rate = rate_from_times(times, path);
  return out;
}

void write_time_series(const TimeSeries& series, const fs::path& path) {
  std::string csv = "t,selected\n";
  for (std::size_t i = 0; i < series.values.size(); ++i) {
    csv += time_cell(i, series.frame_rate);
    csv += ',';
    append_double(csv, series.values[i]);
    csv += '\n';
  }
  write_text(path, csv);
}

// ---------------------------------------------------------------------------
// Manifests

std::vector<fs::path> read_manifest(const fs::path& path) {
  const auto j = parse_json(path);
  if (!j.is_array()) throw FormatError(path.filename().string() + ": expected a JSON list");
  std::vector<fs::path> out;
  for (const auto& entry : j) {
    if (!entry.is_string())
      throw FormatError(path.filename().string() + ": entries must be path strings");
    fs::path p = entry.get<std::string>();
    if (p.is_relative()) p = path.parent_path() / p;
    out.push_back(p.lexically_normal());
  }
  return out;
}

void write_manifest(const std::vector<fs::path>& dirs, const fs::path& path) {
  nlohmann::json j = nlohmann::json::array();
  const auto base = path.parent_path();
  for (const auto& d : dirs) {
    fs::path rel = d;
    if (!base.empty() && d.is_absolute() == base.is_absolute()) {
      const auto r = d.lexically_relative(base);
      if (!r.empty()) rel = r;
    }
    j.push_back(rel.generic_string());
  }
  write_text(path, j.dump(2) + "\n");
}

fs::path resolve_manifest(const fs::path& dataset) {
  if (fs::is_directory(dataset)) {
    const auto m = dataset / "manifest.json";
    if (!fs::exists(m)) throw IoError("no manifest.json in " + dataset.string());
    return m;
  }
  if (!fs::exists(dataset)) throw IoError("missing dataset " + dataset.string());
  return dataset;
}

}  // namespace gaitbreath
