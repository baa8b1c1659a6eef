#include "gaitbreath/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "gaitbreath/error.hpp"

namespace gaitbreath {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Body landmarks in metres above the spine_chest level.
constexpr double kNoseHeight = 0.35;
constexpr double kShoulderHeight = 0.17;
constexpr double kNavelHeight = -0.22;
constexpr double kPelvisHeight = -0.42;
constexpr double kShoulderHalfWidth = 0.19;
constexpr double kHeadRadius = 0.08;
constexpr double kFaceOffsetMm = -60.0;  // face is nearer than the chest
constexpr double kWanderTimeConstantS = 0.5;

// Fixed sub-millimetre surface texture; dithers the rounding to whole mm.
double texture_mm(int x, int y) {
  std::uint32_t h = static_cast<std::uint32_t>(x) * 0x9E3779B1u ^ static_cast<std::uint32_t>(y) * 0x85EBCA77u;
  h ^= h >> 15;
  h *= 0x2C1B3C6Du;
  h ^= h >> 12;
  return static_cast<double>(h) / 4294967296.0 - 0.5;
}

std::mt19937_64 stream(std::uint64_t seed, int subject, int walk, int purpose) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(subject), static_cast<std::uint32_t>(walk),
                    static_cast<std::uint32_t>(purpose)};
  return std::mt19937_64(seq);
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

struct SubjectParams {
  double amplitude_mm;
  double chest_weight;
  double rate_hz;
  double step_hz;
};

SubjectParams subject_params(const SynthConfig& cfg, int subject) {
  auto rng = stream(cfg.seed, subject, -1, 0);
  SubjectParams p{};
  p.amplitude_mm = uniform(rng, cfg.normal_amplitude_min_mm, cfg.normal_amplitude_max_mm);
  p.chest_weight = uniform(rng, cfg.chest_weight_min, cfg.chest_weight_max);
  p.rate_hz = uniform(rng, cfg.rate_min_hz, cfg.rate_max_hz);
  p.step_hz = uniform(rng, cfg.gait.step_freq_min_hz, cfg.gait.step_freq_max_hz);
  return p;
}

struct Oscillation {
  double amplitude = 0.0;
  double freq = 0.0;
  double phase = 0.0;
  double operator()(double t) const { return amplitude * std::sin(kTwoPi * freq * t + phase); }
};

}  // namespace

void SynthConfig::validate() const {
  if (subjects < 1 || walks_per_class < 1) throw ParameterError("synth: need subjects and walks");
  if (!(fs > 2.0 * 0.667)) throw ParameterError("synth: fs must exceed 1.334 Hz");
  if (width < 16 || height < 16) throw ParameterError("synth: frame must be at least 16x16");
  if (!(6.0 <= duration_min_s && duration_min_s <= duration_max_s && duration_max_s <= 18.0))
    throw ParameterError("synth: duration range must lie within [6, 18] s");
  if (!(0.167 <= rate_min_hz && rate_min_hz <= rate_max_hz && rate_max_hz <= 0.667))
    throw ParameterError("synth: breathing rates must lie inside [0.167, 0.667] Hz");
  if (!(0.0 < normal_amplitude_min_mm && normal_amplitude_min_mm <= normal_amplitude_max_mm))
    throw ParameterError("synth: bad amplitude range");
  if (!(deep_multiplier > 0.0)) throw ParameterError("synth: deep multiplier must be positive");
  if (!(0.0 <= chest_weight_min && chest_weight_min <= chest_weight_max && chest_weight_max <= 1.0))
    throw ParameterError("synth: chest weights must lie in [0, 1]");
  if (!(sensor_noise_mm >= 0.0) || !(dropout_probability >= 0.0 && dropout_probability < 1.0))
    throw ParameterError("synth: bad noise settings");
  if (!(start_distance_m > end_distance_m && end_distance_m > 0.5))
    throw ParameterError("synth: walker must approach from start to end distance");
  if (!(gait.step_freq_min_hz > 0.0 && gait.step_freq_min_hz <= gait.step_freq_max_hz))
    throw ParameterError("synth: bad step frequency range");
}

SynthConfig SynthConfig::noise_free() const {
  SynthConfig c = *this;
  c.gait.bob_amplitude_mm = 0.0;
  c.gait.pelvis_sway_mm = 0.0;
  c.gait.trunk_rotation_mm = 0.0;
  c.gait.head_motion_mm = 0.0;
  c.gait.pelvis_motion_mm = 0.0;
  c.sensor_noise_mm = 0.0;
  c.dropout_probability = 0.0;
  return c;
}

double SynthTruth::breathing(double t) const {
  return amplitude_mm * std::sin(kTwoPi * rate_hz * t + phase);
}

SynthSample generate_sample(const SynthConfig& cfg, int subject, int walk) {
  cfg.validate();
  if (subject < 0 || subject >= cfg.subjects || walk < 0 || walk >= 2 * cfg.walks_per_class)
    throw ParameterError("synth: subject or walk index out of range");
  const SubjectParams sp = subject_params(cfg, subject);
  const bool deep = walk >= cfg.walks_per_class;
  auto rng = stream(cfg.seed, subject, walk, 1);
  auto pixel_rng = stream(cfg.seed, subject, walk, 2);

  SynthSample out;
  SynthTruth& truth = out.truth;
  truth.duration_s = uniform(rng, cfg.duration_min_s, cfg.duration_max_s);
  truth.rate_hz = std::clamp(sp.rate_hz * uniform(rng, 0.9, 1.1), cfg.rate_min_hz, cfg.rate_max_hz);
  truth.phase = uniform(rng, 0.0, kTwoPi);
  truth.amplitude_mm =
      sp.amplitude_mm * uniform(rng, 0.95, 1.05) * (deep ? cfg.deep_multiplier : 1.0);
  // The dominant region carries the full amplitude.
  const double dominant = std::max(sp.chest_weight, 1.0 - sp.chest_weight);
  truth.chest_amplitude_mm = truth.amplitude_mm * sp.chest_weight / dominant;
  truth.abdomen_amplitude_mm = truth.amplitude_mm * (1.0 - sp.chest_weight) / dominant;

  const double step_hz = sp.step_hz * uniform(rng, 0.95, 1.05);
  const Oscillation bob{cfg.gait.bob_amplitude_mm, step_hz, uniform(rng, 0.0, kTwoPi)};
  const Oscillation pelvis{cfg.gait.pelvis_sway_mm, 0.5 * step_hz, uniform(rng, 0.0, kTwoPi)};
  const Oscillation rotation{cfg.gait.trunk_rotation_mm, 0.5 * step_hz, uniform(rng, 0.0, kTwoPi)};
  const auto frames = static_cast<std::size_t>(std::lround(truth.duration_s * cfg.fs));
  // Stable-point drift: an Ornstein-Uhlenbeck process whose strength is
  // redrawn per walk, mostly small with the occasional bad walk.
  const auto wander = [&](double nominal_rms) {
    const double u = uniform(rng, 0.0, 1.0);
    const double rms = nominal_rms * 2.0 * u * u;
    const double decay = std::exp(-1.0 / (kWanderTimeConstantS * cfg.fs));
    const double kick = rms * std::sqrt(1.0 - decay * decay);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> path(frames);
    double v = rms * gauss(rng);
    for (auto& p : path) {
      p = v;
      v = decay * v + kick * gauss(rng);
    }
    return path;
  };
  const auto head = wander(cfg.gait.head_motion_mm);
  const auto hip = wander(cfg.gait.pelvis_motion_mm);

  DepthSample& s = out.sample;
  const int subj_no = subject + 1;
  const int walk_no = (walk % cfg.walks_per_class) + 1;
  char id[64];
  std::snprintf(id, sizeof id, "s%02d_%s_%d", subj_no, deep ? "deep" : "normal", walk_no);
  s.id = id;
  char sid[16];
  std::snprintf(sid, sizeof sid, "s%02d", subj_no);
  s.subject_id = sid;
  s.label = deep ? Label::Deep : Label::Normal;

  DepthFrameSequence& depth = s.depth;
  depth.width = cfg.width;
  depth.height = cfg.height;
  depth.frame_rate = cfg.fs;
  depth.pixels.assign(frames * depth.frame_size(), 0);
  s.joints.frames.assign(frames, JointFrame{});

  const double focal = 0.9 * cfg.width;
  const double cx = 0.5 * (cfg.width - 1);
  const double cy = 0.45 * cfg.height;
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  for (std::size_t f = 0; f < frames; ++f) {
    const double t = static_cast<double>(f) / cfg.fs;
    const double progress = frames > 1 ? static_cast<double>(f) / static_cast<double>(frames - 1) : 0.0;
    const double dist_m = cfg.start_distance_m + (cfg.end_distance_m - cfg.start_distance_m) * progress;
    const double trunk_mm = dist_m * 1000.0 + bob(t);
    const double px_per_m = focal / dist_m;
    const auto row_of = [&](double h) { return static_cast<int>(std::lround(cy - h * px_per_m)); };

    const int nose_row = row_of(kNoseHeight);
    const int shoulder_row = row_of(kShoulderHeight);
    const int chest_row = row_of(0.0);
    const int navel_row = row_of(kNavelHeight);
    const int pelvis_row = row_of(kPelvisHeight);
    const int mid_col = static_cast<int>(std::lround(cx));
    const double half_w = kShoulderHalfWidth * px_per_m;
    const int left_col = static_cast<int>(std::lround(cx - half_w));
    const int right_col = static_cast<int>(std::lround(cx + half_w));
    const int head_r = std::max(1, static_cast<int>(std::lround(kHeadRadius * px_per_m)));

    const double b_chest = truth.chest_amplitude_mm * std::sin(kTwoPi * truth.rate_hz * t + truth.phase);
    const double b_abdomen = truth.abdomen_amplitude_mm * std::sin(kTwoPi * truth.rate_hz * t + truth.phase);
    const double head_mm = head[f];
    const double rot_mm = rotation(t);
    const double pelvis_mm = pelvis(t) + hip[f];
    const double noise_sd = cfg.sensor_noise_mm * dist_m * dist_m;

    auto frame = depth.frame(f);
    const auto put = [&](int x, int y, double mm) {
      if (x < 0 || y < 0 || x >= cfg.width || y >= cfg.height) return;
      double v = mm;
      if (noise_sd > 0.0) v += noise_sd * gauss(pixel_rng);
      if (cfg.dropout_probability > 0.0 && unit(pixel_rng) < cfg.dropout_probability) v = 0.0;
      frame[static_cast<std::size_t>(y) * cfg.width + x] =
          static_cast<std::uint16_t>(std::clamp(std::lround(v), 0L, 65535L));
    };

    // Torso down to just below the pelvis joint.
    for (int y = shoulder_row; y <= pelvis_row + 2; ++y) {
      for (int x = left_col; x <= right_col; ++x) {
        const double u = half_w > 0.0 ? (x - cx) / half_w : 0.0;
        double mm = trunk_mm + texture_mm(x, y);
        if (y <= navel_row) mm += rot_mm * u;
        if (y <= chest_row) mm -= b_chest;
        else if (y <= navel_row) mm -= b_abdomen;
        else mm += pelvis_mm;
        put(x, y, mm);
      }
    }
    for (int y = nose_row - head_r; y <= nose_row + head_r; ++y) {
      for (int x = mid_col - head_r; x <= mid_col + head_r; ++x) {
        put(x, y, trunk_mm + kFaceOffsetMm + head_mm + texture_mm(x, y));
      }
    }

    auto& jf = s.joints.frames[f];
    const auto place = [&](Joint j, int x, int y) {
      if (x >= 0 && y >= 0 && x < cfg.width && y < cfg.height)
        jf[static_cast<std::size_t>(j)] = Pixel{x, y};
    };
    place(Joint::Nose, mid_col, nose_row);
    place(Joint::LeftShoulder, right_col, shoulder_row);  // subject faces the camera
    place(Joint::RightShoulder, left_col, shoulder_row);
    place(Joint::SpineChest, mid_col, chest_row);
    place(Joint::SpineNavel, mid_col, navel_row);
    place(Joint::Pelvis, mid_col, pelvis_row);
  }
  return out;
}

std::vector<SynthSample> generate_dataset(const SynthConfig& cfg) {
  cfg.validate();
  const int per_subject = 2 * cfg.walks_per_class;
  std::vector<SynthSample> out(static_cast<std::size_t>(cfg.subjects * per_subject));
#pragma omp parallel for schedule(dynamic)
  for (long k = 0; k < static_cast<long>(out.size()); ++k) {
    out[static_cast<std::size_t>(k)] =
        generate_sample(cfg, static_cast<int>(k / per_subject), static_cast<int>(k % per_subject));
  }
  return out;
}

void write_dataset(const SynthConfig& cfg, const std::filesystem::path& dir) {
  cfg.validate();
  const int per_subject = 2 * cfg.walks_per_class;
  std::vector<std::filesystem::path> dirs;
  for (int s = 0; s < cfg.subjects; ++s) {
    for (int w = 0; w < per_subject; ++w) {
      const SynthSample sample = generate_sample(cfg, s, w);
      const auto sample_dir = dir / sample.sample.id;
      write_depth_sample(sample.sample, sample_dir);
      dirs.push_back(sample_dir);
    }
  }
  write_manifest(dirs, dir / "manifest.json");
  write_text(dir / "synth_config.json", synth_config_to_json(cfg).dump(2) + "\n");
}

nlohmann::ordered_json synth_config_to_json(const SynthConfig& c) {
  nlohmann::ordered_json j;
  j["subjects"] = c.subjects;
  j["walks_per_class"] = c.walks_per_class;
  j["fs"] = c.fs;
  j["width"] = c.width;
  j["height"] = c.height;
  j["duration_min_s"] = c.duration_min_s;
  j["duration_max_s"] = c.duration_max_s;
  j["rate_min_hz"] = c.rate_min_hz;
  j["rate_max_hz"] = c.rate_max_hz;
  j["normal_amplitude_min_mm"] = c.normal_amplitude_min_mm;
  j["normal_amplitude_max_mm"] = c.normal_amplitude_max_mm;
  j["deep_multiplier"] = c.deep_multiplier;
  auto& g = j["gait"];
  g["step_freq_min_hz"] = c.gait.step_freq_min_hz;
  g["step_freq_max_hz"] = c.gait.step_freq_max_hz;
  g["bob_amplitude_mm"] = c.gait.bob_amplitude_mm;
  g["pelvis_sway_mm"] = c.gait.pelvis_sway_mm;
  g["trunk_rotation_mm"] = c.gait.trunk_rotation_mm;
  g["head_motion_mm"] = c.gait.head_motion_mm;
  g["pelvis_motion_mm"] = c.gait.pelvis_motion_mm;
  j["sensor_noise_mm"] = c.sensor_noise_mm;
  j["dropout_probability"] = c.dropout_probability;
  j["chest_weight_min"] = c.chest_weight_min;
  j["chest_weight_max"] = c.chest_weight_max;
  j["start_distance_m"] = c.start_distance_m;
  j["end_distance_m"] = c.end_distance_m;
  j["seed"] = c.seed;
  return j;
}

SynthConfig synth_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParameterError("synth config: expected an object");
  SynthConfig c;
  const auto take = [&](const nlohmann::json& obj, const char* key, auto& out) {
    if (!obj.contains(key)) return;
    try {
      out = obj.at(key).get<std::decay_t<decltype(out)>>();
    } catch (const nlohmann::json::exception&) {
      throw ParameterError(std::string("synth config: \"") + key + "\" has the wrong type");
    }
  };
  for (const auto& [k, _] : j.items()) {
    static const char* known[] = {"subjects", "walks_per_class", "fs", "width", "height",
                                  "duration_min_s", "duration_max_s", "rate_min_hz", "rate_max_hz",
                                  "normal_amplitude_min_mm", "normal_amplitude_max_mm",
                                  "deep_multiplier", "gait", "sensor_noise_mm",
                                  "dropout_probability", "chest_weight_min", "chest_weight_max",
                                  "start_distance_m", "end_distance_m", "seed"};
    if (std::none_of(std::begin(known), std::end(known), [&](const char* n) { return k == n; }))
      throw ParameterError("synth config: unknown key \"" + k + "\"");
  }
  take(j, "subjects", c.subjects);
  take(j, "walks_per_class", c.walks_per_class);
  take(j, "fs", c.fs);
  take(j, "width", c.width);
  take(j, "height", c.height);
  take(j, "duration_min_s", c.duration_min_s);
  take(j, "duration_max_s", c.duration_max_s);
  take(j, "rate_min_hz", c.rate_min_hz);
  take(j, "rate_max_hz", c.rate_max_hz);
  take(j, "normal_amplitude_min_mm", c.normal_amplitude_min_mm);
  take(j, "normal_amplitude_max_mm", c.normal_amplitude_max_mm);
  take(j, "deep_multiplier", c.deep_multiplier);
  if (j.contains("gait")) {
    const auto& g = j["gait"];
    if (!g.is_object()) throw ParameterError("synth config: \"gait\" must be an object");
    take(g, "step_freq_min_hz", c.gait.step_freq_min_hz);
    take(g, "step_freq_max_hz", c.gait.step_freq_max_hz);
    take(g, "bob_amplitude_mm", c.gait.bob_amplitude_mm);
    take(g, "pelvis_sway_mm", c.gait.pelvis_sway_mm);
    take(g, "trunk_rotation_mm", c.gait.trunk_rotation_mm);
    take(g, "head_motion_mm", c.gait.head_motion_mm);
    take(g, "pelvis_motion_mm", c.gait.pelvis_motion_mm);
  }
  take(j, "sensor_noise_mm", c.sensor_noise_mm);
  take(j, "dropout_probability", c.dropout_probability);
  take(j, "chest_weight_min", c.chest_weight_min);
  take(j, "chest_weight_max", c.chest_weight_max);
  take(j, "start_distance_m", c.start_distance_m);
  take(j, "end_distance_m", c.end_distance_m);
  take(j, "seed", c.seed);
  c.validate();
  return c;
}

}  // namespace gaitbreath
