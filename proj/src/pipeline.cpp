#include "gaitbreath/pipeline.hpp"

#include <cstdint>
#include <cstdio>

#include "gaitbreath/error.hpp"

namespace gaitbreath {

void PipelineConfig::validate() const {
  preprocess.validate();
  gsa.validate();
  selection_welch.validate();
  features.validate();
  svm.validate();
}

namespace {

const char* window_name(WindowKind w) { return w == WindowKind::Hann ? "hann" : "rectangular"; }

WindowKind window_from(const std::string& s) {
  if (s == "hann") return WindowKind::Hann;
  if (s == "rectangular") return WindowKind::Rectangular;
  throw ParameterError("config: window must be \"hann\" or \"rectangular\"");
}

nlohmann::ordered_json welch_json(const WelchConfig& w) {
  nlohmann::ordered_json j;
  j["segment_seconds"] = w.segment_seconds;
  j["overlap"] = w.overlap;
  j["window"] = window_name(w.window);
  return j;
}

// Reads a known key if present; rejects keys the section does not define.
class Section {
 public:
  Section(const nlohmann::json& j, std::string name, std::initializer_list<const char*> keys)
      : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw ParameterError("config: \"" + name_ + "\" must be an object");
    for (const auto& [k, _] : j_.items()) {
      bool known = false;
      for (const char* key : keys) known = known || k == key;
      if (!known) throw ParameterError("config: unknown key \"" + name_ + "." + k + "\"");
    }
  }
  template <typename T>
  void get(const char* key, T& out) const {
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ParameterError("config: \"" + name_ + "." + key + "\" has the wrong type");
    }
  }
  bool has(const char* key) const { return j_.contains(key); }
  const nlohmann::json& at(const char* key) const { return j_.at(key); }

 private:
  const nlohmann::json& j_;
  std::string name_;
};

void read_welch(const nlohmann::json& j, const std::string& name, WelchConfig& w) {
  Section s(j, name, {"segment_seconds", "overlap", "window"});
  s.get("segment_seconds", w.segment_seconds);
  s.get("overlap", w.overlap);
  if (s.has("window")) {
    std::string win;
    s.get("window", win);
    w.window = window_from(win);
  }
}

}  // namespace

nlohmann::ordered_json config_to_json(const PipelineConfig& cfg) {
  nlohmann::ordered_json j;
  j["extract"]["chestwall_side"] = cfg.chestwall_side == ChestWallSide::Right ? "right" : "left";
  auto& p = j["preprocess"];
  p["z_thresh"] = cfg.preprocess.z_thresh;
  p["order"] = cfg.preprocess.filter_order;
  p["low_hz"] = cfg.preprocess.low_hz;
  p["high_hz"] = cfg.preprocess.high_hz;
  p["pad_seconds"] = cfg.preprocess.pad_seconds;
  auto& g = j["denoise"];
  g["mu"] = cfg.gsa.mu;
  g["alpha0"] = cfg.gsa.alpha0;
  g["step_growth"] = cfg.gsa.step_growth;
  g["max_iters"] = cfg.gsa.max_iters;
  g["tol"] = cfg.gsa.tol;
  g["window"] = cfg.gsa.neighborhood.window;
  g["dense"] = cfg.gsa.neighborhood.dense;
  j["select"]["welch"] = welch_json(cfg.selection_welch);
  auto& f = j["features"];
  f["welch"] = welch_json(cfg.features.welch);
  f["short_window_seconds"] = cfg.features.short_window_seconds;
  f["short_overlap"] = cfg.features.short_overlap;
  f["min_seconds"] = cfg.features.min_seconds;
  auto& s = j["svm"];
  s["C"] = cfg.svm.C;
  s["seed"] = cfg.svm.seed;
  s["tol"] = cfg.svm.tol;
  return j;
}

PipelineConfig config_from_json(const nlohmann::json& j, PipelineConfig cfg) {
  Section top(j, "config", {"extract", "preprocess", "denoise", "select", "features", "svm"});
  if (top.has("extract")) {
    Section s(top.at("extract"), "extract", {"chestwall_side"});
    std::string side = cfg.chestwall_side == ChestWallSide::Right ? "right" : "left";
    s.get("chestwall_side", side);
    if (side != "left" && side != "right")
      throw ParameterError("config: extract.chestwall_side must be \"left\" or \"right\"");
    cfg.chestwall_side = side == "left" ? ChestWallSide::Left : ChestWallSide::Right;
  }
  if (top.has("preprocess")) {
    Section s(top.at("preprocess"), "preprocess", {"z_thresh", "order", "low_hz", "high_hz", "pad_seconds"});
    s.get("z_thresh", cfg.preprocess.z_thresh);
    s.get("order", cfg.preprocess.filter_order);
    s.get("low_hz", cfg.preprocess.low_hz);
    s.get("high_hz", cfg.preprocess.high_hz);
    s.get("pad_seconds", cfg.preprocess.pad_seconds);
  }
  if (top.has("denoise")) {
    Section s(top.at("denoise"), "denoise",
              {"mu", "alpha0", "step_growth", "max_iters", "tol", "window", "dense"});
    s.get("mu", cfg.gsa.mu);
    s.get("alpha0", cfg.gsa.alpha0);
    s.get("step_growth", cfg.gsa.step_growth);
    s.get("max_iters", cfg.gsa.max_iters);
    s.get("tol", cfg.gsa.tol);
    s.get("window", cfg.gsa.neighborhood.window);
    s.get("dense", cfg.gsa.neighborhood.dense);
  }
  if (top.has("select")) {
    Section s(top.at("select"), "select", {"welch"});
    if (s.has("welch")) read_welch(s.at("welch"), "select.welch", cfg.selection_welch);
  }
  if (top.has("features")) {
    Section s(top.at("features"), "features",
              {"welch", "short_window_seconds", "short_overlap", "min_seconds"});
    if (s.has("welch")) read_welch(s.at("welch"), "features.welch", cfg.features.welch);
    s.get("short_window_seconds", cfg.features.short_window_seconds);
    s.get("short_overlap", cfg.features.short_overlap);
    s.get("min_seconds", cfg.features.min_seconds);
  }
  if (top.has("svm")) {
    Section s(top.at("svm"), "svm", {"C", "seed", "tol"});
    s.get("C", cfg.svm.C);
    s.get("seed", cfg.svm.seed);
    s.get("tol", cfg.svm.tol);
  }
  cfg.validate();
  return cfg;
}

PipelineConfig read_config(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParameterError("config: " + std::string(e.what()));
  }
  return config_from_json(j);
}

std::string config_hash(const PipelineConfig& cfg) {
  const std::string text = config_to_json(cfg).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string extraction_label(Extraction e) {
  return e == Extraction::MultiRoiSelection ? "Multiple ROIs & Selection" : "Single ROI";
}

std::string processing_label(Processing p) {
  return p == Processing::Bandpass ? "Bandpass" : "Bandpass & GSA";
}

RawChannels single_roi(const RawChannels& raw) {
  RawChannels out = raw;
  for (std::size_t c = 0; c < kChannelCount; ++c) {
    if (c == kSingleRoiChannel) continue;
    std::fill(out.valid[c].begin(), out.valid[c].end(), 0);
    std::fill(out.channels[c].begin(), out.channels[c].end(), 0.0);
  }
  return out;
}

SampleArtifacts process_sample(const DepthSample& sample, const PipelineConfig& cfg,
                               PipelineVariant variant) {
  SampleArtifacts a;
  const RoiSet rois = build_rois(sample.joints, sample.depth.width, sample.depth.height,
                                 cfg.chestwall_side);
  a.raw = extract_raw_channels(sample.depth, rois);
  if (variant.extraction == Extraction::SingleRoi) a.raw = single_roi(a.raw);
  a.clean = preprocess_all(a.raw, cfg.preprocess);
  if (variant.processing == Processing::BandpassGsa) {
    a.gsa = denoise(a.clean, cfg.gsa);
    a.denoised = a.gsa->denoised;
  } else {
    a.denoised = a.clean;
  }
  a.selection = select_informative(a.denoised, cfg.selection_welch);
  a.features = extract_features(a.selection.signal, a.selection.frame_rate, cfg.features);
  return a;
}

}  // namespace gaitbreath
