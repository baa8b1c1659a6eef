// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gaitbreath/cli.hpp"
#include "gaitbreath/features.hpp"
#include "gaitbreath/gsa.hpp"
#include "gaitbreath/preprocess.hpp"
#include "gaitbreath/protocol.hpp"
#include "gaitbreath/spectral.hpp"
#include "gaitbreath/svm.hpp"
#include "gaitbreath/synth.hpp"

using namespace gaitbreath;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

/// Collects sub-check failures for one criterion.
struct Checks {
  std::vector<std::string> failed;
  std::ostringstream notes;
  void expect(bool ok, const std::string& what) {
    if (!ok) failed.push_back(what);
  }
};

int g_failures = 0;

void report(int id, const std::string& title, const Checks& c) {
  const bool ok = c.failed.empty();
  if (!ok) ++g_failures;
  std::printf("[%s] criterion %d: %s", ok ? "PASS" : "FAIL", id, title.c_str());
  const auto notes = c.notes.str();
  if (!notes.empty()) std::printf(" (%s)", notes.c_str());
  std::printf("\n");
  for (const auto& f : c.failed) std::printf("       failed: %s\n", f.c_str());
  std::fflush(stdout);
}

std::vector<double> sine(double f, double fs, double seconds, double a = 1.0, double phase = 0.0) {
  const auto n = static_cast<std::size_t>(std::lround(fs * seconds));
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i)
    x[i] = a * std::sin(2.0 * std::numbers::pi * f * static_cast<double>(i) / fs + phase);
  return x;
}

std::vector<double> white(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<double> x(n);
  for (auto& v : x) v = d(rng);
  return x;
}

std::vector<DepthSample> render(const SynthConfig& sc) {
  std::vector<DepthSample> out;
  for (auto& s : generate_dataset(sc)) out.push_back(std::move(s.sample));
  return out;
}

double max_abs(const std::vector<double>& x) {
  double m = 0;
  for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

// ---------------------------------------------------------------------------

GsaDiagnostics g_benchmark_gsa;

void criterion_benchmark() {
  Checks c;
  const auto t0 = Clock::now();
  const auto samples = render(SynthConfig{});
  const PipelineConfig cfg;
  const auto rep = run_ablation(samples, cfg, 200, cfg.svm.seed);
  const double elapsed = seconds_since(t0);
  const auto& full = rep.rows[0].result.accuracy;
  const auto& multi_bp = rep.rows[1].result.accuracy;
  const auto& single_gsa = rep.rows[2].result.accuracy;
  const auto& single_bp = rep.rows[3].result.accuracy;
  for (const auto& row : rep.rows) {
    g_benchmark_gsa.runs += row.gsa.runs;
    g_benchmark_gsa.accepted_steps += row.gsa.accepted_steps;
    g_benchmark_gsa.trace_increases += row.gsa.trace_increases;
  }
  c.notes.precision(4);
  c.notes << "samples " << rep.samples << ", subjects " << rep.subjects << ", splits " << rep.splits
          << "; accuracy multi+gsa " << full.mean << "+-" << full.std << ", multi+bp " << multi_bp.mean
          << ", single+gsa " << single_gsa.mean << ", single+bp " << single_bp.mean << "; "
          << elapsed << " s";
  c.expect(rep.samples == 90 && rep.subjects == 15 && rep.splits == 200, "benchmark shape 90/15/200");
  c.expect(full.mean >= 0.85, "full pipeline mean accuracy >= 0.85");
  c.expect(full.mean >= multi_bp.mean, "multiROI+GSA >= multiROI+bandpass");
  c.expect(full.mean >= single_gsa.mean, "multiROI+GSA >= singleROI+GSA");
  c.expect(elapsed < 30 * 60, "ablation under 30 minutes");
  report(1, "synthetic benchmark accuracy and ablation ordering", c);
}

// ---------------------------------------------------------------------------

using Pairs = std::vector<std::pair<std::uint32_t, std::uint32_t>>;

BreathGraph random_graph(std::size_t n, double mu, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<NodeFeature> f(n);
  for (auto& v : f) v = {g(rng), g(rng), g(rng)};
  Pairs p;
  std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(n - 1));
  for (std::uint32_t i = 0; i + 1 < n; ++i) p.emplace_back(i, i + 1);
  for (std::size_t k = 0; k < 2 * n; ++k) p.emplace_back(pick(rng), pick(rng));
  return BreathGraph(std::move(f), std::move(p), mu);
}

double q_oracle(const BreathGraph& g, const Metric& m, const std::vector<double>& x) {
  double q = 0;
  for (const auto& e : g.edges()) {
    const Eigen::Vector3d d(e.df[0], e.df[1], e.df[2]);
    const double diff = x[e.i] - x[e.j];
    q += std::exp(-d.dot(m * d)) * diff * diff;
  }
  return q;
}

double dense_residual(const BreathGraph& g, const std::vector<double>& x, const std::vector<double>& y) {
  // (I + mu L) x - y from the edge list
  std::vector<double> r(x);
  for (std::size_t k = 0; k < g.edge_count(); ++k) {
    const auto& e = g.edges()[k];
    const double w = g.mu() * g.weights()[k] * (x[e.i] - x[e.j]);
    r[e.i] += w;
    r[e.j] -= w;
  }
  double num = 0, den = 0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    num += (r[i] - y[i]) * (r[i] - y[i]);
    den += y[i] * y[i];
  }
  return std::sqrt(num / den);
}

void criterion_gsa() {
  Checks c;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);

  // (a)
  double worst = 0;
  std::uniform_int_distribution<std::size_t> size(2, 500);
  std::uniform_real_distribution<double> mu(0.01, 20.0);
  for (int k = 0; k < 100; ++k) {
    const auto g = random_graph(size(rng), mu(rng), rng);
    const auto y = white(g.node_count(), 10 + k);
    const auto r = solve_map(g, y);
    worst = std::max(worst, dense_residual(g, r.x, y));
  }
  c.expect(worst <= 1e-8, "(a) solve_map relative residual <= 1e-8");

  // (b)
  {
    const auto g = random_graph(300, 0.0, rng);
    const auto y = white(300, 1);
    c.expect(solve_map(g, y).x == y, "(b) mu = 0 returns y exactly");
  }

  // (c)
  {
    BreathGraph g({{0, 0, 0}, {0, 0, 0}}, {{0, 1}}, 1.0);
    const auto x = solve_map(g, std::vector<double>{1.0, 0.0}).x;
    c.expect(std::abs(x[0] - 2.0 / 3.0) <= 1e-12 && std::abs(x[1] - 1.0 / 3.0) <= 1e-12,
             "(c) two-node solve = (2/3, 1/3)");
  }

  // (d)
  double worst_fd = 0;
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int k = 0; k < 20; ++k) {
    auto g = random_graph(10, 1.0, rng);
    Eigen::Matrix3d a;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) a(i, j) = 0.3 * gauss(rng);
    const Metric m = a * a.transpose() + 0.1 * Metric::Identity();
    g.set_metric(m);
    const auto x = white(10, 100 + k);
    const Metric grad = metric_gradient(g, x);
    Metric fd;
    const double h = 1e-6;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        Metric p = m, q = m;
        p(i, j) += h;
        q(i, j) -= h;
        fd(i, j) = (q_oracle(g, p, x) - q_oracle(g, q, x)) / (2 * h);
      }
    worst_fd = std::max(worst_fd, (grad - fd).norm() / fd.norm());
  }
  c.expect(worst_fd <= 1e-4, "(d) gradient vs central differences <= 1e-4");

  // (e)
  double min_eig = 0, idem = 0;
  for (int k = 0; k < 1000; ++k) {
    Metric s;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) s(i, j) = 3 * gauss(rng);
    const Metric p = project_psd(s);
    Eigen::SelfAdjointEigenSolver<Metric> es(p);
    min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
    idem = std::max(idem, (project_psd(p) - p).cwiseAbs().maxCoeff());
  }
  c.expect(min_eig >= -1e-12, "(e) projected min eigenvalue >= -1e-12");
  c.expect(idem <= 1e-12, "(e) projection idempotent to 1e-12");

  const double elapsed = seconds_since(t0);
  // (f) from the benchmark run above.
  c.expect(g_benchmark_gsa.runs > 0, "(f) benchmark ran GSA");
  c.expect(g_benchmark_gsa.trace_increases == 0, "(f) no objective increase on accepted steps");
  c.expect(elapsed < 60, "(a)-(e) under 1 minute");
  c.notes << "residual " << worst << ", fd error " << worst_fd << ", min eig " << min_eig
          << ", idempotence " << idem << "; benchmark GSA runs " << g_benchmark_gsa.runs
          << ", accepted steps " << g_benchmark_gsa.accepted_steps << ", increases "
          << g_benchmark_gsa.trace_increases << "; " << elapsed << " s";
  report(2, "GSA correctness", c);
}

// ---------------------------------------------------------------------------

double butter_mag(double f) {
  const double fs = 30.0;
  const auto warp = [fs](double hz) { return 2.0 * fs * std::tan(std::numbers::pi * hz / fs); };
  const double wl = warp(kBandLowHz), wh = warp(kBandHighHz), w = warp(f);
  const double q = (w * w - wl * wh) / ((wh - wl) * w);
  return 1.0 / std::sqrt(1.0 + q * q * q * q);
}

double measured_gain(double f, double seconds, std::size_t edge) {
  const auto x = sine(f, 30, seconds);
  const auto y = bandpass(x, 30);
  double sx = 0, sy = 0;
  for (std::size_t t = edge; t + edge < x.size(); ++t) {
    sx += x[t] * x[t];
    sy += y[t] * y[t];
  }
  return std::sqrt(sy / sx);
}

void criterion_preprocess() {
  Checks c;
  const auto t0 = Clock::now();
  double resid = 0;
  for (int k = 0; k < 50; ++k) {
    std::vector<double> x(50 + 37 * k);
    for (std::size_t t = 0; t < x.size(); ++t) x[t] = (k - 25) * 0.37 * t + 1000.0 / (k + 1);
    resid = std::max(resid, max_abs(detrend_least_squares(x)));
  }
  c.expect(resid < 1e-9, "detrend residual on exact lines < 1e-9");

  bool idempotent = true;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto x = white(400, seed);
    std::mt19937_64 rng(seed);
    for (int k = 0; k < 12; ++k) x[rng() % x.size()] += (rng() % 2 ? 15.0 : -15.0);
    const auto once = repair_outliers(x, 3.5);
    idempotent &= repair_outliers(once, 3.5) == once;
  }
  c.expect(idempotent, "outlier repair idempotent");

  // Design response (zero-phase = squared magnitude) and measured response.
  const double g03 = butter_mag(0.3) * butter_mag(0.3);
  const double a005 = 20 * std::log10(butter_mag(0.05) * butter_mag(0.05));
  const double a2 = 20 * std::log10(butter_mag(2.0) * butter_mag(2.0));
  const double m03 = measured_gain(0.3, 60, 150);
  const double m005 = 20 * std::log10(measured_gain(0.05, 200, 900));
  const double m2 = 20 * std::log10(measured_gain(2.0, 60, 150));
  const auto design = design_butterworth_bandpass(4, kBandLowHz, kBandHighHz, 30);
  c.expect(std::abs(magnitude_response(design, 0.3, 30) - butter_mag(0.3)) < 1e-9,
           "digital design matches the analog prototype");
  c.expect(std::abs(g03 - 1) <= 0.1 && std::abs(m03 - 1) <= 0.1, "gain at 0.3 Hz within 10%");
  c.expect(a005 <= -20 && m005 <= -20, "attenuation >= 20 dB at 0.05 Hz");
  c.expect(a2 <= -20 && m2 <= -20, "attenuation >= 20 dB at 2.0 Hz");
  const double elapsed = seconds_since(t0);
  c.expect(elapsed < 10, "under 10 s");
  c.notes.precision(4);
  c.notes << "gain 0.3 Hz " << m03 << ", 0.05 Hz " << m005 << " dB, 2 Hz " << m2 << " dB; " << elapsed
          << " s";
  report(3, "preprocessing", c);
}

// ---------------------------------------------------------------------------

CleanChannels clean_from(const std::array<std::vector<double>, kChannelCount>& xs) {
  CleanChannels c;
  c.frame_rate = 30;
  for (std::size_t k = 0; k < kChannelCount; ++k) {
    c.channels[k] = xs[k];
    c.usable[k] = true;
  }
  return c;
}

void criterion_selection() {
  Checks c;
  const auto t0 = Clock::now();
  // Trials run with a whole-record periodogram. The default 8 s Hann
  // segments are counted too and only reported.
  const auto long_window = WelchConfig::whole_record_periodogram();
  int hits = 0, default_hits = 0;
  bool scale_ok = true;
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    std::mt19937_64 rng(trial);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const std::size_t target = rng() % kChannelCount;
    std::array<std::vector<double>, kChannelCount> xs;
    for (std::size_t k = 0; k < kChannelCount; ++k)
      xs[k] = k == target ? sine(0.2 + 0.4 * u(rng), 30, 60, 1.0, 6.28 * u(rng))
                          : white(1800, 1000 * trial + k);
    const auto base = select_informative(clean_from(xs), long_window);
    if (base.channel == target) ++hits;
    if (select_informative(clean_from(xs)).channel == target) ++default_hits;
    for (double factor : {0.1, 10.0})
      for (std::size_t k = 0; k < kChannelCount; ++k) {
        auto scaled = xs;
        for (auto& v : scaled[k]) v *= factor;
        scale_ok &= select_informative(clean_from(scaled), long_window).channel == base.channel;
        scale_ok &= select_informative(clean_from(scaled)).channel ==
                    select_informative(clean_from(xs)).channel;
      }
  }
  c.expect(hits >= 99, "sine channel selected in >= 99/100 trials");
  c.expect(scale_ok, "argmax unchanged under x0.1 / x10 per-channel scaling");

  double lowest = 1;
  for (double f : {0.2, 0.3, 0.45, 0.6}) {
    const auto spec = welch_psd(sine(f, 30, 120), 30, WelchConfig::whole_record_periodogram());
    lowest = std::min(lowest, periodicity_index(spec));
  }
  c.expect(lowest >= 0.9, "long-window in-band sine index >= 0.9");
  const double elapsed = seconds_since(t0);
  c.expect(elapsed < 30, "under 30 s");
  c.notes << hits << "/100 selected (" << default_hits << "/100 with 8 s Hann segments), lowest sine index " << lowest << "; " << elapsed << " s";
  report(4, "informative-signal selection", c);
}

// ---------------------------------------------------------------------------

void criterion_features() {
  Checks c;
  const auto t0 = Clock::now();
  const double rr = extract_features(sine(0.25, 30, 30), 30)[feature::RespiratoryRate];
  c.expect(rr == 15.0, "respiratory rate of a 0.25 Hz sine = 15/min");

  double worst_rms = 0;
  for (double a : {0.3, 1.0, 4.0, 25.0}) {
    const auto f = extract_features(sine(0.3, 30, 40, a, 0.7), 30);
    worst_rms = std::max(worst_rms, std::abs(f[feature::Rms] / (a / std::sqrt(2.0)) - 1));
  }
  c.expect(worst_rms <= 0.01, "sine RMS = a/sqrt(2) within 1%");

  std::vector<FeatureVector> xs;
  std::vector<Label> ys;
  for (int k = 0; k < 8; ++k) {
    FeatureVector p{}, n{};
    p[0] = 1;
    n[0] = -1;
    xs.push_back(p);
    ys.push_back(Label::Deep);
    xs.push_back(n);
    ys.push_back(Label::Normal);
  }
  const auto m = train_svm(xs, ys);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) correct += predict(m, xs[i]).label == ys[i];
  c.expect(correct == xs.size(), "toy SVM 100% training accuracy");
  c.expect(std::abs(m.bias) < 0.1, "toy SVM |b| < 0.1");

  // TP=3 FP=1 FN=1 TN=5
  const auto D = Label::Deep, N = Label::Normal;
  const std::vector<Label> pred{D, D, D, D, N, N, N, N, N, N};
  const std::vector<Label> truth{D, D, D, N, D, N, N, N, N, N};
  const auto e = evaluate(pred, truth);
  c.expect(std::abs(e.accuracy - 0.8) < 1e-12 && std::abs(e.precision - 0.75) < 1e-12 &&
               std::abs(e.recall - 0.75) < 1e-12 && std::abs(e.f1 - 0.75) < 1e-12,
           "worked example 0.8 / 0.75 / 0.75 / 0.75");
  const double elapsed = seconds_since(t0);
  c.expect(elapsed < 10, "under 10 s");
  c.notes << "rate " << rr << "/min, rms error " << worst_rms << ", bias " << m.bias << "; " << elapsed
          << " s";
  report(5, "features and classifier", c);
}

// ---------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void criterion_determinism() {
  Checks c;
  const auto t0 = Clock::now();
  const auto root = fs::temp_directory_path() / "gaitbreath_acceptance";
  fs::remove_all(root);
  std::ostringstream out, err;
  int rc = run_cli({"synth", "--out", (root / "dataset").string()}, out, err);
  c.expect(rc == 0, "synth exit 0");
  for (const char* name : {"a.json", "b.json"}) {
    rc = run_cli({"bench", "--dataset", (root / "dataset").string(), "--splits", "200", "--seed", "7",
                  "--out", (root / name).string()},
                 out, err);
    c.expect(rc == 0, std::string("bench exit 0 for ") + name);
  }
  const auto a = slurp(root / "a.json");
  c.expect(!a.empty() && a == slurp(root / "b.json"), "two runs give byte-identical report.json");

  const auto clean = render(SynthConfig{}.noise_free());
  const PipelineConfig cfg;
  const auto rep = run_benchmark(clean, cfg, 200, cfg.svm.seed);
  const auto& acc = rep.rows[0].result.accuracy;
  c.expect(acc.mean == 1.0, "noise-free dataset accuracy 1.0");
  c.notes << "report " << a.size() << " bytes; noise-free accuracy " << acc.mean << "+-" << acc.std
          << "; " << seconds_since(t0) << " s";
  fs::remove_all(root);
  report(6, "end-to-end determinism and noise-free recoverability", c);
}

}  // namespace

int main() {
  const std::vector<std::function<void()>> criteria = {
      criterion_benchmark, criterion_gsa,      criterion_preprocess,
      criterion_selection, criterion_features, criterion_determinism};
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    try {
      criteria[i]();
    } catch (const std::exception& e) {
      ++g_failures;
      std::printf("[FAIL] criterion %zu: raised %s\n", i + 1, e.what());
    }
  }
  std::printf("%d criterion(s) failed\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
