// Parallel kernels against their serial references.

#include <benchmark/benchmark.h>

#include <random>

#include "gaitbreath/gsa.hpp"
#include "gaitbreath/protocol.hpp"
#include "gaitbreath/roi.hpp"
#include "gaitbreath/synth.hpp"

using namespace gaitbreath;

namespace {

// A graph the size of an 18 s six-channel sample.
const BreathGraph& sample_graph() {
  static const BreathGraph g = [] {
    CleanChannels c;
    c.frame_rate = 30;
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n(0.0, 1.0);
    for (std::size_t k = 0; k < kChannelCount; ++k) {
      c.channels[k].resize(540);
      for (auto& v : c.channels[k]) v = n(rng);
      c.usable[k] = true;
    }
    return build_graph(c, 0.5);
  }();
  return g;
}

std::vector<double> signal(std::size_t n) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<double> x(n);
  for (auto& v : x) v = d(rng);
  return x;
}

Metric some_metric() {
  Metric m;
  m << 2.0, 0.1, 0.0, 0.1, 1.0, 0.2, 0.0, 0.2, 5.0;
  return m;
}

void BM_weights_parallel(benchmark::State& st) {
  BreathGraph g = sample_graph();
  const Metric m = some_metric();
  for (auto _ : st) {
    g.set_metric(m);
    benchmark::DoNotOptimize(g.weights().data());
  }
}
void BM_weights_serial(benchmark::State& st) {
  const auto& g = sample_graph();
  const Metric m = some_metric();
  std::vector<double> w;
  for (auto _ : st) {
    serial::compute_weights(g, m, w);
    benchmark::DoNotOptimize(w.data());
  }
}

void BM_apply_parallel(benchmark::State& st) {
  const auto& g = sample_graph();
  const auto x = signal(g.node_count());
  std::vector<double> out(x.size());
  for (auto _ : st) {
    g.apply_system(x, out);
    benchmark::DoNotOptimize(out.data());
  }
}
void BM_apply_serial(benchmark::State& st) {
  const auto& g = sample_graph();
  const auto x = signal(g.node_count());
  std::vector<double> out(x.size());
  for (auto _ : st) {
    serial::apply_system(g, x, out);
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_form_parallel(benchmark::State& st) {
  const auto& g = sample_graph();
  const auto x = signal(g.node_count());
  for (auto _ : st) benchmark::DoNotOptimize(g.laplacian_form(x));
}
void BM_form_serial(benchmark::State& st) {
  const auto& g = sample_graph();
  const auto x = signal(g.node_count());
  for (auto _ : st) benchmark::DoNotOptimize(serial::laplacian_form(g, x));
}

void BM_gradient_parallel(benchmark::State& st) {
  const auto& g = sample_graph();
  const auto x = signal(g.node_count());
  for (auto _ : st) benchmark::DoNotOptimize(metric_gradient(g, x));
}
void BM_gradient_serial(benchmark::State& st) {
  const auto& g = sample_graph();
  const auto x = signal(g.node_count());
  for (auto _ : st) benchmark::DoNotOptimize(serial::metric_gradient(g, x));
}

const SynthSample& walk() {
  static const SynthSample s = [] {
    SynthConfig c;
    c.width = 160;
    c.height = 120;
    return generate_sample(c, 0, 3);
  }();
  return s;
}

void BM_extract_parallel(benchmark::State& st) {
  const auto& s = walk().sample;
  const auto rois = build_rois(s.joints, s.depth.width, s.depth.height);
  for (auto _ : st) benchmark::DoNotOptimize(extract_raw_channels(s.depth, rois));
}
void BM_extract_serial(benchmark::State& st) {
  const auto& s = walk().sample;
  const auto rois = build_rois(s.joints, s.depth.width, s.depth.height);
  for (auto _ : st) benchmark::DoNotOptimize(serial::extract_raw_channels(s.depth, rois));
}

const std::vector<LabeledFeatures>& rows() {
  static const std::vector<LabeledFeatures> r = [] {
    std::vector<LabeledFeatures> out;
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int s = 0; s < 15; ++s)
      for (int w = 0; w < 6; ++w) {
        LabeledFeatures f;
        f.subject_id = "s" + std::to_string(s);
        f.id = f.subject_id + "_" + std::to_string(w);
        f.label = w < 3 ? Label::Normal : Label::Deep;
        for (auto& v : f.features) v = n(rng) + (w < 3 ? 0.0 : 0.8);
        out.push_back(f);
      }
    return out;
  }();
  return r;
}

void BM_protocol_parallel(benchmark::State& st) {
  const auto plan = make_splits(rows(), 200, 7);
  for (auto _ : st) benchmark::DoNotOptimize(run_protocol(rows(), plan, SvmConfig{}));
}
void BM_protocol_serial(benchmark::State& st) {
  const auto plan = make_splits(rows(), 200, 7);
  for (auto _ : st) benchmark::DoNotOptimize(serial::run_protocol(rows(), plan, SvmConfig{}));
}

}  // namespace

BENCHMARK(BM_weights_parallel);
BENCHMARK(BM_weights_serial);
BENCHMARK(BM_apply_parallel);
BENCHMARK(BM_apply_serial);
BENCHMARK(BM_form_parallel);
BENCHMARK(BM_form_serial);
BENCHMARK(BM_gradient_parallel);
BENCHMARK(BM_gradient_serial);
BENCHMARK(BM_extract_parallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_extract_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_protocol_parallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_protocol_serial)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
