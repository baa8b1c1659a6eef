#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <set>

#include "gaitbreath/error.hpp"
#include "gaitbreath/gsa.hpp"
#include "helpers.hpp"

using namespace gaitbreath;

namespace {

using Pairs = std::vector<std::pair<std::uint32_t, std::uint32_t>>;

BreathGraph random_graph(std::size_t n, std::size_t extra_edges, double mu, std::mt19937_64& rng,
                         bool chain = true) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<NodeFeature> f(n);
  for (auto& v : f) v = {g(rng), g(rng), g(rng)};
  Pairs p;
  if (chain)
    for (std::uint32_t i = 0; i + 1 < n; ++i) p.emplace_back(i, i + 1);
  std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(n - 1));
  for (std::size_t k = 0; k < extra_edges; ++k) p.emplace_back(pick(rng), pick(rng));
  return BreathGraph(std::move(f), std::move(p), mu);
}

// Q(M) = sum over edges of exp(-df^T M df) (x_i - x_j)^2, computed here
// without the library.
double q_oracle(const BreathGraph& g, const Metric& m, const std::vector<double>& x) {
  double q = 0;
  for (const auto& e : g.edges()) {
    const Eigen::Vector3d d(e.df[0], e.df[1], e.df[2]);
    const double diff = x[e.i] - x[e.j];
    q += std::exp(-d.dot(m * d)) * diff * diff;
  }
  return q;
}

Eigen::MatrixXd dense_system(const BreathGraph& g) {
  const auto n = static_cast<Eigen::Index>(g.node_count());
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n);
  for (std::size_t k = 0; k < g.edge_count(); ++k) {
    const auto& e = g.edges()[k];
    const double w = g.mu() * g.weights()[k];
    a(e.i, e.i) += w;
    a(e.j, e.j) += w;
    a(e.i, e.j) -= w;
    a(e.j, e.i) -= w;
  }
  return a;
}

double rel_residual(const BreathGraph& g, const std::vector<double>& x, const std::vector<double>& y) {
  const Eigen::MatrixXd a = dense_system(g);
  const Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
  const Eigen::Map<const Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(y.size()));
  return (a * xv - yv).norm() / yv.norm();
}

CleanChannels sine_channels(double seconds, std::uint64_t noise_seed, double noise_sd) {
  CleanChannels c;
  c.frame_rate = 30;
  for (std::size_t k = 0; k < kChannelCount; ++k) {
    c.channels[k] = testing::sine(0.3, 30, seconds, 1.0 + 0.2 * k, 0.1 * k);
    if (noise_sd > 0) {
      const auto n = testing::white(c.channels[k].size(), noise_seed + k, noise_sd);
      for (std::size_t t = 0; t < n.size(); ++t) c.channels[k][t] += n[t];
    }
    c.usable[k] = true;
  }
  return c;
}

}  // namespace

TEST_CASE("edge weight examples") {
  std::vector<NodeFeature> f{{0.5, 0.2, 0.1}, {0.5, 0.2, 0.1}, {1.5, 0.2, 0.1}};
  BreathGraph g(f, {{0, 1}, {1, 2}}, 1.0);
  REQUIRE(g.edge_count() == 2);
  CHECK(g.weights()[0] == 1.0);
  CHECK(g.weights()[1] == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(g.weights()[1] == doctest::Approx(0.3679).epsilon(1e-4));
  g.set_metric(Metric::Zero());
  CHECK(g.weights()[0] == 1.0);
  CHECK(g.weights()[1] == 1.0);
}

TEST_CASE("graph stores each undirected edge once and drops self loops") {
  std::vector<NodeFeature> f(4, NodeFeature{0, 0, 0});
  BreathGraph g(f, {{1, 0}, {0, 1}, {2, 2}, {3, 2}}, 1.0);
  CHECK(g.edge_count() == 2);
  CHECK(g.edges()[0].i == 0);
  CHECK(g.edges()[0].j == 1);
  CHECK(g.degree()[2] == 1.0);
}

TEST_CASE("two-node hand solve") {
  BreathGraph g({{0, 0, 0}, {0, 0, 0}}, {{0, 1}}, 1.0);
  const std::vector<double> y{1.0, 0.0};
  const auto r = solve_map(g, y);
  CHECK(std::abs(r.x[0] - 2.0 / 3.0) < 1e-12);
  CHECK(std::abs(r.x[1] - 1.0 / 3.0) < 1e-12);
}

TEST_CASE("mu = 0 gives x = y exactly") {
  std::mt19937_64 rng(1);
  const auto g = random_graph(200, 400, 0.0, rng);
  const auto y = testing::white(200, 2);
  CHECK(solve_map(g, y).x == y);
}

TEST_CASE("constant y is a fixed point") {
  std::mt19937_64 rng(2);
  for (double mu : {0.1, 1.0, 50.0}) {
    const auto g = random_graph(100, 300, mu, rng);
    const std::vector<double> y(100, -3.5);
    const auto x = solve_map(g, y).x;
    for (double v : x) CHECK(std::abs(v + 3.5) < 1e-9);
  }
}

TEST_CASE("solve_map residual on random graphs") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::size_t> size(2, 500);
  std::uniform_real_distribution<double> mu(0.01, 20.0);
  for (int k = 0; k < 100; ++k) {
    const std::size_t n = size(rng);
    const auto g = random_graph(n, 3 * n, mu(rng), rng, k % 3 != 0);
    const auto y = testing::white(n, 100 + k);
    const auto r = solve_map(g, y);
    CHECK(r.rel_residual <= 1e-8);
    CHECK(rel_residual(g, r.x, y) <= 1e-8);
  }
}

TEST_CASE("large mu drives a connected graph to consensus") {
  std::mt19937_64 rng(4);
  std::vector<NodeFeature> f(60, NodeFeature{0, 0, 0});
  Pairs p;
  for (std::uint32_t i = 0; i + 1 < 60; ++i) p.emplace_back(i, i + 1);
  BreathGraph g(f, p, 1e6);
  const auto y = testing::white(60, 5);
  const Eigen::MatrixXd a = dense_system(g);
  const Eigen::VectorXd direct = a.ldlt().solve(Eigen::Map<const Eigen::VectorXd>(y.data(), 60));
  const auto var = [](const auto& v) {
    double m = 0, s = 0;
    for (auto x : v) m += x;
    m /= v.size();
    for (auto x : v) s += (x - m) * (x - m);
    return s / v.size();
  };
  const std::vector<double> dv(direct.data(), direct.data() + 60);
  CHECK(var(dv) <= 1e-3 * var(y));
  SolveOptions opts;
  opts.max_iters = 100000;
  const auto x = solve_map(g, y, opts).x;
  CHECK(var(x) <= 1e-3 * var(y));
}

TEST_CASE("laplacian form is non-negative") {
  std::mt19937_64 rng(6);
  for (int k = 0; k < 10; ++k) {
    const auto g = random_graph(80, 200, 1.0, rng);
    for (int r = 0; r < 100; ++r) CHECK(g.laplacian_form(testing::white(80, 1000 * k + r)) >= 0.0);
  }
}

TEST_CASE("gradient of a constant signal is zero") {
  std::mt19937_64 rng(7);
  const auto g = random_graph(30, 60, 1.0, rng);
  CHECK(metric_gradient(g, std::vector<double>(30, 2.0)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("single-edge gradient") {
  Metric m = Metric::Identity() * 0.7;
  BreathGraph g({{1, 0, 0}, {0, 0, 0}}, {{0, 1}}, 1.0, m);
  const Metric d = metric_gradient(g, std::vector<double>{1.0, 0.0});
  CHECK(d(0, 0) == doctest::Approx(-std::exp(-0.7)).epsilon(1e-14));
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      if (a || b) CHECK(d(a, b) == 0.0);
}

TEST_CASE("metric gradient matches central differences") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g01(0.0, 1.0);
  for (int k = 0; k < 20; ++k) {
    auto g = random_graph(10, 15, 1.0, rng);
    Eigen::Matrix3d a;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) a(i, j) = 0.3 * g01(rng);
    const Metric m = project_psd(a * a.transpose() + 0.1 * Metric::Identity());
    g.set_metric(m);
    const auto x = testing::white(10, 50 + k);
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
    CHECK((grad - fd).norm() / fd.norm() <= 1e-4);
    CHECK(g.laplacian_form(x) == doctest::Approx(q_oracle(g, m, x)).epsilon(1e-12));
  }
}

TEST_CASE("project_psd examples") {
  Metric s = Metric::Zero();
  s.diagonal() << 1, -2, 3;
  Metric want = Metric::Zero();
  want.diagonal() << 1, 0, 3;
  CHECK((project_psd(s) - want).cwiseAbs().maxCoeff() < 1e-12);

  Metric off = Metric::Zero();
  off(0, 1) = off(1, 0) = 2;
  const Metric p = project_psd(off);
  CHECK(std::abs(p(0, 0) - 1) < 1e-12);
  CHECK(std::abs(p(0, 1) - 1) < 1e-12);
  CHECK(std::abs(p(1, 0) - 1) < 1e-12);
  CHECK(std::abs(p(1, 1) - 1) < 1e-12);
  CHECK(p.row(2).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("project_psd: psd output, idempotent, fixed on psd input, nearest") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    Metric s;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) s(i, j) = g(rng);
    const Metric p = project_psd(s);
    Eigen::SelfAdjointEigenSolver<Metric> es(p);
    CHECK(es.eigenvalues().minCoeff() >= -1e-12);
    CHECK((project_psd(p) - p).cwiseAbs().maxCoeff() <= 1e-12);
    const Metric psd = s * s.transpose();
    CHECK((project_psd(psd) - psd).cwiseAbs().maxCoeff() <= 1e-12);
    // Any other PSD candidate is no closer to the symmetrised input.
    const Metric sym = 0.5 * (s + s.transpose());
    for (int r = 0; r < 5; ++r) {
      Metric b;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) b(i, j) = 0.2 * g(rng);
      const Metric other = project_psd(p + b);
      CHECK((sym - p).norm() <= (sym - other).norm() + 1e-12);
    }
  }
}

TEST_CASE("parallel kernels equal the serial references") {
  std::mt19937_64 rng(10);
  auto g = random_graph(5000, 20000, 0.5, rng);
  Eigen::Matrix3d m;
  m << 1.0, 0.2, 0.0, 0.2, 2.0, 0.1, 0.0, 0.1, 0.5;
  g.set_metric(m);
  std::vector<double> w;
  serial::compute_weights(g, m, w);
  REQUIRE(w.size() == g.weights().size());
  for (std::size_t k = 0; k < w.size(); ++k) CHECK(w[k] == doctest::Approx(g.weights()[k]).epsilon(1e-14));
  const auto x = testing::white(5000, 11);
  std::vector<double> a(5000), b(5000);
  g.apply_system(x, a);
  serial::apply_system(g, x, b);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
  CHECK(g.laplacian_form(x) == doctest::Approx(serial::laplacian_form(g, x)).epsilon(1e-12));
  const Metric pg = metric_gradient(g, x);
  const Metric sg = serial::metric_gradient(g, x);
  CHECK((pg - sg).norm() <= 1e-12 * sg.norm());
}

TEST_CASE("build_graph layout") {
  auto c = sine_channels(10, 0, 0.0);
  c.usable[1] = false;
  c.channels[1].assign(c.length(), 0.0);
  const auto g = build_graph(c, 0.5, {15, false});
  const std::size_t t = c.length();
  CHECK(g.node_count() == 5 * t);
  // Temporal edges within +-15 samples, per usable channel.
  const std::size_t per = 15 * t - 15 * 16 / 2;
  CHECK(g.edge_count() >= 5 * per);
  const auto y = stack_channels(c);
  CHECK(y.size() == 5 * t);
  CHECK(y[t] == c.channels[2][0]);
  const auto& f = g.features();
  CHECK(f[0][0] == 0.0);
  CHECK(f[t - 1][0] == doctest::Approx(1.0));
  CHECK(f[t][1] == doctest::Approx(2.0 / 5.0));
  const auto dense = build_graph(sine_channels(2, 0, 0.0), 0.5, {15, true});
  CHECK(dense.edge_count() == dense.node_count() * (dense.node_count() - 1) / 2);
}

TEST_CASE("denoise with max_iters = 0 is one solve with M = I") {
  const auto c = sine_channels(12, 20, 0.3);
  GsaConfig cfg;
  cfg.max_iters = 0;
  const auto r = denoise(c, cfg);
  const auto g = build_graph(c, cfg.mu, cfg.neighborhood);
  const auto x = solve_map(g, stack_channels(c)).x;
  const std::size_t t = c.length();
  for (std::size_t k = 0; k < kChannelCount; ++k)
    for (std::size_t i = 0; i < t; ++i)
      CHECK(r.denoised.channels[k][i] == doctest::Approx(x[k * t + i]).epsilon(1e-7));
  CHECK(r.metric == Metric::Identity());
  CHECK(r.objective_trace.size() == 1);
}

TEST_CASE("denoise keeps a clean in-band sine") {
  const auto c = sine_channels(20, 0, 0.0);
  const auto r = denoise(c);
  for (std::size_t k = 0; k < kChannelCount; ++k)
    CHECK(testing::corr(r.denoised.channels[k], c.channels[k]) > 0.99);
}

TEST_CASE("denoise trace never increases and the result is finite") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto c = sine_channels(15, 40 + seed, 1.0);
    const auto r = denoise(c);
    CHECK(r.objective_trace.size() == static_cast<std::size_t>(r.accepted) + 1);
    for (std::size_t i = 1; i < r.objective_trace.size(); ++i)
      CHECK(r.objective_trace[i] <= r.objective_trace[i - 1]);
    for (const auto& ch : r.denoised.channels)
      for (double v : ch) CHECK(std::isfinite(v));
    Eigen::SelfAdjointEigenSolver<Metric> es(r.metric);
    CHECK(es.eigenvalues().minCoeff() >= -1e-12);
  }
}

TEST_CASE("denoise objective trace scales with the input units") {
  const auto c = sine_channels(10, 70, 0.5);
  auto c1000 = c;
  for (auto& ch : c1000.channels)
    for (auto& v : ch) v *= 1000.0;
  const auto a = denoise(c);
  const auto b = denoise(c1000);
  REQUIRE(a.objective_trace.size() == b.objective_trace.size());
  for (std::size_t i = 0; i < a.objective_trace.size(); ++i)
    CHECK(b.objective_trace[i] == doctest::Approx(a.objective_trace[i] * 1e6).epsilon(1e-6));
}

TEST_CASE("gsa config validation") {
  GsaConfig cfg;
  cfg.mu = -1;
  CHECK_THROWS_AS(cfg.validate(), ParameterError);
  cfg = {};
  cfg.step_growth = 0.9;
  CHECK_THROWS_AS(cfg.validate(), ParameterError);
}
