#include "gaitbreath/gsa.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <Eigen/Eigenvalues>

#include "gaitbreath/error.hpp"

namespace gaitbreath {

namespace {

constexpr std::size_t kBlock = 2048;

double quad_form(const NodeFeature& d, const Metric& m) {
  double q = 0.0;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) q += d[a] * m(a, b) * d[b];
  return q;
}

// Sum of term(k) for k in [0, n), computed in fixed-size blocks so the result
// does not depend on the thread count.
template <typename Term>
double blocked_sum(std::size_t n, Term&& term) {
  const std::size_t blocks = (n + kBlock - 1) / kBlock;
  std::vector<double> partial(blocks, 0.0);
#pragma omp parallel for schedule(static)
  for (long b = 0; b < static_cast<long>(blocks); ++b) {
    const std::size_t lo = static_cast<std::size_t>(b) * kBlock;
    const std::size_t hi = std::min(n, lo + kBlock);
    double s = 0.0;
    for (std::size_t k = lo; k < hi; ++k) s += term(k);
    partial[static_cast<std::size_t>(b)] = s;
  }
  return std::accumulate(partial.begin(), partial.end(), 0.0);
}

double dot(std::span<const double> a, std::span<const double> b) {
  return blocked_sum(a.size(), [&](std::size_t k) { return a[k] * b[k]; });
}

}  // namespace

// ---------------------------------------------------------------------------
// Graph

BreathGraph::BreathGraph(std::vector<NodeFeature> features,
                         std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs, double mu,
                         const Metric& metric)
    : features_(std::move(features)), mu_(mu) {
  if (!(mu >= 0.0)) throw ParameterError("graph: mu must be non-negative");
  const std::size_t n = features_.size();
  for (const auto& f : features_)
    for (double v : f)
      if (!std::isfinite(v)) throw ParameterError("graph: non-finite node feature");

  edges_.reserve(pairs.size());
  for (auto [a, b] : pairs) {
    if (a == b) continue;  // w_ii = 0
    if (a >= n || b >= n) throw ParameterError("graph: edge endpoint out of range");
    if (a > b) std::swap(a, b);
    GraphEdge e;
    e.i = a;
    e.j = b;
    for (int k = 0; k < 3; ++k) e.df[k] = features_[a][k] - features_[b][k];
    edges_.push_back(e);
  }
  std::sort(edges_.begin(), edges_.end(),
            [](const GraphEdge& l, const GraphEdge& r) { return l.i != r.i ? l.i < r.i : l.j < r.j; });
  edges_.erase(std::unique(edges_.begin(), edges_.end(),
                           [](const GraphEdge& l, const GraphEdge& r) {
                             return l.i == r.i && l.j == r.j;
                           }),
               edges_.end());

  std::vector<std::size_t> count(n, 0);
  for (const auto& e : edges_) {
    ++count[e.i];
    ++count[e.j];
  }
  row_ptr_.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) row_ptr_[i + 1] = row_ptr_[i] + count[i];
  col_.resize(row_ptr_[n]);
  edge_of_.resize(row_ptr_[n]);
  std::vector<std::size_t> fill(row_ptr_.begin(), row_ptr_.end() - 1);
  for (std::uint32_t k = 0; k < edges_.size(); ++k) {
    const auto& e = edges_[k];
    col_[fill[e.i]] = e.j;
    edge_of_[fill[e.i]++] = k;
    col_[fill[e.j]] = e.i;
    edge_of_[fill[e.j]++] = k;
  }
  set_metric(metric);
}

void BreathGraph::set_metric(const Metric& metric) {
  metric_ = metric;
  weights_.resize(edges_.size());
  const long m = static_cast<long>(edges_.size());
#pragma omp parallel for schedule(static)
  for (long k = 0; k < m; ++k) {
    weights_[static_cast<std::size_t>(k)] =
        std::exp(-quad_form(edges_[static_cast<std::size_t>(k)].df, metric_));
  }
  const long n = static_cast<long>(node_count());
  degree_.assign(node_count(), 0.0);
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) {
    double d = 0.0;
    for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) d += weights_[edge_of_[p]];
    degree_[static_cast<std::size_t>(i)] = d;
  }
}

void BreathGraph::apply_system(std::span<const double> x, std::span<double> out) const {
  const long n = static_cast<long>(node_count());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) {
    double lx = degree_[i] * x[i];
    for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p)
      lx -= weights_[edge_of_[p]] * x[col_[p]];
    out[i] = x[i] + mu_ * lx;
  }
}

double BreathGraph::laplacian_form(std::span<const double> x) const {
  return blocked_sum(edges_.size(), [&](std::size_t k) {
    const double d = x[edges_[k].i] - x[edges_[k].j];
    return weights_[k] * d * d;
  });
}

std::vector<double> stack_channels(const CleanChannels& clean) {
  std::vector<double> y;
  for (std::size_t c = 0; c < kChannelCount; ++c) {
    if (!clean.usable[c]) continue;
    y.insert(y.end(), clean.channels[c].begin(), clean.channels[c].end());
  }
  return y;
}

BreathGraph build_graph(const CleanChannels& clean, double mu, const NeighborhoodConfig& nb) {
  const std::size_t t_len = clean.length();
  if (t_len < 2) throw ParameterError("build_graph: need at least 2 samples");
  if (nb.window < 0) throw ParameterError("build_graph: window must be non-negative");
  std::vector<std::size_t> used;
  for (std::size_t c = 0; c < kChannelCount; ++c)
    if (clean.usable[c]) used.push_back(c);
  if (used.empty()) throw ParameterError("build_graph: no usable channel");

  const std::vector<double> y = stack_channels(clean);
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  double var = 0.0;
  for (double v : y) var += (v - mean) * (v - mean);
  var /= static_cast<double>(y.size());
  const double sd = std::sqrt(var);

  std::vector<NodeFeature> features(y.size());
  for (std::size_t k = 0; k < used.size(); ++k) {
    for (std::size_t t = 0; t < t_len; ++t) {
      const std::size_t node = k * t_len + t;
      features[node] = {static_cast<double>(t) / static_cast<double>(t_len - 1),
                        static_cast<double>(used[k]) / static_cast<double>(kChannelCount - 1),
                        sd > 0.0 ? (y[node] - mean) / sd : 0.0};
    }
  }

  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
  const auto node = [&](std::size_t k, std::size_t t) {
    return static_cast<std::uint32_t>(k * t_len + t);
  };
  if (nb.dense) {
    const std::size_t n = y.size();
    pairs.reserve(n * (n - 1) / 2);
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = a + 1; b < n; ++b)
        pairs.emplace_back(static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b));
  } else {
    const auto w = static_cast<std::size_t>(nb.window);
    for (std::size_t k = 0; k < used.size(); ++k)
      for (std::size_t t = 0; t < t_len; ++t)
        for (std::size_t d = 1; d <= w && t + d < t_len; ++d) pairs.emplace_back(node(k, t), node(k, t + d));
    for (std::size_t t = 0; t < t_len; ++t)
      for (std::size_t k = 0; k < used.size(); ++k)
        for (std::size_t l = k + 1; l < used.size(); ++l) pairs.emplace_back(node(k, t), node(l, t));
  }
  return BreathGraph(std::move(features), std::move(pairs), mu);
}

// ---------------------------------------------------------------------------
// MAP solve

namespace {

SolveReport conjugate_gradient(const BreathGraph& g, std::span<const double> y,
                               std::span<const double> x0, const SolveOptions& opts) {
  const std::size_t n = g.node_count();
  if (y.size() != n) throw ParameterError("solve_map: signal length does not match graph");
  SolveReport rep;
  rep.x.assign(y.begin(), y.end());
  const double ynorm = std::sqrt(dot(y, y));
  if (ynorm == 0.0) {
    std::fill(rep.x.begin(), rep.x.end(), 0.0);
    return rep;
  }
  if (g.mu() == 0.0) return rep;  // identity system
  if (!x0.empty()) rep.x.assign(x0.begin(), x0.end());

  const std::size_t max_iters = opts.max_iters ? opts.max_iters : 10 * n + 100;
  std::vector<double> diag(n), r(n), z(n), p(n), ap(n);
  for (std::size_t i = 0; i < n; ++i) diag[i] = 1.0 + g.mu() * g.degree()[i];

  auto residual = [&] {
    g.apply_system(rep.x, ap);
    for (std::size_t i = 0; i < n; ++i) r[i] = y[i] - ap[i];
    return std::sqrt(dot(r, r));
  };

  double rnorm = residual();
  // Restart a few times in case accumulated rounding stalls the recurrence.
  for (int restart = 0; restart < 3 && rnorm > opts.rel_tol * ynorm; ++restart) {
    for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / diag[i];
    p = z;
    double rz = dot(r, z);
    while (rep.iterations < max_iters) {
      g.apply_system(p, ap);
      const double pap = dot(p, ap);
      if (!(pap > 0.0)) break;
      const double alpha = rz / pap;
      const long nn = static_cast<long>(n);
#pragma omp parallel for schedule(static)
      for (long i = 0; i < nn; ++i) {
        rep.x[i] += alpha * p[i];
        r[i] -= alpha * ap[i];
      }
      ++rep.iterations;
      if (std::sqrt(dot(r, r)) <= opts.rel_tol * ynorm) break;
#pragma omp parallel for schedule(static)
      for (long i = 0; i < nn; ++i) z[i] = r[i] / diag[i];
      const double rz_next = dot(r, z);
      const double beta = rz_next / rz;
      rz = rz_next;
#pragma omp parallel for schedule(static)
      for (long i = 0; i < nn; ++i) p[i] = z[i] + beta * p[i];
    }
    rnorm = residual();
  }
  rep.rel_residual = rnorm / ynorm;
  if (!(rep.rel_residual <= 1e-8)) {
    throw NumericalError("solve_map: conjugate gradients did not converge (relative residual " +
                         std::to_string(rep.rel_residual) + " after " +
                         std::to_string(rep.iterations) + " iterations)");
  }
  return rep;
}

}  // namespace

SolveReport solve_map(const BreathGraph& graph, std::span<const double> y, const SolveOptions& opts) {
  return conjugate_gradient(graph, y, {}, opts);
}

double map_objective(const BreathGraph& graph, std::span<const double> y,
                     std::span<const double> x) {
  const double fit = blocked_sum(y.size(), [&](std::size_t k) {
    const double d = y[k] - x[k];
    return d * d;
  });
  return fit + graph.mu() * graph.laplacian_form(x);
}

Metric metric_gradient(const BreathGraph& graph, std::span<const double> x) {
  const auto& edges = graph.edges();
  const auto& w = graph.weights();
  const std::size_t m = edges.size();
  const std::size_t blocks = (m + kBlock - 1) / kBlock;
  std::vector<std::array<double, 6>> partial(blocks);
#pragma omp parallel for schedule(static)
  for (long b = 0; b < static_cast<long>(blocks); ++b) {
    std::array<double, 6> acc{};
    const std::size_t lo = static_cast<std::size_t>(b) * kBlock;
    const std::size_t hi = std::min(m, lo + kBlock);
    for (std::size_t k = lo; k < hi; ++k) {
      const auto& e = edges[k];
      const double d = x[e.i] - x[e.j];
      const double s = w[k] * d * d;
      const auto& f = e.df;
      acc[0] += f[0] * f[0] * s;
      acc[1] += f[0] * f[1] * s;
      acc[2] += f[0] * f[2] * s;
      acc[3] += f[1] * f[1] * s;
      acc[4] += f[1] * f[2] * s;
      acc[5] += f[2] * f[2] * s;
    }
    partial[static_cast<std::size_t>(b)] = acc;
  }
  std::array<double, 6> total{};
  for (const auto& p : partial)
    for (int k = 0; k < 6; ++k) total[k] += p[k];
  Metric g;
  g << total[0], total[1], total[2], total[1], total[3], total[4], total[2], total[4], total[5];
  return -g;
}

Metric project_psd(const Metric& s) {
  const Metric sym = 0.5 * (s + s.transpose());
  Eigen::SelfAdjointEigenSolver<Metric> eig(sym);
  const Eigen::Vector3d lambda = eig.eigenvalues().cwiseMax(0.0);
  Metric out = eig.eigenvectors() * lambda.asDiagonal() * eig.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

// ---------------------------------------------------------------------------
// Alternating minimisation

void GsaConfig::validate() const {
  if (!(mu >= 0.0) || !std::isfinite(mu)) throw ParameterError("gsa: mu must be >= 0");
  if (!(alpha0 > 0.0)) throw ParameterError("gsa: alpha0 must be positive");
  if (!(step_growth >= 1.0)) throw ParameterError("gsa: step growth must be >= 1");
  if (max_iters < 0) throw ParameterError("gsa: max_iters must be >= 0");
  if (!(tol >= 0.0)) throw ParameterError("gsa: tol must be >= 0");
  if (neighborhood.window < 0) throw ParameterError("gsa: window must be >= 0");
}

GsaResult denoise(const CleanChannels& clean, const GsaConfig& cfg) {
  cfg.validate();
  clean.validate();
  if (clean.usable_count() == 0) throw ParameterError("denoise: no usable channel");
  GsaResult res;
  res.denoised = clean;

  const std::vector<double> y = stack_channels(clean);
  const double scale = std::sqrt(dot(y, y) / static_cast<double>(y.size()));
  if (scale == 0.0) {
    res.objective_trace.push_back(0.0);
    return res;
  }
  // The metric update runs on the unit-RMS signal so the step size does not
  // depend on the signal's units.
  std::vector<double> yn(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) yn[i] = y[i] / scale;
  const double unit = scale * scale;

  BreathGraph graph = build_graph(clean, cfg.mu, cfg.neighborhood);
  std::vector<double> x = solve_map(graph, yn).x;
  double objective = map_objective(graph, yn, x);
  res.objective_trace.push_back(objective * unit);

  Metric metric = graph.metric();
  double alpha = cfg.alpha0;
  double fit = 0.0;
  for (std::size_t i = 0; i < yn.size(); ++i) fit += (yn[i] - x[i]) * (yn[i] - x[i]);

  for (int it = 0; it < cfg.max_iters; ++it) {
    ++res.iterations;
    const Metric grad = metric_gradient(graph, x);
    if (grad.cwiseAbs().maxCoeff() == 0.0) break;
    const Metric candidate = project_psd(metric - alpha * grad);
    graph.set_metric(candidate);
    const double trial = fit + graph.mu() * graph.laplacian_form(x);
    if (!(trial < objective)) {
      graph.set_metric(metric);
      alpha *= 0.5;
      continue;
    }
    ++res.accepted;
    alpha *= cfg.step_growth;
    metric = candidate;
    x = conjugate_gradient(graph, yn, x, {}).x;
    fit = 0.0;
    for (std::size_t i = 0; i < yn.size(); ++i) fit += (yn[i] - x[i]) * (yn[i] - x[i]);
    const double next = map_objective(graph, yn, x);
    const double rel = (objective - next) / objective;
    objective = next;
    res.objective_trace.push_back(objective * unit);
    if (rel < cfg.tol) break;
  }

  res.metric = metric;
  const std::size_t t_len = clean.length();
  std::size_t k = 0;
  for (std::size_t c = 0; c < kChannelCount; ++c) {
    if (!clean.usable[c]) continue;
    for (std::size_t t = 0; t < t_len; ++t) res.denoised.channels[c][t] = x[k * t_len + t] * scale;
    ++k;
  }
  return res;
}

// ---------------------------------------------------------------------------
// Serial references

namespace serial {

void compute_weights(const BreathGraph& graph, const Metric& metric, std::vector<double>& weights) {
  weights.resize(graph.edge_count());
  for (std::size_t k = 0; k < graph.edge_count(); ++k) {
    const auto& f = graph.edges()[k].df;
    const Eigen::Vector3d d(f[0], f[1], f[2]);
    weights[k] = std::exp(-d.dot(metric * d));
  }
}

void apply_system(const BreathGraph& graph, std::span<const double> x, std::span<double> out) {
  std::vector<double> lx(graph.node_count(), 0.0);
  for (std::size_t k = 0; k < graph.edge_count(); ++k) {
    const auto& e = graph.edges()[k];
    const double flow = graph.weights()[k] * (x[e.i] - x[e.j]);
    lx[e.i] += flow;
    lx[e.j] -= flow;
  }
  for (std::size_t i = 0; i < graph.node_count(); ++i) out[i] = x[i] + graph.mu() * lx[i];
}

double laplacian_form(const BreathGraph& graph, std::span<const double> x) {
  double q = 0.0;
  for (std::size_t k = 0; k < graph.edge_count(); ++k) {
    const auto& e = graph.edges()[k];
    q += graph.weights()[k] * (x[e.i] - x[e.j]) * (x[e.i] - x[e.j]);
  }
  return q;
}

Metric metric_gradient(const BreathGraph& graph, std::span<const double> x) {
  Metric g = Metric::Zero();
  for (std::size_t k = 0; k < graph.edge_count(); ++k) {
    const auto& e = graph.edges()[k];
    const Eigen::Vector3d d(e.df[0], e.df[1], e.df[2]);
    const double diff = x[e.i] - x[e.j];
    g -= graph.weights()[k] * diff * diff * (d * d.transpose());
  }
  return g;
}

}  // namespace serial
}  // namespace gaitbreath
