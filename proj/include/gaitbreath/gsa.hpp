#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "gaitbreath/channels.hpp"

namespace gaitbreath {

using Metric = Eigen::Matrix3d;
using NodeFeature = std::array<double, 3>;

struct GraphEdge {
  std::uint32_t i = 0;
  std::uint32_t j = 0;  // i < j
  NodeFeature df{};     // f_i - f_j
};

/// Undirected weighted graph over (channel, time) samples with a 3x3 metric
/// defining w_ij = exp(-df^T M df). Each edge is stored once; a CSR view is
/// kept for row-wise products.
class BreathGraph {
 public:
  BreathGraph() = default;
  BreathGraph(std::vector<NodeFeature> features,
              std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs, double mu,
              const Metric& metric = Metric::Identity());

  std::size_t node_count() const { return features_.size(); }
  std::size_t edge_count() const { return edges_.size(); }
  double mu() const { return mu_; }
  const Metric& metric() const { return metric_; }
  const std::vector<NodeFeature>& features() const { return features_; }
  const std::vector<GraphEdge>& edges() const { return edges_; }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<double>& degree() const { return degree_; }

  /// Recomputes weights and degrees for a new metric.
  void set_metric(const Metric& metric);
  void set_mu(double mu) { mu_ = mu; }

  /// out = (I + mu L) x. Row-parallel over the CSR view.
  void apply_system(std::span<const double> x, std::span<double> out) const;
  /// x^T L x = sum over edges of w (x_i - x_j)^2.
  double laplacian_form(std::span<const double> x) const;

  const std::vector<std::size_t>& row_ptr() const { return row_ptr_; }
  const std::vector<std::uint32_t>& col() const { return col_; }
  const std::vector<std::uint32_t>& edge_of() const { return edge_of_; }

 private:
  std::vector<NodeFeature> features_;
  std::vector<GraphEdge> edges_;
  std::vector<double> weights_;
  std::vector<double> degree_;
  std::vector<std::size_t> row_ptr_;
  std::vector<std::uint32_t> col_;
  std::vector<std::uint32_t> edge_of_;
  Metric metric_ = Metric::Identity();
  double mu_ = 0.0;
};

struct NeighborhoodConfig {
  /// Temporal neighbours within +-window samples on the same channel.
  int window = 15;
  /// Connect every pair of nodes. Only sensible for short signals.
  bool dense = false;
};

/// Node features (t / (T-1), channel / 5, z-scored value) and edges for the
/// usable channels of a sample. Node index = k*T + t where k runs over usable
/// channels in channel order.
BreathGraph build_graph(const CleanChannels& clean, double mu, const NeighborhoodConfig& nb = {});

/// Stacks the usable channels in node order.
std::vector<double> stack_channels(const CleanChannels& clean);

struct SolveOptions {
  double rel_tol = 1e-10;
  std::size_t max_iters = 0;  // 0: 10 * n + 100
};

struct SolveReport {
  std::vector<double> x;
  std::size_t iterations = 0;
  double rel_residual = 0.0;
};

/// x = (I + mu L)^-1 y by Jacobi-preconditioned conjugate gradients. Throws
/// NumericalError if the relative residual is above 1e-8 at the end.
SolveReport solve_map(const BreathGraph& graph, std::span<const double> y,
                      const SolveOptions& opts = {});

/// ||y - x||^2 + mu x^T L x.
double map_objective(const BreathGraph& graph, std::span<const double> y,
                     std::span<const double> x);

/// dQ/dM for Q(M) = x^T L(M) x, entry-wise: -sum_edges df_m df_n w (x_i - x_j)^2.
Metric metric_gradient(const BreathGraph& graph, std::span<const double> x);

/// Frobenius-nearest PSD matrix: eigenvalues of (S + S^T)/2 clamped at zero.
Metric project_psd(const Metric& s);

struct GsaConfig {
  double mu = 0.5;
  double alpha0 = 1e-2;
  double step_growth = 1.1;
  int max_iters = 50;
  double tol = 1e-4;
  NeighborhoodConfig neighborhood;

  void validate() const;
};

struct GsaResult {
  CleanChannels denoised;
  Metric metric = Metric::Identity();
  /// Objective after the initial solve and after every accepted step, in the
  /// units of the input signal.
  std::vector<double> objective_trace;
  int iterations = 0;
  int accepted = 0;
};

/// Alternates the closed-form MAP solve with projected gradient steps on the
/// metric. A step is accepted only if it lowers the objective at the current
/// x; the step size then grows by step_growth, otherwise it halves. Stops when
/// the relative decrease falls below tol or after max_iters attempts.
GsaResult denoise(const CleanChannels& clean, const GsaConfig& cfg = {});

namespace serial {
// Reference kernels: edge-list scatter instead of CSR rows, plain loops
// instead of blocked reductions.
void compute_weights(const BreathGraph& graph, const Metric& metric, std::vector<double>& weights);
void apply_system(const BreathGraph& graph, std::span<const double> x, std::span<double> out);
double laplacian_form(const BreathGraph& graph, std::span<const double> x);
Metric metric_gradient(const BreathGraph& graph, std::span<const double> x);
}  // namespace serial

}  // namespace gaitbreath
