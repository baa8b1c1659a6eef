#include "gaitbreath/svm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "gaitbreath/error.hpp"

namespace gaitbreath {

Standardizer Standardizer::fit(std::span<const FeatureVector> xs) {
  Standardizer s;
  if (xs.empty()) throw ParameterError("standardizer: no training data");
  const double n = static_cast<double>(xs.size());
  for (std::size_t d = 0; d < kFeatureCount; ++d) {
    double m = 0.0;
    for (const auto& x : xs) m += x[d];
    m /= n;
    double v = 0.0;
    for (const auto& x : xs) v += (x[d] - m) * (x[d] - m);
    const double sd = std::sqrt(v / n);
    s.mean[d] = m;
    // Relative guard so constant features with rounding noise stay neutral.
    s.std[d] = sd > 1e-12 * std::max(1.0, std::abs(m)) ? sd : 1.0;
  }
  return s;
}

FeatureVector Standardizer::apply(const FeatureVector& x) const {
  FeatureVector z{};
  for (std::size_t d = 0; d < kFeatureCount; ++d) z[d] = (x[d] - mean[d]) / std[d];
  return z;
}

void SvmConfig::validate() const {
  if (!(C > 0.0) || !std::isfinite(C)) throw ParameterError("svm: C must be positive");
  if (!(tol > 0.0)) throw ParameterError("svm: tol must be positive");
}

double TrainedModel::decision(const FeatureVector& x) const {
  const FeatureVector z = standardizer.apply(x);
  double s = bias;
  for (std::size_t d = 0; d < kFeatureCount; ++d) s += weights[d] * z[d];
  return s;
}

namespace {

double sign_of(Label l) { return l == Label::Deep ? 1.0 : -1.0; }

double dot(const FeatureVector& a, const FeatureVector& b) {
  double s = 0.0;
  for (std::size_t d = 0; d < kFeatureCount; ++d) s += a[d] * b[d];
  return s;
}

}  // namespace

TrainedModel train_svm(std::span<const FeatureVector> xs, std::span<const Label> labels,
                       const SvmConfig& cfg) {
  cfg.validate();
  if (xs.size() != labels.size()) throw ParameterError("train_svm: features/labels length mismatch");
  const std::size_t n = xs.size();
  const bool has_pos = std::any_of(labels.begin(), labels.end(), [](Label l) { return l == Label::Deep; });
  const bool has_neg = std::any_of(labels.begin(), labels.end(), [](Label l) { return l == Label::Normal; });
  if (!has_pos || !has_neg) throw ParameterError("train_svm: training data must contain both classes");

  TrainedModel model;
  model.C = cfg.C;
  model.seed = cfg.seed;
  model.standardizer = Standardizer::fit(xs);
  std::vector<FeatureVector> z(n);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    z[i] = model.standardizer.apply(xs[i]);
    y[i] = sign_of(labels[i]);
  }
  std::vector<double> kernel(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) kernel[i * n + j] = kernel[j * n + i] = dot(z[i], z[j]);
  const auto K = [&](std::size_t i, std::size_t j) { return kernel[i * n + j]; };

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(cfg.seed);
  std::shuffle(order.begin(), order.end(), rng);

  const double C = cfg.C;
  std::vector<double> alpha(n, 0.0);
  std::vector<double> grad(n, -1.0);  // Q alpha - 1
  const auto in_up = [&](std::size_t t) {
    return (y[t] > 0 && alpha[t] < C) || (y[t] < 0 && alpha[t] > 0);
  };
  const auto in_low = [&](std::size_t t) {
    return (y[t] > 0 && alpha[t] > 0) || (y[t] < 0 && alpha[t] < C);
  };

  double gap = 0.0;
  std::size_t iter = 0;
  for (; iter < cfg.max_iters; ++iter) {
    // First-order choice of i, second-order choice of j (Fan, Chen & Lin).
    std::size_t i = n;
    double m_up = -HUGE_VAL;
    double m_low = HUGE_VAL;
    for (std::size_t t : order) {
      const double v = -y[t] * grad[t];
      if (in_up(t) && v > m_up) {
        m_up = v;
        i = t;
      }
      if (in_low(t) && v < m_low) m_low = v;
    }
    gap = m_up - m_low;
    if (i == n || gap < cfg.tol) break;

    std::size_t j = n;
    double best = HUGE_VAL;
    for (std::size_t t : order) {
      if (!in_low(t)) continue;
      const double b = m_up + y[t] * grad[t];
      if (b <= 0.0) continue;
      double a = K(i, i) + K(t, t) - 2.0 * K(i, t);
      if (a <= 0.0) a = 1e-12;
      const double score = -(b * b) / a;
      if (score < best) {
        best = score;
        j = t;
      }
    }
    if (j == n) break;

    double a = K(i, i) + K(j, j) - 2.0 * K(i, j);
    if (a <= 0.0) a = 1e-12;
    const double b = -y[i] * grad[i] + y[j] * grad[j];
    double lambda = b / a;
    lambda = std::min(lambda, y[i] > 0 ? C - alpha[i] : alpha[i]);
    lambda = std::min(lambda, y[j] > 0 ? alpha[j] : C - alpha[j]);
    const double di = y[i] * lambda;
    const double dj = -y[j] * lambda;
    alpha[i] = std::clamp(alpha[i] + di, 0.0, C);
    alpha[j] = std::clamp(alpha[j] + dj, 0.0, C);
    for (std::size_t t = 0; t < n; ++t)
      grad[t] += y[t] * (y[i] * K(t, i) * di + y[j] * K(t, j) * dj);
  }
  model.iterations = iter;
  model.kkt_gap = gap;

  model.weights.fill(0.0);
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t d = 0; d < kFeatureCount; ++d) model.weights[d] += alpha[t] * y[t] * z[t][d];

  // Bias from free support vectors, else the middle of the feasible interval.
  double free_sum = 0.0;
  std::size_t free_count = 0;
  double ub = HUGE_VAL;
  double lb = -HUGE_VAL;
  for (std::size_t t = 0; t < n; ++t) {
    const double r = -y[t] * grad[t];
    if (alpha[t] > 0.0 && alpha[t] < C) {
      free_sum += r;
      ++free_count;
    } else if ((y[t] > 0) == (alpha[t] <= 0.0)) {
      lb = std::max(lb, r);
    } else {
      ub = std::min(ub, r);
    }
  }
  if (free_count > 0) {
    model.bias = free_sum / static_cast<double>(free_count);
  } else if (std::isfinite(lb) && std::isfinite(ub)) {
    model.bias = 0.5 * (lb + ub);
  } else {
    model.bias = std::isfinite(lb) ? lb : (std::isfinite(ub) ? ub : 0.0);
  }
  return model;
}

double svm_objective(const TrainedModel& model, std::span<const FeatureVector> xs,
                     std::span<const Label> labels) {
  double reg = 0.0;
  for (double w : model.weights) reg += w * w;
  double loss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i)
    loss += std::max(0.0, 1.0 - sign_of(labels[i]) * model.decision(xs[i]));
  return 0.5 * reg + model.C * loss;
}

Prediction predict(const TrainedModel& model, const FeatureVector& x) {
  Prediction p;
  p.margin = model.decision(x);
  p.label = p.margin > 0.0 ? Label::Deep : Label::Normal;
  return p;
}

Metrics evaluate(std::span<const Label> predicted, std::span<const Label> truth) {
  if (predicted.size() != truth.size())
    throw ParameterError("evaluate: predictions and labels differ in length");
  if (predicted.empty()) throw ParameterError("evaluate: no predictions");
  Metrics m;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const bool p = predicted[i] == Label::Deep;
    const bool t = truth[i] == Label::Deep;
    if (p && t) ++m.tp;
    else if (p && !t) ++m.fp;
    else if (!p && t) ++m.fn;
    else ++m.tn;
  }
  m.accuracy = static_cast<double>(m.tp + m.tn) / static_cast<double>(predicted.size());
  if (m.tp + m.fp == 0) m.precision_undefined = true;
  else m.precision = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp);
  if (m.tp + m.fn == 0) m.recall_undefined = true;
  else m.recall = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn);
  if (m.precision + m.recall == 0.0) m.f1_undefined = true;
  else m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

// ---------------------------------------------------------------------------
// JSON

nlohmann::ordered_json features_to_json(const FeatureVector& f) {
  nlohmann::ordered_json j;
  for (std::size_t d = 0; d < kFeatureCount; ++d) j[std::string(kFeatureNames[d])] = f[d];
  return j;
}

FeatureVector features_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw FormatError("features: expected an object of named values");
  FeatureVector f{};
  for (std::size_t d = 0; d < kFeatureCount; ++d) {
    const std::string key(kFeatureNames[d]);
    if (!j.contains(key) || !j.at(key).is_number())
      throw FormatError("features: missing or non-numeric \"" + key + "\"");
    f[d] = j.at(key).get<double>();
  }
  return f;
}

nlohmann::ordered_json model_to_json(const TrainedModel& model) {
  nlohmann::ordered_json j;
  j["feature_names"] = nlohmann::json::array();
  for (auto name : kFeatureNames) j["feature_names"].push_back(std::string(name));
  j["weights"] = model.weights;
  j["bias"] = model.bias;
  j["standardization"]["mean"] = model.standardizer.mean;
  j["standardization"]["std"] = model.standardizer.std;
  j["C"] = model.C;
  j["seed"] = model.seed;
  return j;
}

namespace {

FeatureVector vector_field(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_array() || j.at(key).size() != kFeatureCount)
    throw FormatError(std::string("model.json: \"") + key + "\" must be a list of " +
                      std::to_string(kFeatureCount) + " numbers");
  FeatureVector v{};
  for (std::size_t d = 0; d < kFeatureCount; ++d) {
    if (!j.at(key)[d].is_number())
      throw FormatError(std::string("model.json: \"") + key + "\" holds a non-number");
    v[d] = j.at(key)[d].get<double>();
  }
  return v;
}

}  // namespace

TrainedModel model_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw FormatError("model.json: expected an object");
  TrainedModel m;
  m.weights = vector_field(j, "weights");
  if (!j.contains("bias") || !j["bias"].is_number()) throw FormatError("model.json: missing bias");
  m.bias = j["bias"].get<double>();
  if (!j.contains("standardization")) throw FormatError("model.json: missing standardization");
  m.standardizer.mean = vector_field(j["standardization"], "mean");
  m.standardizer.std = vector_field(j["standardization"], "std");
  for (double s : m.standardizer.std)
    if (!(s > 0.0)) throw FormatError("model.json: standardization std must be positive");
  if (j.contains("C")) m.C = j["C"].get<double>();
  if (j.contains("seed")) m.seed = j["seed"].get<std::uint64_t>();
  return m;
}

void write_model(const TrainedModel& model, const std::filesystem::path& path,
                 const std::string& config_hash) {
  auto j = model_to_json(model);
  if (!config_hash.empty()) j["config_hash"] = config_hash;
  write_text(path, j.dump(2) + "\n");
}

TrainedModel read_model(const std::filesystem::path& path) {
  try {
    return model_from_json(nlohmann::json::parse(read_text(path)));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("model.json: ") + e.what());
  }
}

}  // namespace gaitbreath
