#include "milt/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "milt/error.hpp"

namespace milt {

std::string to_string(SvmVariant v) { return v == SvmVariant::C ? "c" : "nu"; }

SvmVariant parse_svm_variant(std::string_view s) {
  if (s == "c" || s == "C" || s == "c-svc") return SvmVariant::C;
  if (s == "nu" || s == "Nu" || s == "nu-svc") return SvmVariant::Nu;
  fail(ErrorKind::InvalidArgument, "unknown SVM variant '" + std::string(s) + "'");
}

void SvmConfig::validate() const {
  if (variant == SvmVariant::C && !(c > 0.0)) fail(ErrorKind::InvalidArgument, "C must be > 0");
  if (variant == SvmVariant::Nu && !(nu > 0.0 && nu <= 1.0)) {
    fail(ErrorKind::InvalidArgument, "nu must lie in (0, 1]");
  }
  if (!(tolerance > 0.0)) fail(ErrorKind::InvalidArgument, "tolerance must be > 0");
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

constexpr double kTau = 1e-12;
constexpr std::size_t kGramCacheLimit = 2000;

// Sequential solver for min 0.5 a'Qa + p'a subject to y'a = const and
// 0 <= a_i <= ub, Q_ij = y_i y_j <x_i, x_j>. The nu variant restricts working
// pairs to one label so that both per-label sums stay fixed.
class Solver {
 public:
  Solver(std::span<const FeatureVector> x, std::span<const int> y, double ub)
      : x_(x), y_(y), n_(x.size()), ub_(ub), diag_(n_) {
    for (std::size_t i = 0; i < n_; ++i) diag_[i] = dot(x_[i], x_[i]);
    if (n_ <= kGramCacheLimit) {
      gram_.resize(n_ * n_);
      for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t j = i; j < n_; ++j) gram_[i * n_ + j] = gram_[j * n_ + i] = dot(x_[i], x_[j]);
      }
    }
  }

  std::size_t solve(std::vector<double>& alpha, std::vector<double>& grad, std::span<const double> p,
                    double eps, std::size_t max_iter, bool nu) {
    alpha_ = &alpha;
    // grad = Q alpha + p
    grad.assign(p.begin(), p.end());
    for (std::size_t i = 0; i < n_; ++i) {
      if (alpha[i] == 0.0) continue;
      for (std::size_t k = 0; k < n_; ++k) grad[k] += y_[k] * y_[i] * kernel(i, k) * alpha[i];
    }

    std::vector<double> col_i(n_), col_j(n_);
    std::size_t iter = 0;
    while (iter < max_iter) {
      std::size_t i = 0, j = 0;
      if (!(nu ? select_nu(grad, eps, i, j) : select(grad, eps, i, j))) break;
      ++iter;
      for (std::size_t k = 0; k < n_; ++k) {
        col_i[k] = y_[i] * y_[k] * kernel(i, k);
        col_j[k] = y_[j] * y_[k] * kernel(j, k);
      }
      const double old_i = alpha[i], old_j = alpha[j];
      update_pair(i, j, col_i[j], grad);
      const double di = alpha[i] - old_i, dj = alpha[j] - old_j;
      for (std::size_t k = 0; k < n_; ++k) grad[k] += col_i[k] * di + col_j[k] * dj;
    }
    return iter;
  }

  double kernel(std::size_t i, std::size_t j) const {
    return gram_.empty() ? dot(x_[i], x_[j]) : gram_[i * n_ + j];
  }

 private:
  bool upper(std::size_t t) const { return (*alpha_)[t] >= ub_; }
  bool lower(std::size_t t) const { return (*alpha_)[t] <= 0.0; }
  bool in_up(std::size_t t) const { return y_[t] > 0 ? !upper(t) : !lower(t); }
  bool in_low(std::size_t t) const { return y_[t] > 0 ? !lower(t) : !upper(t); }

  // Maximal violating pair: i maximizes -y G over I_up, j minimizes it over I_low.
  bool select(const std::vector<double>& g, double eps, std::size_t& i, std::size_t& j) const {
    double g_max = -std::numeric_limits<double>::infinity();
    double g_min = std::numeric_limits<double>::infinity();
    bool has_i = false, has_j = false;
    for (std::size_t t = 0; t < n_; ++t) {
      const double v = -y_[t] * g[t];
      if (in_up(t) && v > g_max) {
        g_max = v;
        i = t;
        has_i = true;
      }
      if (in_low(t) && v < g_min) {
        g_min = v;
        j = t;
        has_j = true;
      }
    }
    return has_i && has_j && g_max - g_min >= eps;
  }

  bool select_nu(const std::vector<double>& g, double eps, std::size_t& i, std::size_t& j) const {
    double max_p = -std::numeric_limits<double>::infinity(), min_p = -max_p;
    double max_n = max_p, min_n = min_p;
    std::size_t ip = 0, jp = 0, in = 0, jn = 0;
    for (std::size_t t = 0; t < n_; ++t) {
      const double v = -y_[t] * g[t];
      const bool pos = y_[t] > 0;
      if (in_up(t)) {
        if (pos && v > max_p) max_p = v, ip = t;
        if (!pos && v > max_n) max_n = v, in = t;
      }
      if (in_low(t)) {
        if (pos && v < min_p) min_p = v, jp = t;
        if (!pos && v < min_n) min_n = v, jn = t;
      }
    }
    const double gap_p = max_p - min_p;
    const double gap_n = max_n - min_n;
    // A label without a usable pair has gap -inf.
    if (std::max(gap_p, gap_n) < eps) return false;
    if (gap_p >= gap_n) {
      i = ip, j = jp;
    } else {
      i = in, j = jn;
    }
    return true;
  }

  // Analytic two-variable step along the equality constraint, clipped to the box.
  void update_pair(std::size_t i, std::size_t j, double q_ij, const std::vector<double>& g) {
    auto& a = *alpha_;
    const double c = ub_;
    if (y_[i] != y_[j]) {
      double quad = diag_[i] + diag_[j] + 2.0 * q_ij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (-g[i] - g[j]) / quad;
      const double diff = a[i] - a[j];
      a[i] += delta;
      a[j] += delta;
      if (diff > 0.0) {
        if (a[j] < 0.0) {
          a[j] = 0.0;
          a[i] = diff;
        }
      } else if (a[i] < 0.0) {
        a[i] = 0.0;
        a[j] = -diff;
      }
      if (diff > 0.0) {
        if (a[i] > c) {
          a[i] = c;
          a[j] = c - diff;
        }
      } else if (a[j] > c) {
        a[j] = c;
        a[i] = c + diff;
      }
    } else {
      double quad = diag_[i] + diag_[j] - 2.0 * q_ij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (g[i] - g[j]) / quad;
      const double sum = a[i] + a[j];
      a[i] -= delta;
      a[j] += delta;
      if (sum > c) {
        if (a[i] > c) {
          a[i] = c;
          a[j] = sum - c;
        }
      } else if (a[j] < 0.0) {
        a[j] = 0.0;
        a[i] = sum;
      }
      if (sum > c) {
        if (a[j] > c) {
          a[j] = c;
          a[i] = sum - c;
        }
      } else if (a[i] < 0.0) {
        a[i] = 0.0;
        a[j] = sum;
      }
    }
  }

  std::span<const FeatureVector> x_;
  std::span<const int> y_;
  std::size_t n_;
  double ub_;
  std::vector<double> diag_;
  std::vector<double> gram_;
  std::vector<double>* alpha_ = nullptr;
};

// Offset from the free variables' values, or the midpoint of the interval
// allowed by the bounded ones when none is free.
double offset(std::span<const double> alpha, std::span<const double> values, std::span<const int> y,
              double ub) {
  double ub_v = std::numeric_limits<double>::infinity();
  double lb_v = -std::numeric_limits<double>::infinity();
  double sum = 0.0;
  std::size_t free = 0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    const double v = values[i];
    if (alpha[i] >= ub) {
      if (y[i] > 0) lb_v = std::max(lb_v, v); else ub_v = std::min(ub_v, v);
    } else if (alpha[i] <= 0.0) {
      if (y[i] > 0) ub_v = std::min(ub_v, v); else lb_v = std::max(lb_v, v);
    } else {
      ++free;
      sum += v;
    }
  }
  if (free > 0) return sum / static_cast<double>(free);
  return 0.5 * (ub_v + lb_v);
}

void check_problem(std::span<const FeatureVector> x, std::span<const int> y) {
  if (x.size() != y.size()) fail(ErrorKind::InvalidArgument, "row and label counts differ");
  if (x.empty()) fail(ErrorKind::InvalidArgument, "no training rows");
  const std::size_t d = x.front().size();
  bool pos = false, neg = false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i].size() != d) fail(ErrorKind::InvalidArgument, "dimension mismatch in training rows");
    for (double v : x[i]) {
      if (!std::isfinite(v)) fail(ErrorKind::InvalidArgument, "non-finite training feature");
    }
    if (y[i] == 1) pos = true;
    else if (y[i] == -1) neg = true;
    else fail(ErrorKind::InvalidArgument, "binary labels must be +1 or -1");
  }
  if (!pos || !neg) fail(ErrorKind::InvalidArgument, "training data has a single class");
}

}  // namespace

DualSolution solve_dual(std::span<const FeatureVector> x, std::span<const int> y,
                        const SvmConfig& cfg) {
  cfg.validate();
  check_problem(x, y);
  const std::size_t n = x.size();
  const std::size_t max_iter = std::max(cfg.max_iterations, 100 * n);
  DualSolution out;
  std::vector<double> grad;

  if (cfg.variant == SvmVariant::C) {
    Solver solver(x, y, cfg.c);
    out.alpha.assign(n, 0.0);
    const std::vector<double> p(n, -1.0);
    out.iterations = solver.solve(out.alpha, grad, p, cfg.tolerance, max_iter, false);
    std::vector<double> yg(n);
    for (std::size_t i = 0; i < n; ++i) yg[i] = y[i] * grad[i];
    out.rho = offset(out.alpha, yg, y, cfg.c);
    out.upper_bound = cfg.c;
    out.objective = 0.0;
    for (std::size_t i = 0; i < n; ++i) out.objective += out.alpha[i] * (grad[i] + p[i]);
    out.objective *= 0.5;
    return out;
  }

  std::size_t n_pos = 0;
  for (auto v : y) n_pos += v > 0;
  const std::size_t n_neg = n - n_pos;
  if (cfg.nu * static_cast<double>(n) > 2.0 * static_cast<double>(std::min(n_pos, n_neg))) {
    fail(ErrorKind::InvalidArgument, "specified nu is infeasible");
  }
  Solver solver(x, y, 1.0);
  out.alpha.assign(n, 0.0);
  double sum_pos = cfg.nu * static_cast<double>(n) / 2.0;
  double sum_neg = sum_pos;
  for (std::size_t i = 0; i < n; ++i) {
    double& remaining = y[i] > 0 ? sum_pos : sum_neg;
    out.alpha[i] = std::min(1.0, remaining);
    remaining -= out.alpha[i];
  }
  const std::vector<double> p(n, 0.0);
  out.iterations = solver.solve(out.alpha, grad, p, cfg.tolerance, max_iter, true);

  // Per-label offsets r1 (positives) and r2 (negatives), each from its own label's variables.
  std::vector<double> ap, gp, an, gn;
  std::vector<int> yp, yn;
  for (std::size_t i = 0; i < n; ++i) {
    if (y[i] > 0) {
      ap.push_back(out.alpha[i]);
      gp.push_back(grad[i]);
      yp.push_back(1);
    } else {
      an.push_back(out.alpha[i]);
      gn.push_back(grad[i]);
      yn.push_back(1);
    }
  }
  const double r1 = offset(ap, gp, yp, 1.0);
  const double r2 = offset(an, gn, yn, 1.0);
  double r = 0.5 * (r1 + r2);
  if (!std::isfinite(r)) fail(ErrorKind::InvalidArgument, "degenerate nu-SVC solution");
  // r = 0 when the reduced convex hulls of the classes meet. The margin is
  // then empty; keep the unscaled solution so the decision sign is still defined.
  if (r <= 0.0) r = 1.0;
  out.objective = 0.0;
  for (std::size_t i = 0; i < n; ++i) out.objective += out.alpha[i] * grad[i];
  out.objective *= 0.5;
  out.r = r;
  out.rho = 0.5 * (r1 - r2) / r;
  out.upper_bound = 1.0 / r;
  for (auto& a : out.alpha) a /= r;
  return out;
}

double LinearModel::decision(std::span<const double> x) const {
  if (x.size() != weights.size()) fail(ErrorKind::InvalidArgument, "dimension mismatch");
  return dot(weights, x) + bias;
}

ClassId LinearModel::predict(std::span<const double> x) const {
  return decision(x) >= 0.0 ? positive : negative;
}

LinearModel train_binary(std::span<const FeatureVector> x, std::span<const int> y,
                         const SvmConfig& cfg) {
  const auto sol = solve_dual(x, y, cfg);
  LinearModel m;
  m.weights.assign(x.front().size(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (sol.alpha[i] <= 0.0) continue;
    m.support_indices.push_back(i);
    const double coef = sol.alpha[i] * y[i];
    for (std::size_t k = 0; k < m.weights.size(); ++k) m.weights[k] += coef * x[i][k];
  }
  m.bias = -sol.rho;
  m.negative = -1;
  m.positive = 1;
  return m;
}

MinMaxScaler MinMaxScaler::fit(std::span<const FeatureVector> rows) {
  if (rows.empty()) fail(ErrorKind::InvalidArgument, "no rows to fit a scaler");
  MinMaxScaler s;
  s.lo = rows.front();
  s.hi = rows.front();
  for (const auto& r : rows) {
    for (std::size_t k = 0; k < r.size(); ++k) {
      s.lo[k] = std::min(s.lo[k], r[k]);
      s.hi[k] = std::max(s.hi[k], r[k]);
    }
  }
  return s;
}

FeatureVector MinMaxScaler::transform(std::span<const double> x) const {
  if (x.size() != lo.size()) fail(ErrorKind::InvalidArgument, "dimension mismatch");
  FeatureVector out(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double span = hi[k] - lo[k];
    out[k] = span > 0.0 ? (x[k] - lo[k]) / span : 0.0;
  }
  return out;
}

Prediction MulticlassModel::predict(std::span<const double> x) const {
  if (models.empty()) fail(ErrorKind::State, "empty model");
  if (x.size() != dimension()) fail(ErrorKind::InvalidArgument, "dimension mismatch");
  FeatureVector scaled;
  if (scaler) scaled = scaler->transform(x);
  const std::span<const double> input = scaler ? std::span<const double>(scaled) : x;

  Prediction p;
  for (const auto& m : models) p.decision_values.push_back(m.decision(input));
  if (classes.size() == 2) {
    p.label = p.decision_values[1] >= 0.0 ? classes[1] : classes[0];
    return p;
  }
  std::size_t best = 0;
  for (std::size_t k = 1; k < classes.size(); ++k) {
    if (p.decision_values[k] > p.decision_values[best]) best = k;
  }
  p.label = classes[best];
  return p;
}

std::vector<Prediction> MulticlassModel::predict_batch(std::span<const FeatureVector> rows) const {
  std::vector<Prediction> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(predict(r));
  return out;
}

MulticlassModel train_multiclass(std::span<const FeatureVector> rows, std::span<const ClassId> labels,
                                 const SvmConfig& cfg) {
  if (rows.size() != labels.size()) fail(ErrorKind::InvalidArgument, "row and label counts differ");
  if (rows.empty()) fail(ErrorKind::InvalidArgument, "no training rows");
  MulticlassModel model;
  model.config = cfg;
  model.classes.assign(labels.begin(), labels.end());
  std::sort(model.classes.begin(), model.classes.end());
  model.classes.erase(std::unique(model.classes.begin(), model.classes.end()), model.classes.end());
  if (model.classes.size() < 2) fail(ErrorKind::InvalidArgument, "training data has a single class");

  std::vector<FeatureVector> scaled;
  std::span<const FeatureVector> x = rows;
  if (cfg.scale) {
    model.scaler = MinMaxScaler::fit(rows);
    for (const auto& r : rows) scaled.push_back(model.scaler->transform(r));
    x = scaled;
  }

  auto binary_for = [&](ClassId c) {
    std::vector<int> y(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) y[i] = labels[i] == c ? 1 : -1;
    auto m = train_binary(x, y, cfg);
    m.positive = c;
    return m;
  };

  if (model.classes.size() == 2) {
    auto second = binary_for(model.classes[1]);
    second.negative = model.classes[0];
    LinearModel first = second;
    for (auto& w : first.weights) w = -w;
    first.bias = -second.bias;
    first.positive = model.classes[0];
    first.negative = model.classes[1];
    model.models = {std::move(first), std::move(second)};
    return model;
  }
  for (const auto c : model.classes) model.models.push_back(binary_for(c));
  return model;
}

nlohmann::json to_json(const SvmConfig& cfg) {
  return {{"variant", to_string(cfg.variant)},
          {"c", cfg.c},
          {"nu", cfg.nu},
          {"tolerance", cfg.tolerance},
          {"max_iterations", cfg.max_iterations},
          {"scale", cfg.scale}};
}

SvmConfig svm_config_from_json(const nlohmann::json& j) {
  SvmConfig cfg;
  if (j.contains("variant")) cfg.variant = parse_svm_variant(j.at("variant").get<std::string>());
  cfg.c = j.value("c", cfg.c);
  cfg.nu = j.value("nu", cfg.nu);
  cfg.tolerance = j.value("tolerance", cfg.tolerance);
  cfg.max_iterations = j.value("max_iterations", cfg.max_iterations);
  cfg.scale = j.value("scale", cfg.scale);
  cfg.validate();
  return cfg;
}

nlohmann::json to_json(const LinearModel& m, const SvmConfig& cfg) {
  return {{"variant", to_string(cfg.variant)},
          {"params", {{"c", cfg.c}, {"nu", cfg.nu}, {"tolerance", cfg.tolerance}}},
          {"weights", m.weights},
          {"bias", m.bias},
          {"classes", {m.negative, m.positive}},
          {"support_indices", m.support_indices}};
}

LinearModel linear_model_from_json(const nlohmann::json& j) {
  LinearModel m;
  m.weights = j.at("weights").get<std::vector<double>>();
  m.bias = j.at("bias").get<double>();
  const auto classes = j.at("classes").get<std::vector<ClassId>>();
  if (classes.size() != 2) fail(ErrorKind::Parse, "model classes must be a pair");
  m.negative = classes[0];
  m.positive = classes[1];
  m.support_indices = j.value("support_indices", std::vector<std::size_t>{});
  return m;
}

nlohmann::json to_json(const MulticlassModel& m) {
  nlohmann::json models = nlohmann::json::array();
  for (const auto& lm : m.models) models.push_back(to_json(lm, m.config));
  nlohmann::json j{{"variant", to_string(m.config.variant)},
                   {"params", to_json(m.config)},
                   {"classes", m.classes},
                   {"models", std::move(models)}};
  if (m.scaler) j["scaler"] = {{"lo", m.scaler->lo}, {"hi", m.scaler->hi}};
  return j;
}

MulticlassModel multiclass_model_from_json(const nlohmann::json& j) {
  MulticlassModel m;
  m.config = svm_config_from_json(j.at("params"));
  m.classes = j.at("classes").get<std::vector<ClassId>>();
  for (const auto& lm : j.at("models")) m.models.push_back(linear_model_from_json(lm));
  if (m.models.size() != m.classes.size()) fail(ErrorKind::Parse, "one model per class expected");
  if (j.contains("scaler")) {
    m.scaler = MinMaxScaler{j["scaler"].at("lo").get<std::vector<double>>(),
                            j["scaler"].at("hi").get<std::vector<double>>()};
  }
  return m;
}

}  // namespace milt
