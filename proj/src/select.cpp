#include "milt/select.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "milt/error.hpp"
#include "milt/nj.hpp"

namespace milt {

std::string to_string(SelectionMethod m) { return m == SelectionMethod::SI ? "si" : "med"; }

SelectionMethod parse_selection_method(std::string_view s) {
  if (s == "si" || s == "SI") return SelectionMethod::SI;
  if (s == "med" || s == "Med" || s == "MED") return SelectionMethod::Med;
  fail(ErrorKind::InvalidArgument, "unknown selection method '" + std::string(s) + "'");
}

double salience(const Bag& bag, std::size_t j) {
  if (j >= bag.size()) fail(ErrorKind::InvalidArgument, "instance index out of range");
  double s = 0.0;
  for (std::size_t k = 0; k < bag.size(); ++k) {
    if (k != j) s += euclidean(bag.instances[j], bag.instances[k]);
  }
  return s;
}

std::vector<double> saliences(const Bag& bag) {
  std::vector<double> out(bag.size());
  for (std::size_t j = 0; j < bag.size(); ++j) out[j] = salience(bag, j);
  return out;
}

std::vector<std::size_t> salience_order(const Bag& bag) {
  const auto sal = saliences(bag);
  std::vector<std::size_t> order(bag.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&sal](std::size_t a, std::size_t b) { return sal[a] > sal[b]; });
  return order;
}

double min_dist_to_set(std::span<const double> x, std::span<const FeatureVector> set) {
  if (set.empty()) fail(ErrorKind::InvalidArgument, "distance to an empty set");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& y : set) best = std::min(best, euclidean(x, y));
  return best;
}

double min_dist_to_set(std::span<const double> x, const MilDataset& ds,
                       std::span<const InstanceRef> set) {
  if (set.empty()) fail(ErrorKind::InvalidArgument, "distance to an empty set");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& r : set) best = std::min(best, euclidean(x, ds.bags[r.bag].instances[r.instance]));
  return best;
}

double positive_probability(double dist, double sigma) {
  if (!(sigma > 0.0)) fail(ErrorKind::InvalidArgument, "sigma must be > 0");
  if (dist < 0.0) fail(ErrorKind::InvalidArgument, "distance must be >= 0");
  return -std::expm1(-dist / (sigma * sigma));
}

namespace {

const FeatureVector& features(const MilDataset& ds, InstanceRef r) {
  return ds.bags[r.bag].instances[r.instance];
}

struct Sides {
  std::vector<std::size_t> positive_bags;
  std::vector<std::size_t> negative_bags;
  std::vector<InstanceRef> negative_instances;
};

Sides partition(const MilDataset& ds, ClassId positive) {
  Sides s;
  for (std::size_t i = 0; i < ds.bags.size(); ++i) {
    if (ds.bags[i].label == positive) {
      s.positive_bags.push_back(i);
    } else {
      s.negative_bags.push_back(i);
      for (std::size_t j = 0; j < ds.bags[i].size(); ++j) s.negative_instances.push_back({i, j});
    }
  }
  if (s.positive_bags.empty() || s.negative_bags.empty()) {
    fail(ErrorKind::InvalidArgument, "selection needs bags on both sides of class " +
                                         std::to_string(positive));
  }
  return s;
}

SalientSelection run_milsis(const MilDataset& ds, const Sides& sides, std::size_t sal_num) {
  SalientSelection out;
  std::vector<std::vector<std::size_t>> orders;
  orders.reserve(sides.positive_bags.size());

  // Rough selection: the salience-ranking endpoint farthest from the negative
  // instances, maximized over all positive bags.
  double max_dist = 0.0;
  bool found = false;
  for (const auto i : sides.positive_bags) {
    const auto& bag = ds.bags[i];
    if (sal_num > bag.size()) {
      fail(ErrorKind::InvalidArgument, "sal_num exceeds the size of bag '" + bag.id + "'");
    }
    orders.push_back(salience_order(bag));
    const InstanceRef first{i, orders.back().front()};
    const InstanceRef last{i, orders.back().back()};
    const double d_first = min_dist_to_set(features(ds, first), ds, sides.negative_instances);
    const double d_last = min_dist_to_set(features(ds, last), ds, sides.negative_instances);
    if (d_first > d_last && d_first > max_dist) {
      max_dist = d_first;
      out.optimal_positive = first;
      found = true;
    } else if (d_last > d_first && d_last > max_dist) {
      max_dist = d_last;
      out.optimal_positive = last;
      found = true;
    }
  }
  if (!found) {
    // Every endpoint tied with its partner or sat on a negative instance.
    out.optimal_positive = {sides.positive_bags.front(), orders.front().front()};
  }

  // Fine selection.
  double best = -1.0;
  for (const auto& r : sides.negative_instances) {
    const double d = euclidean(features(ds, r), features(ds, out.optimal_positive));
    if (d > best) {
      best = d;
      out.optimal_negative = r;
    }
  }
  const auto& opt_neg = features(ds, out.optimal_negative);
  for (std::size_t b = 0; b < sides.positive_bags.size(); ++b) {
    const auto i = sides.positive_bags[b];
    const auto& bag = ds.bags[i];
    const auto& order = orders[b];
    const std::size_t n = order.size();
    const bool top = euclidean(bag.instances[order.front()], opt_neg) >
                     euclidean(bag.instances[order.back()], opt_neg);
    for (std::size_t k = 0; k < sal_num; ++k) {
      out.salient.push_back({i, top ? order[k] : order[n - sal_num + k]});
    }
  }
  return out;
}

// The pair at the end of the salience ranking farther from `reference`.
std::pair<std::size_t, std::size_t> oriented_pair(const Bag& bag, const std::vector<std::size_t>& order,
                                                  const FeatureVector& reference) {
  const std::size_t n = order.size();
  if (n == 1) return {order[0], order[0]};
  if (euclidean(bag.instances[order.front()], reference) >=
      euclidean(bag.instances[order.back()], reference)) {
    return {order[0], order[1]};
  }
  return {order[n - 1], order[n - 2]};
}

}  // namespace

SalientSelection milsis(const MilDataset& ds, ClassId positive, const SelectionConfig& cfg) {
  if (cfg.sal_num < 1) fail(ErrorKind::InvalidArgument, "sal_num must be >= 1");
  return run_milsis(ds, partition(ds, positive), cfg.sal_num);
}

std::vector<InstanceRef> milsis_select(const MilDataset& ds, ClassId positive,
                                       const SelectionConfig& cfg) {
  return milsis(ds, positive, cfg).salient;
}

std::vector<PrototypePair> select_si(const MilDataset& ds, ClassId positive,
                                     const SelectionConfig& cfg) {
  if (cfg.sal_num < 1) fail(ErrorKind::InvalidArgument, "sal_num must be >= 1");
  const auto sides = partition(ds, positive);
  std::size_t sal_num = cfg.sal_num;
  for (const auto i : sides.positive_bags) sal_num = std::min(sal_num, ds.bags[i].size());

  // True positives.
  const auto salient = run_milsis(ds, sides, sal_num).salient;

  std::vector<std::vector<std::size_t>> orders(ds.bags.size());
  for (std::size_t i = 0; i < ds.bags.size(); ++i) orders[i] = salience_order(ds.bags[i]);

  // True negative per negative bag: the salience endpoint farther from T;
  // the optimal negative is the true negative farthest from T.
  InstanceRef opt_neg{};
  double best = -1.0;
  for (const auto i : sides.negative_bags) {
    const InstanceRef first{i, orders[i].front()};
    const InstanceRef last{i, orders[i].back()};
    const double d_first = min_dist_to_set(features(ds, first), ds, salient);
    const double d_last = min_dist_to_set(features(ds, last), ds, salient);
    const auto& chosen = d_last > d_first ? last : first;
    const double d = std::max(d_first, d_last);
    if (d > best) {
      best = d;
      opt_neg = chosen;
    }
  }

  // Optimal positive: the positive-bag instance farthest from the optimal negative.
  InstanceRef opt_pos{};
  best = -1.0;
  for (const auto i : sides.positive_bags) {
    for (std::size_t j = 0; j < ds.bags[i].size(); ++j) {
      const double d = euclidean(ds.bags[i].instances[j], features(ds, opt_neg));
      if (d > best) {
        best = d;
        opt_pos = {i, j};
      }
    }
  }

  std::vector<PrototypePair> out;
  out.reserve(ds.bags.size());
  for (std::size_t i = 0; i < ds.bags.size(); ++i) {
    const bool is_positive = ds.bags[i].label == positive;
    const auto& reference = features(ds, is_positive ? opt_neg : opt_pos);
    const auto [ix, iy] = oriented_pair(ds.bags[i], orders[i], reference);
    out.push_back({i, ix, iy, SelectionMethod::SI});
  }
  return out;
}

constexpr std::size_t kExhaustiveMedoidLimit = 64;

MedoidSplit kmedoids2(const Bag& bag, const SelectionConfig& cfg) {
  const std::size_t n = bag.size();
  if (n == 0) fail(ErrorKind::InvalidArgument, "empty bag");
  MedoidSplit out;
  out.assignment.assign(n, 0);
  if (n == 1) {
    out.cluster_size[0] = 1;
    return out;
  }

  const auto dist = euclidean_matrix(bag.instances);
  auto assign = [&](std::size_t m0, std::size_t m1, MedoidSplit& s) {
    s.medoids[0] = m0;
    s.medoids[1] = m1;
    s.cluster_size[0] = s.cluster_size[1] = 0;
    s.objective = 0.0;
    for (std::size_t x = 0; x < n; ++x) {
      int c;
      if (x == m0) {
        c = 0;
      } else if (x == m1) {
        c = 1;
      } else {
        const double d0 = dist(x, m0), d1 = dist(x, m1);
        // Ties go to the medoid with the lower instance index.
        c = d0 < d1 ? 0 : d1 < d0 ? 1 : (m0 < m1 ? 0 : 1);
      }
      s.assignment[x] = c;
      ++s.cluster_size[c];
      s.objective += dist(x, s.medoids[c]);
    }
  };

  // Start from the two mutually farthest instances.
  std::size_t m0 = 0, m1 = 1;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (dist(i, j) > dist(m0, m1)) {
        m0 = i;
        m1 = j;
      }
    }
  }
  assign(m0, m1, out);

  // Alternation: re-center each cluster on its distance-sum minimizer.
  for (std::size_t it = 0; it < cfg.medoid_max_iter; ++it) {
    ++out.iterations;
    std::size_t next[2];
    for (int c = 0; c < 2; ++c) {
      double best = std::numeric_limits<double>::infinity();
      next[c] = out.medoids[c];
      for (std::size_t x = 0; x < n; ++x) {
        if (out.assignment[x] != c) continue;
        double s = 0.0;
        for (std::size_t y = 0; y < n; ++y) {
          if (out.assignment[y] == c) s += dist(x, y);
        }
        if (s < best) {
          best = s;
          next[c] = x;
        }
      }
    }
    if (next[0] == out.medoids[0] && next[1] == out.medoids[1]) break;
    assign(next[0], next[1], out);
  }

  // Swap refinement: replace one medoid by a non-medoid while the objective drops.
  for (std::size_t it = 0; it < cfg.medoid_max_iter; ++it) {
    MedoidSplit best = out;
    MedoidSplit trial = out;
    for (int slot = 0; slot < 2; ++slot) {
      for (std::size_t c = 0; c < n; ++c) {
        if (c == out.medoids[0] || c == out.medoids[1]) continue;
        const std::size_t a = slot == 0 ? c : out.medoids[0];
        const std::size_t b = slot == 1 ? c : out.medoids[1];
        assign(a, b, trial);
        if (trial.objective < best.objective - 1e-12 * (1.0 + best.objective)) best = trial;
      }
    }
    if (best.medoids[0] == out.medoids[0] && best.medoids[1] == out.medoids[1]) break;
    best.iterations = out.iterations + 1;
    out = best;
  }

  // Small bags: settle on the global optimum, first pair in index order.
  if (n <= kExhaustiveMedoidLimit) {
    std::vector<double> obj(n * n, 0.0);
    double lowest = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = a + 1; b < n; ++b) {
        double s = 0.0;
        for (std::size_t x = 0; x < n; ++x) s += std::min(dist(x, a), dist(x, b));
        obj[a * n + b] = s;
        lowest = std::min(lowest, s);
      }
    }
    const double cut = lowest + 1e-12 * (1.0 + lowest);
    if (out.objective > cut) {
      bool found = false;
      for (std::size_t a = 0; a < n && !found; ++a) {
        for (std::size_t b = a + 1; b < n && !found; ++b) {
          if (obj[a * n + b] <= cut) {
            const auto iters = out.iterations;
            assign(a, b, out);
            out.iterations = iters;
            found = true;
          }
        }
      }
    }
  }

  if (out.medoids[0] > out.medoids[1]) {
    const auto iters = out.iterations;
    assign(out.medoids[1], out.medoids[0], out);
    out.iterations = iters;
  }
  return out;
}

PrototypePair select_med(const Bag& bag, const SelectionConfig& cfg, std::size_t bag_index) {
  const auto split = kmedoids2(bag, cfg);
  if (bag.size() == 1) return {bag_index, 0, 0, SelectionMethod::Med};

  int primary;
  if (split.cluster_size[0] != split.cluster_size[1]) {
    primary = split.cluster_size[0] > split.cluster_size[1] ? 0 : 1;
  } else {
    FeatureVector centroid(bag.instances.front().size(), 0.0);
    for (const auto& x : bag.instances) {
      for (std::size_t k = 0; k < x.size(); ++k) centroid[k] += x[k];
    }
    for (auto& v : centroid) v /= static_cast<double>(bag.size());
    const double d0 = euclidean(bag.instances[split.medoids[0]], centroid);
    const double d1 = euclidean(bag.instances[split.medoids[1]], centroid);
    // Distances within rounding of each other count as a tie; medoids[0] has the lower index.
    primary = d1 < d0 - 1e-12 * (1.0 + d0) ? 1 : 0;
  }
  return {bag_index, split.medoids[primary], split.medoids[1 - primary], SelectionMethod::Med};
}

std::vector<PrototypePair> select_prototypes(const MilDataset& ds, SelectionMethod method,
                                             const SelectionConfig& cfg) {
  if (method == SelectionMethod::Med) {
    std::vector<PrototypePair> out;
    out.reserve(ds.bags.size());
    for (std::size_t i = 0; i < ds.bags.size(); ++i) out.push_back(select_med(ds.bags[i], cfg, i));
    return out;
  }

  const auto classes = ds.present_classes();
  if (classes.size() < 2) fail(ErrorKind::InvalidArgument, "selection needs at least two classes");
  if (classes.size() == 2) return select_si(ds, classes[1], cfg);

  std::vector<PrototypePair> out(ds.bags.size());
  for (const auto c : classes) {
    const auto pairs = select_si(ds, c, cfg);
    for (std::size_t i = 0; i < ds.bags.size(); ++i) {
      if (ds.bags[i].label == c) out[i] = pairs[i];
    }
  }
  return out;
}

std::string prototypes_to_csv(const MilDataset& ds, std::span<const PrototypePair> pairs) {
  std::string out = "bag_id,method,b_ix,b_iy\n";
  for (const auto& p : pairs) {
    out += ds.bags.at(p.bag).id + "," + to_string(p.method) + "," + std::to_string(p.b_ix) + "," +
           std::to_string(p.b_iy) + "\n";
  }
  return out;
}

}  // namespace milt
