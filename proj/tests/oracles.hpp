// Brute-force reference computations used by the unit and acceptance tests.
// Nothing here calls into the library's numeric code.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <set>
#include <vector>

#include "milt/nj.hpp"
#include "milt/rng.hpp"

namespace oracle {

using Vec = std::vector<double>;

inline double dist(const Vec& a, const Vec& b) {
  long double s = 0.0L;
  for (std::size_t k = 0; k < a.size(); ++k) s += static_cast<long double>(a[k] - b[k]) * (a[k] - b[k]);
  return static_cast<double>(std::sqrt(s));
}

inline std::vector<std::vector<double>> pairwise(const std::vector<Vec>& xs) {
  std::vector<std::vector<double>> d(xs.size(), std::vector<double>(xs.size()));
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = 0; j < xs.size(); ++j) d[i][j] = i == j ? 0.0 : dist(xs[i], xs[j]);
  return d;
}

inline double salience(const std::vector<Vec>& bag, std::size_t j) {
  double s = 0.0;
  for (std::size_t k = 0; k < bag.size(); ++k)
    if (k != j) s += dist(bag[j], bag[k]);
  return s;
}

inline double min_dist(const Vec& x, const std::vector<Vec>& set) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& y : set) best = std::min(best, dist(x, y));
  return best;
}

// Weighted tree given as an edge list; nodes 0..m-1 are leaves.
struct Tree {
  std::size_t m = 0;
  std::size_t n = 0;
  std::vector<std::array<std::size_t, 2>> edges;
  std::vector<double> lengths;
};

// Random unrooted binary tree: start from a 3-leaf star and repeatedly split a
// random edge to hang a new leaf. Edge lengths uniform in (0, max_len].
inline Tree random_binary_tree(std::size_t m, milt::SplitMix64& rng, double max_len = 10.0) {
  Tree t;
  t.m = m;
  t.n = m + (m - 2);
  auto len = [&] { return max_len * (1.0 - rng.uniform()); };
  std::size_t next_internal = m;
  const std::size_t c = next_internal++;
  for (std::size_t leaf = 0; leaf < 3; ++leaf) {
    t.edges.push_back({c, leaf});
    t.lengths.push_back(len());
  }
  for (std::size_t leaf = 3; leaf < m; ++leaf) {
    const auto e = static_cast<std::size_t>(rng.below(t.edges.size()));
    const auto [a, b] = t.edges[e];
    const std::size_t u = next_internal++;
    t.edges[e] = {a, u};
    t.edges.push_back({u, b});
    t.lengths.push_back(len());
    t.edges.push_back({u, leaf});
    t.lengths.push_back(len());
  }
  return t;
}

inline std::vector<std::vector<std::pair<std::size_t, double>>> adjacency(const Tree& t) {
  std::vector<std::vector<std::pair<std::size_t, double>>> adj(t.n);
  for (std::size_t e = 0; e < t.edges.size(); ++e) {
    adj[t.edges[e][0]].push_back({t.edges[e][1], t.lengths[e]});
    adj[t.edges[e][1]].push_back({t.edges[e][0], t.lengths[e]});
  }
  return adj;
}

// Leaf-to-leaf path lengths, mirrored from the upper triangle so the matrix is exactly symmetric.
inline std::vector<std::vector<double>> path_lengths(const Tree& t) {
  const auto adj = adjacency(t);
  std::vector<std::vector<double>> d(t.m, std::vector<double>(t.m, 0.0));
  for (std::size_t s = 0; s < t.m; ++s) {
    std::vector<double> acc(t.n, -1.0);
    std::vector<std::size_t> stack{s};
    acc[s] = 0.0;
    while (!stack.empty()) {
      const auto u = stack.back();
      stack.pop_back();
      for (const auto& [v, w] : adj[u]) {
        if (acc[v] >= 0.0) continue;
        acc[v] = acc[u] + w;
        stack.push_back(v);
      }
    }
    for (std::size_t j = s + 1; j < t.m; ++j) d[s][j] = d[j][s] = acc[j];
  }
  return d;
}

// Nontrivial leaf bipartitions, each encoded as the side not containing leaf 0.
inline std::set<std::vector<bool>> splits(const Tree& t) {
  const auto adj = adjacency(t);
  std::set<std::vector<bool>> out;
  for (const auto& e : t.edges) {
    std::vector<bool> side(t.m, false);
    std::vector<char> seen(t.n, 0);
    std::vector<std::size_t> stack{e[1]};
    seen[e[0]] = seen[e[1]] = 1;
    std::size_t count = 0;
    while (!stack.empty()) {
      const auto u = stack.back();
      stack.pop_back();
      if (u < t.m) {
        side[u] = true;
        ++count;
      }
      for (const auto& [v, w] : adj[u]) {
        if (!seen[v]) {
          seen[v] = 1;
          stack.push_back(v);
        }
      }
    }
    if (count < 2 || count > t.m - 2) continue;
    if (side[0]) side.flip();
    out.insert(side);
  }
  return out;
}

inline Tree from_nj(const milt::NjTree& nj) {
  Tree t;
  t.m = nj.leaf_count();
  t.n = nj.nodes.size();
  for (const auto& e : nj.edges) {
    t.edges.push_back({e.a, e.b});
    t.lengths.push_back(e.length);
  }
  return t;
}

struct MedoidOptimum {
  double objective = std::numeric_limits<double>::infinity();
  std::vector<std::array<std::size_t, 2>> pairs;  // every optimal pair, a < b
};

// Exhaustive two-medoid search: objective(a, b) = sum_x min(d(x, a), d(x, b)).
inline MedoidOptimum exhaustive_medoids(const std::vector<Vec>& bag, double rel_tol = 1e-12) {
  const auto d = pairwise(bag);
  MedoidOptimum best;
  const std::size_t n = bag.size();
  std::vector<std::pair<double, std::array<std::size_t, 2>>> all;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      double s = 0.0;
      for (std::size_t x = 0; x < n; ++x) s += std::min(d[x][a], d[x][b]);
      all.push_back({s, {a, b}});
      best.objective = std::min(best.objective, s);
    }
  }
  for (const auto& [s, p] : all) {
    if (s <= best.objective + rel_tol * (1.0 + best.objective)) best.pairs.push_back(p);
  }
  return best;
}

// Primary medoid under the documented rule: larger cluster (ties between the
// two distances go to the lower index), then nearer to the centroid, then lower index.
inline std::size_t primary_medoid(const std::vector<Vec>& bag, std::size_t a, std::size_t b) {
  std::size_t size_a = 0, size_b = 0;
  for (std::size_t x = 0; x < bag.size(); ++x) {
    if (x == a) ++size_a;
    else if (x == b) ++size_b;
    else {
      const double da = dist(bag[x], bag[a]), db = dist(bag[x], bag[b]);
      if (da < db || (da == db && a < b)) ++size_a;
      else ++size_b;
    }
  }
  if (size_a != size_b) return size_a > size_b ? a : b;
  Vec c(bag[0].size(), 0.0);
  for (const auto& x : bag)
    for (std::size_t k = 0; k < x.size(); ++k) c[k] += x[k] / static_cast<double>(bag.size());
  const double da = dist(bag[a], c), db = dist(bag[b], c);
  if (std::abs(da - db) > 1e-12 * (1.0 + std::max(da, db))) return da < db ? a : b;
  return std::min(a, b);
}

// Minimizes a convex function of k variables over a box by repeated grid
// refinement around the best point.
inline std::pair<double, Vec> grid_minimize(const std::function<double(const Vec&)>& f, std::size_t k,
                                            const Vec& lo, const Vec& hi, int points = 41, int levels = 14) {
  Vec center(k), half(k);
  for (std::size_t i = 0; i < k; ++i) {
    center[i] = 0.5 * (lo[i] + hi[i]);
    half[i] = 0.5 * (hi[i] - lo[i]);
  }
  double best = std::numeric_limits<double>::infinity();
  Vec best_x = center;
  for (int level = 0; level < levels; ++level) {
    std::vector<int> idx(k, 0);
    while (true) {
      Vec x(k);
      for (std::size_t i = 0; i < k; ++i) {
        x[i] = center[i] - half[i] + 2.0 * half[i] * idx[i] / (points - 1);
        x[i] = std::clamp(x[i], lo[i], hi[i]);
      }
      const double v = f(x);
      if (v < best) {
        best = v;
        best_x = x;
      }
      std::size_t i = 0;
      while (i < k && ++idx[i] == points) idx[i++] = 0;
      if (i == k) break;
    }
    center = best_x;
    for (auto& h : half) h *= 4.0 / (points - 1);
  }
  return {best, best_x};
}

}  // namespace oracle
