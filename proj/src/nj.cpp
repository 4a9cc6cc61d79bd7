#include "milt/nj.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "milt/error.hpp"

namespace milt {

DistanceMatrix DistanceMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  DistanceMatrix d(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.size()) fail(ErrorKind::InvalidArgument, "distance matrix is not square");
    for (std::size_t j = 0; j < rows.size(); ++j) d(i, j) = rows[i][j];
  }
  d.validate();
  return d;
}

void DistanceMatrix::validate() const {
  for (std::size_t i = 0; i < m_; ++i) {
    if ((*this)(i, i) != 0.0) fail(ErrorKind::InvalidArgument, "distance matrix diagonal must be 0");
    for (std::size_t j = i + 1; j < m_; ++j) {
      const double v = (*this)(i, j);
      if (!std::isfinite(v) || v < 0.0) {
        fail(ErrorKind::InvalidArgument, "distance matrix entries must be finite and >= 0");
      }
      if (v != (*this)(j, i)) fail(ErrorKind::InvalidArgument, "distance matrix is not symmetric");
    }
  }
}

double euclidean(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) fail(ErrorKind::InvalidArgument, "dimension mismatch");
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double t = a[k] - b[k];
    s += t * t;
  }
  return std::sqrt(s);
}

DistanceMatrix euclidean_matrix(std::span<const FeatureVector> vectors) {
  if (vectors.empty()) fail(ErrorKind::InvalidArgument, "no vectors");
  const std::size_t dim = vectors.front().size();
  for (const auto& v : vectors) {
    if (v.size() != dim) fail(ErrorKind::InvalidArgument, "dimension mismatch");
  }
  DistanceMatrix d(vectors.size());
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    for (std::size_t j = i + 1; j < vectors.size(); ++j) {
      const double v = euclidean(vectors[i], vectors[j]);
      d(i, j) = v;
      d(j, i) = v;
    }
  }
  return d;
}

std::size_t NjTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const auto& n) { return n.kind == NodeKind::Leaf; }));
}

std::size_t NjTree::virtual_count() const { return nodes.size() - leaf_count(); }

std::size_t NjTree::root() const {
  for (std::size_t i = nodes.size(); i-- > 0;) {
    if (nodes[i].kind == NodeKind::Virtual) return i;
  }
  return 0;
}

std::size_t NjTree::leaf_node(std::size_t item) const {
  if (item < nodes.size() && nodes[item].item == item) return item;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].item == item) return i;
  }
  fail(ErrorKind::NotFound, "no leaf for item " + std::to_string(item));
}

std::vector<std::vector<NjTree::Neighbor>> NjTree::adjacency() const {
  std::vector<std::vector<Neighbor>> adj(nodes.size());
  for (std::size_t e = 0; e < edges.size(); ++e) {
    adj[edges[e].a].push_back({edges[e].b, e});
    adj[edges[e].b].push_back({edges[e].a, e});
  }
  return adj;
}

std::vector<std::size_t> NjTree::preorder() const {
  std::vector<std::size_t> order;
  if (nodes.empty()) return order;
  const auto adj = adjacency();
  std::vector<char> seen(nodes.size(), 0);
  std::vector<std::size_t> stack{root()};
  seen[root()] = 1;
  while (!stack.empty()) {
    const auto v = stack.back();
    stack.pop_back();
    order.push_back(v);
    for (auto it = adj[v].rbegin(); it != adj[v].rend(); ++it) {
      if (!seen[it->node]) {
        seen[it->node] = 1;
        stack.push_back(it->node);
      }
    }
  }
  return order;
}

std::vector<std::size_t> NjTree::parents() const {
  std::vector<std::size_t> parent(nodes.size());
  if (nodes.empty()) return parent;
  const auto adj = adjacency();
  std::vector<char> seen(nodes.size(), 0);
  std::vector<std::size_t> stack{root()};
  parent[root()] = root();
  seen[root()] = 1;
  while (!stack.empty()) {
    const auto v = stack.back();
    stack.pop_back();
    for (const auto& n : adj[v]) {
      if (!seen[n.node]) {
        seen[n.node] = 1;
        parent[n.node] = v;
        stack.push_back(n.node);
      }
    }
  }
  return parent;
}

std::vector<std::vector<std::size_t>> NjTree::leaves_below() const {
  std::vector<std::vector<std::size_t>> below(nodes.size());
  const auto order = preorder();
  const auto parent = parents();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const auto v = *it;
    if (nodes[v].kind == NodeKind::Leaf && nodes[v].item) below[v].push_back(*nodes[v].item);
    std::sort(below[v].begin(), below[v].end());
    if (parent[v] != v) {
      auto& up = below[parent[v]];
      up.insert(up.end(), below[v].begin(), below[v].end());
    }
  }
  return below;
}

std::vector<std::vector<double>> NjTree::path_distances() const {
  std::size_t items = 0;
  for (const auto& n : nodes) {
    if (n.item) items = std::max(items, *n.item + 1);
  }
  std::vector<std::vector<double>> out(items, std::vector<double>(items, 0.0));
  const auto adj = adjacency();
  for (std::size_t s = 0; s < nodes.size(); ++s) {
    if (!nodes[s].item) continue;
    std::vector<double> dist(nodes.size(), -1.0);
    std::vector<std::size_t> stack{s};
    dist[s] = 0.0;
    while (!stack.empty()) {
      const auto v = stack.back();
      stack.pop_back();
      for (const auto& n : adj[v]) {
        if (dist[n.node] < 0.0) {
          dist[n.node] = dist[v] + edges[n.edge].length;
          stack.push_back(n.node);
        }
      }
    }
    for (std::size_t t = 0; t < nodes.size(); ++t) {
      if (nodes[t].item) out[*nodes[s].item][*nodes[t].item] = dist[t];
    }
  }
  return out;
}

NjTree nj_build(const DistanceMatrix& input) {
  input.validate();
  const std::size_t m = input.size();
  if (m == 0) fail(ErrorKind::InvalidArgument, "empty distance matrix");

  NjTree tree;
  tree.nodes.reserve(m == 1 ? 1 : 2 * m - 2);
  for (std::size_t i = 0; i < m; ++i) tree.nodes.push_back({NodeKind::Leaf, i, 0.0, 0.0});
  auto add_edge = [&tree](std::size_t parent, std::size_t child, double raw) {
    tree.edges.push_back({parent, child, std::max(0.0, raw), raw});
  };
  if (m == 1) return tree;
  if (m == 2) {
    tree.edges.push_back({0, 1, input(0, 1), input(0, 1)});
    return tree;
  }

  // Working copy indexed by slot; a joined pair's new node takes the lower slot.
  std::vector<double> d(m * m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) d[i * m + j] = input(i, j);
  }
  auto at = [&d, m](std::size_t i, std::size_t j) -> double& { return d[i * m + j]; };

  std::vector<std::size_t> node_of(m);
  for (std::size_t i = 0; i < m; ++i) node_of[i] = i;
  std::vector<std::size_t> active(m);
  for (std::size_t i = 0; i < m; ++i) active[i] = i;

  // Row minima over the other active slots bound Q(i, j) from below and let
  // whole rows be skipped during the pair search.
  std::vector<double> row_min(m, 0.0);
  std::vector<std::size_t> row_arg(m, 0);
  auto refresh_row = [&](std::size_t s) {
    row_min[s] = std::numeric_limits<double>::infinity();
    for (auto t : active) {
      if (t != s && at(s, t) < row_min[s]) {
        row_min[s] = at(s, t);
        row_arg[s] = t;
      }
    }
  };
  for (auto s : active) refresh_row(s);

  std::vector<double> r(m, 0.0);
  while (active.size() > 3) {
    const std::size_t n = active.size();
    const double denom = static_cast<double>(n - 2);
    double r_max = -std::numeric_limits<double>::infinity();
    for (auto s : active) {
      double sum = 0.0;
      for (auto t : active) sum += at(s, t);
      r[s] = sum;
      r_max = std::max(r_max, sum);
    }

    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 0;
    const double slack = 1e-9 * (1.0 + std::abs(r_max) / denom);
    for (std::size_t ai = 0; ai + 1 < n; ++ai) {
      const auto s = active[ai];
      if (row_min[s] - (r[s] + r_max) / denom > best + slack) continue;
      for (std::size_t aj = ai + 1; aj < n; ++aj) {
        const auto t = active[aj];
        const double q = at(s, t) - (r[s] + r[t]) / denom;
        if (q < best) {
          best = q;
          bi = ai;
          bj = aj;
        }
      }
    }

    const auto s = active[bi];
    const auto t = active[bj];
    const double dst = at(s, t);
    const double len_s = 0.5 * dst + (r[s] - r[t]) / (2.0 * denom);
    const double len_t = dst - len_s;
    const std::size_t u = tree.nodes.size();
    tree.nodes.push_back({NodeKind::Virtual, std::nullopt, 0.0, 0.0});
    add_edge(u, node_of[s], len_s);
    add_edge(u, node_of[t], len_t);

    active.erase(active.begin() + static_cast<std::ptrdiff_t>(bj));
    for (auto k : active) {
      if (k == s) continue;
      const double v = 0.5 * (at(s, k) + at(t, k) - dst);
      at(s, k) = v;
      at(k, s) = v;
    }
    node_of[s] = u;

    refresh_row(s);
    for (auto k : active) {
      if (k == s) continue;
      if (row_arg[k] == s || row_arg[k] == t) {
        refresh_row(k);
      } else if (at(k, s) < row_min[k]) {
        row_min[k] = at(k, s);
        row_arg[k] = s;
      }
    }
  }

  // Three nodes left: one virtual center resolves them.
  const auto a = active[0], b = active[1], c = active[2];
  const std::size_t u = tree.nodes.size();
  tree.nodes.push_back({NodeKind::Virtual, std::nullopt, 0.0, 0.0});
  add_edge(u, node_of[a], 0.5 * (at(a, b) + at(a, c) - at(b, c)));
  add_edge(u, node_of[b], 0.5 * (at(a, b) + at(b, c) - at(a, c)));
  add_edge(u, node_of[c], 0.5 * (at(a, c) + at(b, c) - at(a, b)));
  return tree;
}

void radial_layout(NjTree& tree, const LayoutOptions& options) {
  if (tree.nodes.empty()) return;
  const auto adj = tree.adjacency();
  const auto parent = tree.parents();
  const auto order = tree.preorder();
  const auto root = tree.root();

  std::vector<double> leaves(tree.nodes.size(), 0.0);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const auto v = *it;
    if (v != root && tree.nodes[v].kind == NodeKind::Leaf) leaves[v] += 1.0;
    if (parent[v] != v) leaves[parent[v]] += leaves[v];
  }

  std::vector<double> wedge_start(tree.nodes.size(), 0.0);
  std::vector<double> wedge_size(tree.nodes.size(), 0.0);
  wedge_size[root] = 2.0 * std::numbers::pi;
  tree.nodes[root].x = 0.0;
  tree.nodes[root].y = 0.0;
  for (const auto v : order) {
    double cursor = wedge_start[v];
    for (const auto& n : adj[v]) {
      if (n.node == parent[v] && v != root) continue;
      const auto c = n.node;
      const double share = leaves[v] > 0.0 ? leaves[c] / leaves[v] : 0.0;
      wedge_start[c] = cursor;
      wedge_size[c] = wedge_size[v] * share;
      cursor += wedge_size[c];
      const double angle = wedge_start[c] + 0.5 * wedge_size[c];
      const double len = std::max(tree.edges[n.edge].length, options.min_edge_length);
      tree.nodes[c].x = tree.nodes[v].x + len * std::cos(angle);
      tree.nodes[c].y = tree.nodes[v].y + len * std::sin(angle);
    }
  }
}

nlohmann::json tree_to_json(const NjTree& tree) {
  nlohmann::json nodes = nlohmann::json::array();
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const auto& n = tree.nodes[i];
    nlohmann::json j{{"id", i}, {"kind", n.kind == NodeKind::Leaf ? "leaf" : "virtual"}};
    if (n.item) j["item"] = *n.item;
    j["x"] = n.x;
    j["y"] = n.y;
    nodes.push_back(std::move(j));
  }
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : tree.edges) edges.push_back({{"a", e.a}, {"b", e.b}, {"length", e.length}});
  return {{"nodes", std::move(nodes)}, {"edges", std::move(edges)}};
}

namespace {

std::string format_length(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string tree_to_newick(const NjTree& tree, const std::function<std::string(std::size_t)>& label) {
  if (tree.nodes.empty()) return ";";
  const auto adj = tree.adjacency();
  const auto root = tree.root();
  auto name = [&](std::size_t v) -> std::string {
    const auto& n = tree.nodes[v];
    if (!n.item) return "";
    return label ? label(*n.item) : std::to_string(*n.item);
  };

  // Iterative post-order to keep deep caterpillars off the call stack.
  struct Frame {
    std::size_t node, from, next;
  };
  std::vector<std::string> text(tree.nodes.size());
  std::vector<Frame> stack{{root, root, 0}};
  while (!stack.empty()) {
    auto& f = stack.back();
    if (f.next < adj[f.node].size()) {
      const auto nb = adj[f.node][f.next++];
      if (f.node != root && nb.node == f.from) continue;
      stack.push_back({nb.node, f.node, 0});
      continue;
    }
    std::string children;
    for (const auto& nb : adj[f.node]) {
      if (f.node != root && nb.node == f.from) continue;
      if (!children.empty()) children += ',';
      children += text[nb.node] + ":" + format_length(tree.edges[nb.edge].length);
      text[nb.node].clear();
    }
    text[f.node] = children.empty() ? name(f.node) : "(" + children + ")" + name(f.node);
    stack.pop_back();
  }
  return text[root] + ";";
}

}  // namespace milt
