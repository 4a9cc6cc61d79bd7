#include "milt/miltree.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "milt/error.hpp"
#include "milt/rng.hpp"

namespace milt {

std::string to_string(Position p) { return p == Position::External ? "external" : "internal"; }

std::string to_string(TrainingMode m) {
  switch (m) {
    case TrainingMode::Combined: return "combined";
    case TrainingMode::External: return "external";
    case TrainingMode::Internal: return "internal";
  }
  return "combined";
}

TrainingMode parse_training_mode(std::string_view s) {
  if (s == "combined") return TrainingMode::Combined;
  if (s == "external") return TrainingMode::External;
  if (s == "internal") return TrainingMode::Internal;
  fail(ErrorKind::InvalidArgument, "unknown training mode '" + std::string(s) + "'");
}

MilTree::MilTree(std::shared_ptr<const MilDataset> ds, SelectionMethod method, SelectionConfig cfg)
    : ds_(std::move(ds)), method_(method), cfg_(cfg) {
  if (!ds_) fail(ErrorKind::InvalidArgument, "null dataset");
  ds_->validate();
  pairs_ = select_prototypes(*ds_, method_, cfg_);
  std::vector<FeatureVector> points;
  points.reserve(ds_->bags.size());
  for (std::size_t i = 0; i < ds_->bags.size(); ++i) points.push_back(ds_->bags[i].instances[pairs_[i].b_ix]);
  bag_tree_ = nj_build(euclidean_matrix(points));
  radial_layout(bag_tree_);
}

std::vector<BagSlots> MilTree::initial_slots() const {
  std::vector<BagSlots> slots(pairs_.size());
  for (std::size_t i = 0; i < pairs_.size(); ++i) {
    slots[i].proto_proj = pairs_[i].b_ix;
    slots[i].proto_class = pairs_[i].b_ix;
  }
  return slots;
}

const InstanceTree& MilTree::instance_tree(std::size_t bag) const {
  if (bag >= ds_->bags.size()) fail(ErrorKind::NotFound, "bag index out of range");
  std::lock_guard lock(cache_mutex_);
  auto& slot = instance_trees_[bag];
  if (!slot) {
    auto t = std::make_unique<InstanceTree>();
    t->tree = nj_build(euclidean_matrix(ds_->bags[bag].instances));
    radial_layout(t->tree);
    t->proto_proj = pairs_[bag].b_ix;
    slot = std::move(t);
  }
  return *slot;
}

std::vector<BagPosition> MilTree::classify_positions() const { return milt::classify_positions(bag_tree_); }

std::shared_ptr<MilTree> build_miltree(std::shared_ptr<const MilDataset> ds, SelectionMethod method,
                                       const SelectionConfig& cfg) {
  return std::make_shared<MilTree>(std::move(ds), method, cfg);
}

namespace {

std::vector<std::size_t> hop_distances(const std::vector<std::vector<NjTree::Neighbor>>& adj,
                                       std::size_t from) {
  std::vector<std::size_t> dist(adj.size(), std::numeric_limits<std::size_t>::max());
  std::deque<std::size_t> queue{from};
  dist[from] = 0;
  while (!queue.empty()) {
    const auto u = queue.front();
    queue.pop_front();
    for (const auto& nb : adj[u]) {
      if (dist[nb.node] != std::numeric_limits<std::size_t>::max()) continue;
      dist[nb.node] = dist[u] + 1;
      queue.push_back(nb.node);
    }
  }
  return dist;
}

}  // namespace

std::size_t topological_center(const NjTree& tree) {
  if (tree.nodes.empty()) fail(ErrorKind::InvalidArgument, "empty tree");
  const auto adj = tree.adjacency();
  // Eccentricity of u is the larger of its distances to the two ends of a
  // diameter path, found with two sweeps.
  auto far_end = [](const std::vector<std::size_t>& d) {
    return static_cast<std::size_t>(std::max_element(d.begin(), d.end()) - d.begin());
  };
  const auto a = far_end(hop_distances(adj, 0));
  const auto da = hop_distances(adj, a);
  const auto b = far_end(da);
  const auto db = hop_distances(adj, b);
  std::size_t best = 0;
  std::size_t best_ecc = std::numeric_limits<std::size_t>::max();
  for (std::size_t u = 0; u < tree.nodes.size(); ++u) {
    const auto ecc = std::max(da[u], db[u]);
    if (ecc < best_ecc) {
      best_ecc = ecc;
      best = u;
    }
  }
  return best;
}

std::vector<double> center_depths(const NjTree& tree) {
  const auto center = topological_center(tree);
  const auto adj = tree.adjacency();
  // Count virtual nodes from the center outwards.
  std::vector<std::size_t> count(tree.nodes.size(), 0);
  std::vector<char> seen(tree.nodes.size(), 0);
  std::vector<std::size_t> stack{center};
  seen[center] = 1;
  count[center] = tree.nodes[center].kind == NodeKind::Virtual ? 1 : 0;
  while (!stack.empty()) {
    const auto u = stack.back();
    stack.pop_back();
    for (const auto& nb : adj[u]) {
      if (seen[nb.node]) continue;
      seen[nb.node] = 1;
      count[nb.node] = count[u] + (tree.nodes[nb.node].kind == NodeKind::Virtual ? 1 : 0);
      stack.push_back(nb.node);
    }
  }
  std::vector<double> depth(tree.leaf_count(), 0.0);
  for (std::size_t u = 0; u < tree.nodes.size(); ++u) {
    if (tree.nodes[u].kind == NodeKind::Leaf) depth.at(*tree.nodes[u].item) = static_cast<double>(count[u]);
  }
  return depth;
}

std::vector<BagPosition> classify_positions(const NjTree& tree) {
  const auto depth = center_depths(tree);
  std::vector<BagPosition> out(depth.size());
  if (depth.empty()) return out;
  auto sorted = depth;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  const double median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].bag = i;
    out[i].depth_score = depth[i];
    out[i].kind = depth[i] > median ? Position::External : Position::Internal;
  }
  return out;
}

std::vector<std::size_t> suggest_training(const MilDataset& ds, std::span<const BagPosition> positions,
                                          double fraction, std::uint64_t seed, TrainingMode mode) {
  if (!(fraction > 0.0 && fraction < 1.0)) fail(ErrorKind::InvalidArgument, "fraction must lie in (0, 1)");
  if (positions.size() != ds.bags.size()) fail(ErrorKind::InvalidArgument, "one position per bag expected");
  const auto counts = ds.class_counts();
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] == 0) fail(ErrorKind::InvalidArgument, "class '" + ds.class_names[c] + "' has no bags");
  }
  const auto quota = apportion(counts, fraction);

  SplitMix64 rng(seed);
  std::vector<std::size_t> chosen;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    std::vector<std::size_t> external, internal;
    for (const auto& p : positions) {
      if (ds.bags[p.bag].label != static_cast<ClassId>(c)) continue;
      (p.kind == Position::External ? external : internal).push_back(p.bag);
    }
    rng.shuffle(external);
    rng.shuffle(internal);

    const std::size_t total = std::max<std::size_t>(1, quota[c]);
    std::size_t want_ext = 0;
    switch (mode) {
      case TrainingMode::Combined: want_ext = (total + 1) / 2; break;
      case TrainingMode::External: want_ext = total; break;
      case TrainingMode::Internal: want_ext = 0; break;
    }
    std::size_t want_int = total - want_ext;
    if (want_ext > external.size()) {
      want_int += want_ext - external.size();
      want_ext = external.size();
    }
    if (want_int > internal.size()) {
      want_ext = std::min(external.size(), want_ext + want_int - internal.size());
      want_int = internal.size();
    }
    chosen.insert(chosen.end(), external.begin(), external.begin() + static_cast<std::ptrdiff_t>(want_ext));
    chosen.insert(chosen.end(), internal.begin(), internal.begin() + static_cast<std::ptrdiff_t>(want_int));
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

nlohmann::json bag_tree_json(const MilTree& tree, std::span<const BagSlots> slots,
                             std::span<const BagPosition> positions) {
  const auto& ds = tree.dataset();
  auto j = tree_to_json(tree.bag_tree());
  for (auto& node : j["nodes"]) {
    if (!node.contains("item")) continue;
    const auto bag = node["item"].get<std::size_t>();
    node["bag_id"] = ds.bags[bag].id;
    node["label"] = ds.bags[bag].label;
    if (!positions.empty()) node["position"] = to_string(positions[bag].kind);
    node["proto_proj"] = slots[bag].proto_proj;
    node["proto_class"] = slots[bag].proto_class;
  }
  j["method"] = to_string(tree.method());
  j["dataset"] = ds.name;
  return j;
}

nlohmann::json instance_tree_json(const MilTree& tree, std::size_t bag, const BagSlots& slots) {
  const auto& it = tree.instance_tree(bag);
  const auto& pair = tree.pairs().at(bag);
  auto j = tree_to_json(it.tree);
  for (auto& node : j["nodes"]) {
    if (!node.contains("item")) continue;
    const auto inst = node["item"].get<std::size_t>();
    node["proto_proj"] = inst == it.proto_proj;
    node["proto_class"] = inst == slots.proto_class;
    node["b_ix"] = inst == pair.b_ix;
    node["b_iy"] = inst == pair.b_iy;
    node["extra"] = std::find(slots.extra_protos.begin(), slots.extra_protos.end(), inst) !=
                    slots.extra_protos.end();
  }
  j["bag_id"] = tree.dataset().bags[bag].id;
  j["label"] = tree.dataset().bags[bag].label;
  return j;
}

}  // namespace milt
