#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "milt/dataset.hpp"

namespace milt {

// Symmetric m x m matrix with zero diagonal, stored densely.
class DistanceMatrix {
 public:
  DistanceMatrix() = default;
  explicit DistanceMatrix(std::size_t m) : m_(m), data_(m * m, 0.0) {}

  static DistanceMatrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t size() const { return m_; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * m_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * m_ + j]; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * m_, m_}; }

  // Throws InvalidArgument unless symmetric, non-negative, finite, zero diagonal.
  void validate() const;

 private:
  std::size_t m_ = 0;
  std::vector<double> data_;
};

double euclidean(std::span<const double> a, std::span<const double> b);

// Pairwise Euclidean distances. Each entry is computed once with a fixed
// summation order and mirrored, so the result is exactly symmetric.
DistanceMatrix euclidean_matrix(std::span<const FeatureVector> vectors);

enum class NodeKind { Leaf, Virtual };

struct TreeNode {
  NodeKind kind = NodeKind::Leaf;
  std::optional<std::size_t> item;  // leaves: row of the input matrix
  double x = 0.0;
  double y = 0.0;
};

struct TreeEdge {
  std::size_t a = 0;  // parent side (the node created later)
  std::size_t b = 0;
  double length = 0.0;      // clamped to >= 0
  double raw_length = 0.0;  // as computed by the joining step
};

// Unrooted tree. Built trees number leaves 0..m-1 (node id == item) and
// virtual nodes m.. in creation order.
struct NjTree {
  std::vector<TreeNode> nodes;
  std::vector<TreeEdge> edges;

  std::size_t leaf_count() const;
  std::size_t virtual_count() const;
  // Node used to root traversals and the layout: the last virtual node, or node 0.
  std::size_t root() const;
  std::size_t leaf_node(std::size_t item) const;

  struct Neighbor {
    std::size_t node;
    std::size_t edge;
  };
  std::vector<std::vector<Neighbor>> adjacency() const;

  // Parent of every node when rooted at root(); the root maps to itself.
  std::vector<std::size_t> parents() const;
  // Nodes in depth-first preorder from root(), children in adjacency order.
  std::vector<std::size_t> preorder() const;
  // Items of the leaves below each node when rooted at root().
  std::vector<std::vector<std::size_t>> leaves_below() const;

  // Sum of clamped edge lengths along the path between two leaves, per item pair.
  std::vector<std::vector<double>> path_distances() const;
};

NjTree nj_build(const DistanceMatrix& d);

struct LayoutOptions {
  double min_edge_length = 0.0;  // display floor applied to every edge
};

// Equal-angle radial layout from root(): each subtree gets an angular wedge
// proportional to its leaf count and sits at its parent's position offset by
// the edge length along the wedge bisector.
void radial_layout(NjTree& tree, const LayoutOptions& options = {});

// {nodes:[{id,kind,item?,x,y}], edges:[{a,b,length}]}
nlohmann::json tree_to_json(const NjTree& tree);

// Newick rooted at root(); leaves are labeled by `label(item)` or the item index.
std::string tree_to_newick(const NjTree& tree,
                           const std::function<std::string(std::size_t)>& label = {});

}  // namespace milt
