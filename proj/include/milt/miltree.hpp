#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "milt/dataset.hpp"
#include "milt/nj.hpp"
#include "milt/select.hpp"

namespace milt {

// Prototype slots of one bag. proto_proj fixes the bag's place in the tree and
// never changes; proto_class is the row fed to the classifier.
struct BagSlots {
  std::size_t proto_proj = 0;
  std::size_t proto_class = 0;
  std::vector<std::size_t> extra_protos;

  bool operator==(const BagSlots&) const = default;
};

enum class Position { External, Internal };

std::string to_string(Position p);

struct BagPosition {
  std::size_t bag = 0;
  Position kind = Position::Internal;
  double depth_score = 0.0;
};

struct InstanceTree {
  NjTree tree;              // leaf items are instance indices of the bag
  std::size_t proto_proj = 0;
};

class MilTree {
 public:
  MilTree(std::shared_ptr<const MilDataset> ds, SelectionMethod method, SelectionConfig cfg);
  MilTree(const MilTree&) = delete;
  MilTree& operator=(const MilTree&) = delete;

  const MilDataset& dataset() const { return *ds_; }
  const std::shared_ptr<const MilDataset>& dataset_ptr() const { return ds_; }
  SelectionMethod method() const { return method_; }
  const SelectionConfig& config() const { return cfg_; }
  const std::vector<PrototypePair>& pairs() const { return pairs_; }
  const NjTree& bag_tree() const { return bag_tree_; }

  // proto_proj = proto_class = B_ix for every bag.
  std::vector<BagSlots> initial_slots() const;

  // Built on first request and cached; safe to call from several threads.
  const InstanceTree& instance_tree(std::size_t bag) const;

  std::vector<BagPosition> classify_positions() const;

 private:
  std::shared_ptr<const MilDataset> ds_;
  SelectionMethod method_;
  SelectionConfig cfg_;
  std::vector<PrototypePair> pairs_;
  NjTree bag_tree_;
  mutable std::mutex cache_mutex_;
  mutable std::map<std::size_t, std::unique_ptr<InstanceTree>> instance_trees_;
};

std::shared_ptr<MilTree> build_miltree(std::shared_ptr<const MilDataset> ds, SelectionMethod method,
                                       const SelectionConfig& cfg = {});

// Node with the smallest eccentricity in hops; ties go to the lowest node id.
std::size_t topological_center(const NjTree& tree);

// Per leaf item: the number of virtual nodes on its path to the center,
// counting the center itself when it is virtual.
std::vector<double> center_depths(const NjTree& tree);

// External when the depth exceeds the median depth.
std::vector<BagPosition> classify_positions(const NjTree& tree);

enum class TrainingMode { Combined, External, Internal };

std::string to_string(TrainingMode m);
TrainingMode parse_training_mode(std::string_view s);

// Per class, round(fraction * class size) bags (at least one), apportioned by
// largest remainder. Combined mode draws half (rounded up) from the external
// pool and the rest from the internal pool; the single modes draw from one
// pool. An exhausted pool falls back to the other. Returns ascending bag indices.
std::vector<std::size_t> suggest_training(const MilDataset& ds, std::span<const BagPosition> positions,
                                          double fraction, std::uint64_t seed,
                                          TrainingMode mode = TrainingMode::Combined);

// Bag tree export with per-leaf bag fields.
nlohmann::json bag_tree_json(const MilTree& tree, std::span<const BagSlots> slots,
                             std::span<const BagPosition> positions);

nlohmann::json instance_tree_json(const MilTree& tree, std::size_t bag, const BagSlots& slots);

}  // namespace milt
