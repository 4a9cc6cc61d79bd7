#pragma once

#include <compare>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "milt/dataset.hpp"

namespace milt {

enum class SelectionMethod { SI, Med };

std::string to_string(SelectionMethod m);
SelectionMethod parse_selection_method(std::string_view s);

struct SelectionConfig {
  double sigma = 1.0;     // scale of positive_probability
  std::size_t sal_num = 2;
  std::size_t medoid_max_iter = 100;
};

// Primary (b_ix) and alternative (b_iy) prototype instances of one bag.
struct PrototypePair {
  std::size_t bag = 0;
  std::size_t b_ix = 0;
  std::size_t b_iy = 0;
  SelectionMethod method = SelectionMethod::Med;
};

struct InstanceRef {
  std::size_t bag = 0;
  std::size_t instance = 0;

  auto operator<=>(const InstanceRef&) const = default;
};

// Sum of distances from instance j to the other instances of its bag.
double salience(const Bag& bag, std::size_t j);
std::vector<double> saliences(const Bag& bag);

// Instance indices by descending salience; equal saliences keep index order.
std::vector<std::size_t> salience_order(const Bag& bag);

// Minimum Euclidean distance from x to the members of `set`.
double min_dist_to_set(std::span<const double> x, std::span<const FeatureVector> set);
double min_dist_to_set(std::span<const double> x, const MilDataset& ds,
                       std::span<const InstanceRef> set);

// 1 - exp(-dist / sigma^2).
double positive_probability(double dist, double sigma);

struct SalientSelection {
  std::vector<InstanceRef> salient;  // T, grouped by positive bag in bag order
  InstanceRef optimal_positive;
  InstanceRef optimal_negative;
};

// Salient-instance selection over bags labeled `positive` against all other bags.
SalientSelection milsis(const MilDataset& ds, ClassId positive, const SelectionConfig& cfg);
std::vector<InstanceRef> milsis_select(const MilDataset& ds, ClassId positive,
                                       const SelectionConfig& cfg);

// Salience-based prototype pairs for every bag, positives = bags labeled `positive`.
std::vector<PrototypePair> select_si(const MilDataset& ds, ClassId positive,
                                     const SelectionConfig& cfg);

struct MedoidSplit {
  std::size_t medoids[2] = {0, 0};
  std::vector<int> assignment;  // 0 or 1 per instance
  std::size_t cluster_size[2] = {0, 0};
  double objective = 0.0;  // sum of distances to the assigned medoid
  std::size_t iterations = 0;
};

// Two-medoid clustering of a bag's instances: alternation from the farthest pair,
// single-swap refinement, and an exhaustive pair search for bags of up to 64 instances.
MedoidSplit kmedoids2(const Bag& bag, const SelectionConfig& cfg);

// B_ix = medoid of the larger cluster, B_iy = the other medoid.
PrototypePair select_med(const Bag& bag, const SelectionConfig& cfg, std::size_t bag_index = 0);

// Prototype pairs for every bag of the dataset, in bag order. SI on more than
// two classes runs one-vs-all and keeps each bag's pair from its own class run.
std::vector<PrototypePair> select_prototypes(const MilDataset& ds, SelectionMethod method,
                                             const SelectionConfig& cfg);

// Rows `bag_id,method,b_ix,b_iy`.
std::string prototypes_to_csv(const MilDataset& ds, std::span<const PrototypePair> pairs);

}  // namespace milt
