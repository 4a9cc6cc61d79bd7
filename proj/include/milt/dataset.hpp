#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace milt {

using FeatureVector = std::vector<double>;
using ClassId = int;

// A labeled set of instances. Instance j of the bag is `instances[j]`.
struct Bag {
  std::string id;
  ClassId label = 0;
  std::vector<FeatureVector> instances;

  std::size_t size() const { return instances.size(); }
};

struct MilDataset {
  std::string name;
  std::size_t dimension = 0;
  std::vector<Bag> bags;
  std::vector<std::string> class_names;

  std::size_t num_classes() const { return class_names.size(); }
  std::size_t num_instances() const;
  std::vector<std::size_t> class_counts() const;
  // Class ids that own at least one bag, ascending.
  std::vector<ClassId> present_classes() const;
  std::optional<std::size_t> find_bag(std::string_view id) const;
  std::size_t bag_index(std::string_view id) const;  // throws NotFound

  // Throws InvalidArgument describing the first violated invariant.
  void validate() const;
};

// Default class names: {"negative", "positive"} for two classes, "class<k>" otherwise.
std::vector<std::string> default_class_names(std::size_t num_classes);

// CSV layout: header `bag_id,label,f0,...,f{d-1}`, one row per instance, rows of
// a bag grouped under its bag_id. LF or CRLF line endings.
MilDataset parse_csv(std::string_view text, std::string name);
MilDataset load_csv(const std::filesystem::path& path);
std::string to_csv(const MilDataset& ds);
void save_csv(const MilDataset& ds, const std::filesystem::path& path);

// UCI Musk `.data` layout: molecule_name,conformation_name,f1..f166,class.
// Molecules become bags; the class column maps to {0, 1}.
MilDataset parse_musk_uci(std::string_view text, std::string name);
MilDataset load_musk_uci(const std::filesystem::path& path);

// FNV-1a over the canonical CSV text; identifies a dataset in saved sessions.
std::uint64_t dataset_hash(const MilDataset& ds);

// Largest-remainder apportionment of round(fraction * sum(sizes)) items across
// groups, each group receiving floor(fraction * size) or one more.
std::vector<std::size_t> apportion(const std::vector<std::size_t>& sizes, double fraction);

struct SplitSpec {
  double train_fraction = 0.3;
  std::uint64_t seed = 0;
  bool stratified = true;
};

struct Split {
  std::vector<std::size_t> train;  // bag indices, ascending
  std::vector<std::size_t> test;
};

Split split(const MilDataset& ds, const SplitSpec& spec);

struct SyntheticSpec {
  std::size_t n_bags = 40;
  std::size_t min_instances = 3;
  std::size_t max_instances = 8;
  std::size_t dimension = 4;
  double planted_shift = 6.0;
  double noise_sigma = 1.0;
  // Probability that a negative bag carries one instance from the positive component.
  double contamination = 0.25;
  std::uint64_t seed = 1;
};

struct SyntheticDataset {
  MilDataset dataset;
  // bag_id -> index of the planted instance, for positive bags.
  std::map<std::string, std::size_t> planted;

  nlohmann::json manifest() const;
};

// Half the bags are positive (label 1). Background instances are drawn from
// N(0, sigma^2 I); each positive bag holds exactly one planted instance from
// N(shift * 1, sigma^2 I) at a random position.
SyntheticDataset generate_synthetic(const SyntheticSpec& spec);

// Gaussian blob families for experiments that need structure inside a class.
struct BlobSpec {
  ClassId label = 0;
  FeatureVector center;
  double spread = 1.0;        // sigma of the bag-level offset around the center
  std::size_t n_bags = 10;
};

struct BlobMixtureSpec {
  std::vector<BlobSpec> blobs;
  std::size_t min_instances = 3;
  std::size_t max_instances = 6;
  double instance_sigma = 0.5;  // instance noise around the bag's own center
  // Each bag also carries this many pure background instances from N(0, background_sigma^2 I).
  std::size_t background_instances = 1;
  double background_sigma = 1.0;
  std::uint64_t seed = 1;
  std::string name = "blobs";
};

struct BlobMixture {
  MilDataset dataset;
  std::vector<std::size_t> blob_of_bag;  // which BlobSpec generated each bag
};

BlobMixture generate_blob_mixture(const BlobMixtureSpec& spec);

}  // namespace milt
