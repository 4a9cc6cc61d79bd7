#include "milt/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "milt/error.hpp"
#include "milt/rng.hpp"

namespace milt {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

// Splits into lines, dropping a trailing CR and skipping blank lines. Line
// numbers (1-based) are kept for error messages.
std::vector<std::pair<std::size_t, std::string_view>> split_lines(std::string_view text) {
  std::vector<std::pair<std::size_t, std::string_view>> lines;
  std::size_t start = 0;
  std::size_t number = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    ++number;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!trim(line).empty()) lines.emplace_back(number, line);
    if (end == text.size()) break;
    start = end + 1;
  }
  return lines;
}

std::string where(const std::string& name, std::size_t line) {
  return name + ":" + std::to_string(line) + ": ";
}

double parse_real(std::string_view field, const std::string& context) {
  field = trim(field);
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double value = 0.0;
  const auto* first = field.data();
  const auto* last = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (field.empty() || ec != std::errc() || ptr != last || !std::isfinite(value)) {
    fail(ErrorKind::Parse, context + "non-numeric value '" + std::string(field) + "'");
  }
  return value;
}

ClassId parse_label(std::string_view field, const std::string& context) {
  field = trim(field);
  long long value = -1;
  const auto* last = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), last, value);
  if (field.empty() || ec != std::errc() || ptr != last || value < 0 || value > 1'000'000) {
    fail(ErrorKind::Parse, context + "label must be a non-negative integer, got '" +
                               std::string(field) + "'");
  }
  return static_cast<ClassId>(value);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Groups rows into bags in order of first appearance.
class BagBuilder {
 public:
  explicit BagBuilder(std::string name) : name_(std::move(name)) {}

  void add(std::string_view bag_id, ClassId label, FeatureVector features, std::size_t line) {
    auto it = index_.find(std::string(bag_id));
    if (it == index_.end()) {
      it = index_.emplace(std::string(bag_id), bags_.size()).first;
      bags_.push_back(Bag{std::string(bag_id), label, {}});
    }
    Bag& bag = bags_[it->second];
    if (bag.label != label) {
      fail(ErrorKind::Parse, where(name_, line) + "bag '" + bag.id +
                                 "' has inconsistent labels " + std::to_string(bag.label) +
                                 " and " + std::to_string(label));
    }
    bag.instances.push_back(std::move(features));
  }

  MilDataset finish(std::size_t dimension) {
    if (bags_.empty()) fail(ErrorKind::Parse, name_ + ": no data rows");
    ClassId max_label = 0;
    for (const auto& b : bags_) max_label = std::max(max_label, b.label);
    MilDataset ds;
    ds.name = name_;
    ds.dimension = dimension;
    ds.bags = std::move(bags_);
    ds.class_names = default_class_names(std::max<std::size_t>(2, max_label + 1));
    return ds;
  }

 private:
  std::string name_;
  std::vector<Bag> bags_;
  std::unordered_map<std::string, std::size_t> index_;
};

void append_real(std::string& out, double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, ptr);
}

}  // namespace

std::size_t MilDataset::num_instances() const {
  std::size_t n = 0;
  for (const auto& b : bags) n += b.size();
  return n;
}

std::vector<std::size_t> MilDataset::class_counts() const {
  std::vector<std::size_t> counts(num_classes(), 0);
  for (const auto& b : bags) {
    if (b.label >= 0 && static_cast<std::size_t>(b.label) < counts.size()) ++counts[b.label];
  }
  return counts;
}

std::vector<ClassId> MilDataset::present_classes() const {
  std::vector<ClassId> out;
  const auto counts = class_counts();
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] > 0) out.push_back(static_cast<ClassId>(c));
  }
  return out;
}

std::optional<std::size_t> MilDataset::find_bag(std::string_view id) const {
  for (std::size_t i = 0; i < bags.size(); ++i) {
    if (bags[i].id == id) return i;
  }
  return std::nullopt;
}

std::size_t MilDataset::bag_index(std::string_view id) const {
  if (auto i = find_bag(id)) return *i;
  fail(ErrorKind::NotFound, "unknown bag '" + std::string(id) + "'");
}

void MilDataset::validate() const {
  if (dimension < 1) fail(ErrorKind::InvalidArgument, "dimension must be >= 1");
  if (class_names.size() < 2) fail(ErrorKind::InvalidArgument, "need at least 2 classes");
  std::unordered_map<std::string, int> seen;
  for (const auto& b : bags) {
    if (!seen.emplace(b.id, 0).second) {
      fail(ErrorKind::InvalidArgument, "duplicate bag id '" + b.id + "'");
    }
    if (b.label < 0 || static_cast<std::size_t>(b.label) >= class_names.size()) {
      fail(ErrorKind::InvalidArgument, "bag '" + b.id + "' has out-of-range label");
    }
    if (b.instances.empty()) fail(ErrorKind::InvalidArgument, "bag '" + b.id + "' is empty");
    for (const auto& x : b.instances) {
      if (x.size() != dimension) {
        fail(ErrorKind::InvalidArgument, "bag '" + b.id + "' has an instance of wrong dimension");
      }
      for (double v : x) {
        if (!std::isfinite(v)) {
          fail(ErrorKind::InvalidArgument, "bag '" + b.id + "' has a non-finite feature");
        }
      }
    }
  }
}

std::vector<std::string> default_class_names(std::size_t num_classes) {
  if (num_classes == 2) return {"negative", "positive"};
  std::vector<std::string> names;
  for (std::size_t k = 0; k < num_classes; ++k) names.push_back("class" + std::to_string(k));
  return names;
}

MilDataset parse_csv(std::string_view text, std::string name) {
  const auto lines = split_lines(text);
  if (lines.empty()) fail(ErrorKind::Parse, name + ": empty file");

  const auto header = split_fields(lines.front().second);
  if (header.size() < 3 || trim(header[0]) != "bag_id" || trim(header[1]) != "label") {
    fail(ErrorKind::Parse, name + ": malformed header, expected bag_id,label,f0,...");
  }
  const std::size_t d = header.size() - 2;
  for (std::size_t k = 0; k < d; ++k) {
    if (trim(header[k + 2]) != "f" + std::to_string(k)) {
      fail(ErrorKind::Parse, name + ": malformed header column " + std::to_string(k + 2) +
                                 ", expected f" + std::to_string(k));
    }
  }

  BagBuilder builder(name);
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto [number, line] = lines[r];
    const auto ctx = where(name, number);
    const auto fields = split_fields(line);
    if (fields.size() != d + 2) {
      fail(ErrorKind::Parse, ctx + "expected " + std::to_string(d + 2) + " fields, got " +
                                 std::to_string(fields.size()));
    }
    const auto bag_id = trim(fields[0]);
    if (bag_id.empty()) fail(ErrorKind::Parse, ctx + "empty bag_id");
    const ClassId label = parse_label(fields[1], ctx);
    FeatureVector x(d);
    for (std::size_t k = 0; k < d; ++k) x[k] = parse_real(fields[k + 2], ctx);
    builder.add(bag_id, label, std::move(x), number);
  }
  return builder.finish(d);
}

MilDataset load_csv(const std::filesystem::path& path) {
  return parse_csv(read_file(path), path.stem().string());
}

std::string to_csv(const MilDataset& ds) {
  std::string out = "bag_id,label";
  for (std::size_t k = 0; k < ds.dimension; ++k) out += ",f" + std::to_string(k);
  out += '\n';
  for (const auto& b : ds.bags) {
    for (const auto& x : b.instances) {
      out += b.id;
      out += ',';
      out += std::to_string(b.label);
      for (double v : x) {
        out += ',';
        append_real(out, v);
      }
      out += '\n';
    }
  }
  return out;
}

void save_csv(const MilDataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  out << to_csv(ds);
}

MilDataset parse_musk_uci(std::string_view text, std::string name) {
  const auto lines = split_lines(text);
  if (lines.empty()) fail(ErrorKind::Parse, name + ": empty file");
  std::size_t d = 0;
  BagBuilder builder(name);
  for (const auto& [number, line] : lines) {
    const auto ctx = where(name, number);
    const auto fields = split_fields(line);
    if (fields.size() < 4) fail(ErrorKind::Parse, ctx + "too few fields for the Musk layout");
    if (d == 0) d = fields.size() - 3;
    if (fields.size() != d + 3) {
      fail(ErrorKind::Parse, ctx + "expected " + std::to_string(d + 3) + " fields, got " +
                                 std::to_string(fields.size()));
    }
    FeatureVector x(d);
    for (std::size_t k = 0; k < d; ++k) x[k] = parse_real(fields[k + 2], ctx);
    const double cls = parse_real(fields.back(), ctx);
    if (cls != 0.0 && cls != 1.0) fail(ErrorKind::Parse, ctx + "class column must be 0 or 1");
    builder.add(trim(fields[0]), cls == 1.0 ? 1 : 0, std::move(x), number);
  }
  return builder.finish(d);
}

MilDataset load_musk_uci(const std::filesystem::path& path) {
  return parse_musk_uci(read_file(path), path.stem().string());
}

std::uint64_t dataset_hash(const MilDataset& ds) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ull;
    }
  };
  mix(to_csv(ds));
  for (const auto& n : ds.class_names) {
    mix(n);
    mix("\n");
  }
  return h;
}

std::vector<std::size_t> apportion(const std::vector<std::size_t>& sizes, double fraction) {
  const std::size_t total = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
  const auto target = static_cast<std::size_t>(std::floor(fraction * total + 0.5));
  std::vector<std::size_t> out(sizes.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t g = 0; g < sizes.size(); ++g) {
    const double exact = fraction * static_cast<double>(sizes[g]);
    out[g] = static_cast<std::size_t>(std::floor(exact));
    assigned += out[g];
    remainders.emplace_back(exact - std::floor(exact), g);
  }
  // Larger remainder first; equal remainders go to the lower group index.
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (const auto& [rem, g] : remainders) {
    if (assigned >= target) break;
    if (out[g] < sizes[g]) {
      ++out[g];
      ++assigned;
    }
  }
  return out;
}

Split split(const MilDataset& ds, const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    fail(ErrorKind::InvalidArgument, "train_fraction must lie in (0, 1)");
  }
  SplitMix64 rng(spec.seed);
  const auto classes = ds.present_classes();
  std::vector<char> in_train(ds.bags.size(), 0);

  if (spec.stratified) {
    std::vector<std::vector<std::size_t>> members(classes.size());
    std::vector<std::size_t> sizes;
    for (std::size_t c = 0; c < classes.size(); ++c) {
      for (std::size_t i = 0; i < ds.bags.size(); ++i) {
        if (ds.bags[i].label == classes[c]) members[c].push_back(i);
      }
      sizes.push_back(members[c].size());
    }
    const auto counts = apportion(sizes, spec.train_fraction);
    for (std::size_t c = 0; c < classes.size(); ++c) {
      if (counts[c] == 0) {
        fail(ErrorKind::InvalidArgument,
             "split leaves class " + std::to_string(classes[c]) + " without training bags");
      }
      rng.shuffle(members[c]);
      for (std::size_t k = 0; k < counts[c]; ++k) in_train[members[c][k]] = 1;
    }
  } else {
    std::vector<std::size_t> order(ds.bags.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    const auto n = static_cast<std::size_t>(
        std::floor(spec.train_fraction * static_cast<double>(order.size()) + 0.5));
    for (std::size_t k = 0; k < n; ++k) in_train[order[k]] = 1;
    for (auto c : classes) {
      bool found = false;
      for (std::size_t i = 0; i < ds.bags.size(); ++i) found |= in_train[i] && ds.bags[i].label == c;
      if (!found) {
        fail(ErrorKind::InvalidArgument,
             "split leaves class " + std::to_string(c) + " without training bags");
      }
    }
  }

  Split out;
  for (std::size_t i = 0; i < ds.bags.size(); ++i) (in_train[i] ? out.train : out.test).push_back(i);
  return out;
}

nlohmann::json SyntheticDataset::manifest() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [id, index] : planted) j[id] = index;
  return j;
}

SyntheticDataset generate_synthetic(const SyntheticSpec& spec) {
  if (spec.n_bags == 0 || spec.n_bags % 2 != 0) {
    fail(ErrorKind::InvalidArgument, "n_bags must be even and positive");
  }
  if (spec.min_instances < 1 || spec.min_instances > spec.max_instances) {
    fail(ErrorKind::InvalidArgument, "invalid instances-per-bag range");
  }
  if (spec.dimension < 2) fail(ErrorKind::InvalidArgument, "dimension must be >= 2");
  if (spec.planted_shift < 0.0 || spec.noise_sigma <= 0.0) {
    fail(ErrorKind::InvalidArgument, "planted_shift must be >= 0 and noise_sigma > 0");
  }

  SplitMix64 rng(spec.seed);
  auto draw = [&](double center) {
    FeatureVector x(spec.dimension);
    for (auto& v : x) v = rng.normal(center, spec.noise_sigma);
    return x;
  };

  SyntheticDataset out;
  out.dataset.name = "synthetic";
  out.dataset.dimension = spec.dimension;
  out.dataset.class_names = default_class_names(2);
  const std::size_t width = std::to_string(spec.n_bags - 1).size();
  for (std::size_t i = 0; i < spec.n_bags; ++i) {
    std::string id = std::to_string(i);
    id = "bag" + std::string(width - id.size(), '0') + id;
    const bool positive = i % 2 == 0;
    const auto n = spec.min_instances +
                   static_cast<std::size_t>(rng.below(spec.max_instances - spec.min_instances + 1));
    Bag bag{id, positive ? 1 : 0, {}};
    std::optional<std::size_t> special;
    if (positive) {
      special = static_cast<std::size_t>(rng.below(n));
    } else if (rng.bernoulli(spec.contamination)) {
      special = static_cast<std::size_t>(rng.below(n));
    }
    for (std::size_t j = 0; j < n; ++j) {
      bag.instances.push_back(draw(special && *special == j ? spec.planted_shift : 0.0));
    }
    if (positive) out.planted.emplace(id, *special);
    out.dataset.bags.push_back(std::move(bag));
  }
  return out;
}

BlobMixture generate_blob_mixture(const BlobMixtureSpec& spec) {
  if (spec.blobs.empty()) fail(ErrorKind::InvalidArgument, "no blobs");
  if (spec.min_instances < 1 || spec.min_instances > spec.max_instances) {
    fail(ErrorKind::InvalidArgument, "invalid instances-per-bag range");
  }
  const std::size_t d = spec.blobs.front().center.size();
  ClassId max_label = 0;
  for (const auto& b : spec.blobs) {
    if (b.center.size() != d || d == 0) fail(ErrorKind::InvalidArgument, "blob dimension mismatch");
    if (b.label < 0) fail(ErrorKind::InvalidArgument, "negative blob label");
    max_label = std::max(max_label, b.label);
  }

  SplitMix64 rng(spec.seed);
  BlobMixture out;
  out.dataset.name = spec.name;
  out.dataset.dimension = d;
  out.dataset.class_names = default_class_names(std::max<std::size_t>(2, max_label + 1));
  std::size_t counter = 0;
  for (std::size_t g = 0; g < spec.blobs.size(); ++g) {
    const auto& blob = spec.blobs[g];
    for (std::size_t k = 0; k < blob.n_bags; ++k) {
      FeatureVector bag_center(d);
      for (std::size_t t = 0; t < d; ++t) bag_center[t] = rng.normal(blob.center[t], blob.spread);
      const auto n = spec.min_instances + static_cast<std::size_t>(
                                              rng.below(spec.max_instances - spec.min_instances + 1));
      Bag bag{"b" + std::to_string(counter++), blob.label, {}};
      for (std::size_t j = 0; j < n; ++j) {
        FeatureVector x(d);
        for (std::size_t t = 0; t < d; ++t) x[t] = rng.normal(bag_center[t], spec.instance_sigma);
        bag.instances.push_back(std::move(x));
      }
      for (std::size_t j = 0; j < spec.background_instances; ++j) {
        FeatureVector x(d);
        for (auto& v : x) v = rng.normal(0.0, spec.background_sigma);
        const auto pos = static_cast<std::size_t>(rng.below(bag.instances.size() + 1));
        bag.instances.insert(bag.instances.begin() + static_cast<std::ptrdiff_t>(pos), std::move(x));
      }
      out.dataset.bags.push_back(std::move(bag));
      out.blob_of_bag.push_back(g);
    }
  }
  return out;
}

}  // namespace milt
