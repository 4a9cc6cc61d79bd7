#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "json.hpp"
#include "milt/dataset.hpp"

namespace milt {

// Rows are true classes, columns predicted classes.
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(std::size_t k) : k_(k), counts_(k * k, 0) {}
  static ConfusionMatrix from_rows(const std::vector<std::vector<std::uint64_t>>& rows);

  std::size_t classes() const { return k_; }
  void add(ClassId truth, ClassId predicted);
  std::uint64_t operator()(std::size_t truth, std::size_t predicted) const {
    return counts_[truth * k_ + predicted];
  }
  std::uint64_t total() const;
  std::uint64_t trace() const;
  std::uint64_t row_sum(std::size_t truth) const;
  std::uint64_t column_sum(std::size_t predicted) const;
  std::vector<std::vector<std::uint64_t>> rows() const;

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  std::size_t k_ = 0;
  std::vector<std::uint64_t> counts_;
};

// Macro averages over all k classes. Precision or recall with a zero
// denominator is 0; per-class F1 is the harmonic mean of that class's
// precision and recall (0 when both are 0), and `f1` is their mean.
struct Metrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::vector<double> class_precision;
  std::vector<double> class_recall;
  std::vector<double> class_f1;
};

Metrics score(const ConfusionMatrix& confusion);

nlohmann::json to_json(const ConfusionMatrix& c);
nlohmann::json to_json(const Metrics& m);

}  // namespace milt
