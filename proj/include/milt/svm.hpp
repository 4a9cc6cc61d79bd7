#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "milt/dataset.hpp"

namespace milt {

enum class SvmVariant { C, Nu };

std::string to_string(SvmVariant v);
SvmVariant parse_svm_variant(std::string_view s);

struct SvmConfig {
  SvmVariant variant = SvmVariant::C;
  double c = 1.0;
  double nu = 0.6;
  double tolerance = 1e-3;  // stopping gap of the maximal violating pair
  std::size_t max_iterations = 10'000'000;
  bool scale = false;  // min-max scale features using the training rows

  void validate() const;
};

// Dual solution in C-SVC units: decision(x) = sum_i alpha_i y_i <x_i, x> - rho,
// 0 <= alpha_i <= upper_bound, sum_i y_i alpha_i = 0. For nu-SVC the solution
// of the nu dual is rescaled by 1/r into these units.
struct DualSolution {
  std::vector<double> alpha;
  double rho = 0.0;
  double upper_bound = 0.0;
  double objective = 0.0;  // 0.5 a'Qa - e'a (C-SVC) or 0.5 a'Qa of the unscaled nu dual
  double r = 1.0;          // nu-SVC margin scale; 1 for C-SVC
  std::size_t iterations = 0;
};

// Two-variable sequential dual optimization with the maximal-violating-pair
// working set, linear kernel. Labels are +1 / -1.
DualSolution solve_dual(std::span<const FeatureVector> x, std::span<const int> y,
                        const SvmConfig& cfg);

struct LinearModel {
  std::vector<double> weights;
  double bias = 0.0;
  std::vector<std::size_t> support_indices;
  ClassId negative = 0;
  ClassId positive = 1;

  double decision(std::span<const double> x) const;
  // Positive class when decision(x) >= 0.
  ClassId predict(std::span<const double> x) const;
};

LinearModel train_binary(std::span<const FeatureVector> x, std::span<const int> y,
                         const SvmConfig& cfg);

struct MinMaxScaler {
  std::vector<double> lo;
  std::vector<double> hi;

  static MinMaxScaler fit(std::span<const FeatureVector> rows);
  FeatureVector transform(std::span<const double> x) const;
};

struct Prediction {
  ClassId label = 0;
  std::vector<double> decision_values;  // one per class in MulticlassModel::classes order
};

// One-vs-all. With two classes a single binary model is trained and the
// first class's model is its negation, so the result matches binary prediction.
struct MulticlassModel {
  SvmConfig config;
  std::vector<ClassId> classes;
  std::vector<LinearModel> models;
  std::optional<MinMaxScaler> scaler;

  Prediction predict(std::span<const double> x) const;
  std::vector<Prediction> predict_batch(std::span<const FeatureVector> rows) const;
  std::size_t dimension() const { return models.empty() ? 0 : models.front().weights.size(); }
};

MulticlassModel train_multiclass(std::span<const FeatureVector> rows, std::span<const ClassId> labels,
                                 const SvmConfig& cfg);

nlohmann::json to_json(const SvmConfig& cfg);
SvmConfig svm_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const LinearModel& m, const SvmConfig& cfg);
LinearModel linear_model_from_json(const nlohmann::json& j);
nlohmann::json to_json(const MulticlassModel& m);
MulticlassModel multiclass_model_from_json(const nlohmann::json& j);

}  // namespace milt
