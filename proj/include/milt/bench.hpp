#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "milt/metrics.hpp"
#include "milt/miltree.hpp"
#include "milt/session.hpp"
#include "milt/svm.hpp"

namespace milt {

struct BenchConfig {
  double fraction = 0.3;
  std::uint64_t seed = 1;
  TrainingMode mode = TrainingMode::Combined;
  SvmConfig svm{SvmVariant::Nu};
  // Automatic update rounds after the first training: misclassified training
  // bags swap to B_iy (Med) or gain B_iy as an extra row (SI).
  std::size_t rounds = 1;
};

struct EvalResult {
  std::string dataset;
  SelectionMethod method = SelectionMethod::Med;
  BenchConfig config;
  std::size_t train_bags = 0;
  std::size_t test_bags = 0;
  std::size_t training_rows = 0;
  std::size_t actions = 0;            // update actions taken by the policy
  double initial_training_accuracy = 0.0;
  double final_training_accuracy = 0.0;
  ConfusionMatrix confusion;          // test bags only
  Metrics metrics;

  std::size_t matching() const { return confusion.trace(); }
  std::size_t non_matching() const { return confusion.total() - confusion.trace(); }
};

// Runs the policy rounds on a session whose training set is already chosen and
// returns the final training report.
ClassMatchReport auto_update(Session& session, std::size_t rounds, std::size_t* actions = nullptr);

EvalResult run_benchmark(std::shared_ptr<const MilTree> tree, const BenchConfig& cfg);

struct PositioningResult {
  EvalResult external;
  EvalResult internal;
  EvalResult combined;
};

PositioningResult positioning_experiment(std::shared_ptr<const MilTree> tree, BenchConfig cfg);

nlohmann::json to_json(const EvalResult& r);

// Aligned text and CSV renderings. One row per result.
std::string format_results(const std::vector<EvalResult>& results);
std::string results_csv(const std::vector<EvalResult>& results);

// Rows Matching / Non-Matching / Accuracy / Precision / Recall, one column per mode.
std::string format_positioning(const PositioningResult& r);
std::string positioning_csv(const PositioningResult& r);

}  // namespace milt
