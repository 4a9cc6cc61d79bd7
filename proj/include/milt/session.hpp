#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "milt/metrics.hpp"
#include "milt/miltree.hpp"
#include "milt/svm.hpp"

namespace milt {

enum class ActionKind { SetTraining, SwapToAlternative, SetPrototype, AddPrototype, AddBags };

std::string to_string(ActionKind k);
ActionKind parse_action_kind(std::string_view s);

struct UpdateAction {
  ActionKind kind = ActionKind::SetTraining;
  std::vector<std::size_t> bags;          // bag indices
  std::optional<std::size_t> instance;    // SetPrototype, or an explicit AddPrototype instance
  std::uint64_t seq = 0;
  std::string timestamp;                  // UTC, ISO 8601
};

enum class Scope { Training, All, Test };

std::string to_string(Scope s);
Scope parse_scope(std::string_view s);

enum class MatchStatus { Correct, Misclassified, Untested };

std::string to_string(MatchStatus s);

struct ClassMatchReport {
  Scope scope = Scope::Training;
  std::vector<MatchStatus> status;    // per bag of the dataset
  std::vector<ClassId> predicted;     // -1 when untested
  ConfusionMatrix confusion;
  Metrics metrics;

  std::size_t evaluated() const;
  std::size_t count(MatchStatus s) const;
  std::vector<std::size_t> bags_with(MatchStatus s) const;
};

struct ErrorBranch {
  std::size_t node = 0;               // bag tree node id
  std::vector<std::size_t> bags;      // leaves below the node
  std::size_t evaluated = 0;
  std::size_t errors = 0;
  double rate = 0.0;
};

class Session {
 public:
  Session(std::shared_ptr<const MilTree> tree, SvmConfig svm);

  const MilTree& tree() const { return *tree_; }
  const std::shared_ptr<const MilTree>& tree_ptr() const { return tree_; }
  const MilDataset& dataset() const { return tree_->dataset(); }
  const SvmConfig& svm_config() const { return svm_; }
  const std::vector<BagSlots>& slots() const { return slots_; }
  const std::vector<std::size_t>& training() const { return training_; }
  bool in_training(std::size_t bag) const;
  const std::optional<MulticlassModel>& model() const { return model_; }
  const std::vector<UpdateAction>& history() const { return history_; }

  // Rows the classifier is trained on: proto_class of every training bag,
  // followed by that bag's extra prototypes.
  std::vector<FeatureVector> training_rows(std::vector<ClassId>* labels = nullptr) const;

  void set_training(std::vector<std::size_t> bags);
  void swap_to_alternative(const std::vector<std::size_t>& bags);
  void set_prototype(std::size_t bag, std::size_t instance);
  // Adds B_iy unless `instance` is given.
  void add_prototype(std::size_t bag, std::optional<std::size_t> instance = std::nullopt);
  void add_bags(const std::vector<std::size_t>& bags);

  ClassMatchReport train();
  ClassMatchReport classmatch(Scope scope) const;
  std::vector<ErrorBranch> error_branches(const ClassMatchReport& report) const;

  // Keep the first n actions and rebuild the state from them. The model is dropped.
  void rewind(std::size_t n);

  nlohmann::json to_json() const;
  // Replays the saved history against `tree`, retraining when the saved session
  // held a model. The dataset hash must match.
  static Session from_json(const nlohmann::json& j, std::shared_ptr<const MilTree> tree);

 private:
  void apply(UpdateAction action);
  void check_bag(std::size_t bag) const;

  std::shared_ptr<const MilTree> tree_;
  SvmConfig svm_;
  std::vector<BagSlots> slots_;
  std::vector<std::size_t> training_;
  std::optional<MulticlassModel> model_;
  std::vector<UpdateAction> history_;
};

nlohmann::json to_json(const ClassMatchReport& r, const MilDataset& ds);
nlohmann::json to_json(const ErrorBranch& b, const MilDataset& ds);

}  // namespace milt
