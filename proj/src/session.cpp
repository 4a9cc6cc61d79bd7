#include "milt/session.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <set>

#include "milt/error.hpp"

namespace milt {

std::string to_string(ActionKind k) {
  switch (k) {
    case ActionKind::SetTraining: return "set_training";
    case ActionKind::SwapToAlternative: return "swap_to_alternative";
    case ActionKind::SetPrototype: return "set_prototype";
    case ActionKind::AddPrototype: return "add_prototype";
    case ActionKind::AddBags: return "add_bags";
  }
  return "set_training";
}

ActionKind parse_action_kind(std::string_view s) {
  for (auto k : {ActionKind::SetTraining, ActionKind::SwapToAlternative, ActionKind::SetPrototype,
                 ActionKind::AddPrototype, ActionKind::AddBags}) {
    if (s == to_string(k)) return k;
  }
  fail(ErrorKind::InvalidArgument, "unknown action '" + std::string(s) + "'");
}

std::string to_string(Scope s) {
  switch (s) {
    case Scope::Training: return "training";
    case Scope::All: return "all";
    case Scope::Test: return "test";
  }
  return "training";
}

Scope parse_scope(std::string_view s) {
  if (s == "training") return Scope::Training;
  if (s == "all") return Scope::All;
  if (s == "test") return Scope::Test;
  fail(ErrorKind::InvalidArgument, "unknown scope '" + std::string(s) + "'");
}

std::string to_string(MatchStatus s) {
  switch (s) {
    case MatchStatus::Correct: return "correct";
    case MatchStatus::Misclassified: return "misclassified";
    case MatchStatus::Untested: return "untested";
  }
  return "untested";
}

std::size_t ClassMatchReport::evaluated() const { return status.size() - count(MatchStatus::Untested); }

std::size_t ClassMatchReport::count(MatchStatus s) const {
  return static_cast<std::size_t>(std::count(status.begin(), status.end(), s));
}

std::vector<std::size_t> ClassMatchReport::bags_with(MatchStatus s) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < status.size(); ++i) {
    if (status[i] == s) out.push_back(i);
  }
  return out;
}

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

Session::Session(std::shared_ptr<const MilTree> tree, SvmConfig svm)
    : tree_(std::move(tree)), svm_(svm) {
  if (!tree_) fail(ErrorKind::InvalidArgument, "null tree");
  svm_.validate();
  slots_ = tree_->initial_slots();
}

bool Session::in_training(std::size_t bag) const {
  return std::binary_search(training_.begin(), training_.end(), bag);
}

void Session::check_bag(std::size_t bag) const {
  if (bag >= dataset().bags.size()) fail(ErrorKind::NotFound, "bag index " + std::to_string(bag) + " out of range");
}

std::vector<FeatureVector> Session::training_rows(std::vector<ClassId>* labels) const {
  const auto& ds = dataset();
  std::vector<FeatureVector> rows;
  if (labels) labels->clear();
  for (const auto bag : training_) {
    const auto& b = ds.bags[bag];
    rows.push_back(b.instances[slots_[bag].proto_class]);
    if (labels) labels->push_back(b.label);
    for (const auto extra : slots_[bag].extra_protos) {
      rows.push_back(b.instances[extra]);
      if (labels) labels->push_back(b.label);
    }
  }
  return rows;
}

void Session::apply(UpdateAction action) {
  const auto& ds = dataset();
  for (const auto bag : action.bags) check_bag(bag);
  auto unique_bags = [&] {
    std::set<std::size_t> s(action.bags.begin(), action.bags.end());
    if (s.size() != action.bags.size()) fail(ErrorKind::InvalidArgument, "duplicate bag in action");
  };

  switch (action.kind) {
    case ActionKind::SetTraining: {
      unique_bags();
      std::sort(action.bags.begin(), action.bags.end());
      training_ = action.bags;
      break;
    }
    case ActionKind::SwapToAlternative: {
      for (const auto bag : action.bags) slots_[bag].proto_class = tree_->pairs()[bag].b_iy;
      break;
    }
    case ActionKind::SetPrototype: {
      if (action.bags.size() != 1 || !action.instance) {
        fail(ErrorKind::InvalidArgument, "set_prototype takes one bag and an instance");
      }
      const auto bag = action.bags.front();
      if (*action.instance >= ds.bags[bag].size()) fail(ErrorKind::InvalidArgument, "instance index out of range");
      slots_[bag].proto_class = *action.instance;
      break;
    }
    case ActionKind::AddPrototype: {
      if (action.bags.size() != 1) fail(ErrorKind::InvalidArgument, "add_prototype takes one bag");
      const auto bag = action.bags.front();
      if (!in_training(bag)) fail(ErrorKind::InvalidArgument, "bag '" + ds.bags[bag].id + "' is not in training");
      const auto inst = action.instance.value_or(tree_->pairs()[bag].b_iy);
      if (inst >= ds.bags[bag].size()) fail(ErrorKind::InvalidArgument, "instance index out of range");
      auto& s = slots_[bag];
      if (inst == s.proto_class ||
          std::find(s.extra_protos.begin(), s.extra_protos.end(), inst) != s.extra_protos.end()) {
        fail(ErrorKind::InvalidArgument, "instance already a prototype of bag '" + ds.bags[bag].id + "'");
      }
      s.extra_protos.push_back(inst);
      action.instance = inst;
      break;
    }
    case ActionKind::AddBags: {
      unique_bags();
      for (const auto bag : action.bags) {
        if (in_training(bag)) fail(ErrorKind::InvalidArgument, "bag '" + ds.bags[bag].id + "' already in training");
      }
      training_.insert(training_.end(), action.bags.begin(), action.bags.end());
      std::sort(training_.begin(), training_.end());
      break;
    }
  }
  model_.reset();
  action.seq = history_.size();
  if (action.timestamp.empty()) action.timestamp = utc_now();
  history_.push_back(std::move(action));
}

void Session::set_training(std::vector<std::size_t> bags) {
  apply({ActionKind::SetTraining, std::move(bags), std::nullopt, 0, {}});
}

void Session::swap_to_alternative(const std::vector<std::size_t>& bags) {
  apply({ActionKind::SwapToAlternative, bags, std::nullopt, 0, {}});
}

void Session::set_prototype(std::size_t bag, std::size_t instance) {
  apply({ActionKind::SetPrototype, {bag}, instance, 0, {}});
}

void Session::add_prototype(std::size_t bag, std::optional<std::size_t> instance) {
  apply({ActionKind::AddPrototype, {bag}, instance, 0, {}});
}

void Session::add_bags(const std::vector<std::size_t>& bags) {
  apply({ActionKind::AddBags, bags, std::nullopt, 0, {}});
}

ClassMatchReport Session::train() {
  if (training_.empty()) fail(ErrorKind::State, "training set is empty");
  std::set<ClassId> represented;
  for (const auto bag : training_) represented.insert(dataset().bags[bag].label);
  for (const auto c : dataset().present_classes()) {
    if (!represented.count(c)) {
      fail(ErrorKind::State, "class '" + dataset().class_names[static_cast<std::size_t>(c)] +
                                 "' has no training bag");
    }
  }
  std::vector<ClassId> labels;
  const auto rows = training_rows(&labels);
  model_ = train_multiclass(rows, labels, svm_);
  return classmatch(Scope::Training);
}

ClassMatchReport Session::classmatch(Scope scope) const {
  if (!model_) fail(ErrorKind::State, "no trained model");
  const auto& ds = dataset();
  ClassMatchReport r;
  r.scope = scope;
  r.status.assign(ds.bags.size(), MatchStatus::Untested);
  r.predicted.assign(ds.bags.size(), -1);
  r.confusion = ConfusionMatrix(ds.num_classes());
  for (std::size_t i = 0; i < ds.bags.size(); ++i) {
    const bool train = in_training(i);
    if ((scope == Scope::Training && !train) || (scope == Scope::Test && train)) continue;
    const auto& bag = ds.bags[i];
    const auto p = model_->predict(bag.instances[slots_[i].proto_class]).label;
    r.predicted[i] = p;
    r.status[i] = p == bag.label ? MatchStatus::Correct : MatchStatus::Misclassified;
    r.confusion.add(bag.label, p);
  }
  if (r.confusion.total() > 0) r.metrics = score(r.confusion);
  return r;
}

std::vector<ErrorBranch> Session::error_branches(const ClassMatchReport& report) const {
  const auto& bt = tree_->bag_tree();
  if (report.status.size() != dataset().bags.size()) fail(ErrorKind::InvalidArgument, "report does not match dataset");
  const auto below = bt.leaves_below();
  std::vector<ErrorBranch> out;
  for (std::size_t node = 0; node < bt.nodes.size(); ++node) {
    if (bt.nodes[node].kind != NodeKind::Virtual || below[node].size() < 3) continue;
    ErrorBranch b;
    b.node = node;
    b.bags = below[node];
    std::sort(b.bags.begin(), b.bags.end());
    for (const auto bag : b.bags) {
      if (report.status[bag] == MatchStatus::Untested) continue;
      ++b.evaluated;
      if (report.status[bag] == MatchStatus::Misclassified) ++b.errors;
    }
    if (b.errors == 0) continue;
    b.rate = static_cast<double>(b.errors) / static_cast<double>(b.evaluated);
    out.push_back(std::move(b));
  }
  std::sort(out.begin(), out.end(), [](const ErrorBranch& a, const ErrorBranch& b) {
    if (a.rate != b.rate) return a.rate > b.rate;
    if (a.bags.size() != b.bags.size()) return a.bags.size() > b.bags.size();
    return a.node < b.node;
  });
  return out;
}

void Session::rewind(std::size_t n) {
  if (n > history_.size()) fail(ErrorKind::InvalidArgument, "cannot rewind past the end of history");
  auto kept = std::vector<UpdateAction>(history_.begin(), history_.begin() + static_cast<std::ptrdiff_t>(n));
  slots_ = tree_->initial_slots();
  training_.clear();
  model_.reset();
  history_.clear();
  for (auto& a : kept) apply(std::move(a));
}

nlohmann::json Session::to_json() const {
  const auto& ds = dataset();
  auto ids = [&](const std::vector<std::size_t>& bags) {
    std::vector<std::string> out;
    for (const auto b : bags) out.push_back(ds.bags[b].id);
    return out;
  };
  nlohmann::json slots = nlohmann::json::array();
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    slots.push_back({{"bag_id", ds.bags[i].id},
                     {"proto_proj", slots_[i].proto_proj},
                     {"proto_class", slots_[i].proto_class},
                     {"extra_protos", slots_[i].extra_protos}});
  }
  nlohmann::json history = nlohmann::json::array();
  for (const auto& a : history_) {
    nlohmann::json h{{"seq", a.seq}, {"kind", to_string(a.kind)}, {"bags", ids(a.bags)}, {"timestamp", a.timestamp}};
    if (a.instance) h["instance"] = *a.instance;
    history.push_back(std::move(h));
  }
  const auto& sel = tree_->config();
  nlohmann::json j{
      {"format", "milt-session"},
      {"version", 1},
      {"dataset", {{"name", ds.name}, {"hash", dataset_hash(ds)}}},
      {"method", to_string(tree_->method())},
      {"selection", {{"sigma", sel.sigma}, {"sal_num", sel.sal_num}, {"medoid_max_iter", sel.medoid_max_iter}}},
      {"svm", milt::to_json(svm_)},
      {"training", ids(training_)},
      {"slots", std::move(slots)},
      {"history", std::move(history)},
      {"trained", model_.has_value()},
  };
  if (model_) j["model"] = milt::to_json(*model_);
  return j;
}

Session Session::from_json(const nlohmann::json& j, std::shared_ptr<const MilTree> tree) {
  if (!tree) fail(ErrorKind::InvalidArgument, "null tree");
  const auto& ds = tree->dataset();
  try {
    if (j.at("dataset").at("hash").get<std::uint64_t>() != dataset_hash(ds)) {
      fail(ErrorKind::InvalidArgument, "session was saved for a different dataset");
    }
    if (parse_selection_method(j.at("method").get<std::string>()) != tree->method()) {
      fail(ErrorKind::InvalidArgument, "session was saved with a different selection method");
    }
    Session s(std::move(tree), svm_config_from_json(j.at("svm")));
    for (const auto& h : j.at("history")) {
      UpdateAction a;
      a.kind = parse_action_kind(h.at("kind").get<std::string>());
      for (const auto& id : h.at("bags")) a.bags.push_back(ds.bag_index(id.get<std::string>()));
      if (h.contains("instance")) a.instance = h["instance"].get<std::size_t>();
      a.timestamp = h.value("timestamp", std::string{});
      s.apply(std::move(a));
    }
    if (j.value("trained", false)) s.train();
    return s;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Parse, std::string("malformed session: ") + e.what());
  }
}

nlohmann::json to_json(const ClassMatchReport& r, const MilDataset& ds) {
  nlohmann::json bags = nlohmann::json::array();
  for (std::size_t i = 0; i < r.status.size(); ++i) {
    if (r.status[i] == MatchStatus::Untested) continue;
    bags.push_back({{"bag_id", ds.bags[i].id},
                    {"label", ds.bags[i].label},
                    {"predicted", r.predicted[i]},
                    {"status", to_string(r.status[i])}});
  }
  return {{"scope", to_string(r.scope)},
          {"evaluated", r.evaluated()},
          {"correct", r.count(MatchStatus::Correct)},
          {"misclassified", r.count(MatchStatus::Misclassified)},
          {"bags", std::move(bags)},
          {"confusion", to_json(r.confusion)},
          {"metrics", to_json(r.metrics)}};
}

nlohmann::json to_json(const ErrorBranch& b, const MilDataset& ds) {
  std::vector<std::string> ids;
  for (const auto bag : b.bags) ids.push_back(ds.bags[bag].id);
  return {{"node", b.node}, {"bags", ids}, {"evaluated", b.evaluated}, {"errors", b.errors}, {"rate", b.rate}};
}

}  // namespace milt
