#include "milt/bench.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "milt/error.hpp"

namespace milt {

ClassMatchReport auto_update(Session& session, std::size_t rounds, std::size_t* actions) {
  auto report = session.train();
  const auto& pairs = session.tree().pairs();
  for (std::size_t round = 0; round < rounds; ++round) {
    std::size_t taken = 0;
    const auto wrong = report.bags_with(MatchStatus::Misclassified);
    if (session.tree().method() == SelectionMethod::Med) {
      std::vector<std::size_t> swap;
      for (const auto bag : wrong) {
        if (session.slots()[bag].proto_class != pairs[bag].b_iy) swap.push_back(bag);
      }
      if (!swap.empty()) {
        session.swap_to_alternative(swap);
        ++taken;
      }
    } else {
      for (const auto bag : wrong) {
        const auto& s = session.slots()[bag];
        const auto alt = pairs[bag].b_iy;
        if (alt == s.proto_class || std::find(s.extra_protos.begin(), s.extra_protos.end(), alt) != s.extra_protos.end()) {
          continue;
        }
        session.add_prototype(bag);
        ++taken;
      }
    }
    if (actions) *actions += taken;
    if (taken == 0) break;
    report = session.train();
  }
  return report;
}

EvalResult run_benchmark(std::shared_ptr<const MilTree> tree, const BenchConfig& cfg) {
  if (!tree) fail(ErrorKind::InvalidArgument, "null tree");
  const auto& ds = tree->dataset();
  Session session(tree, cfg.svm);
  const auto positions = tree->classify_positions();
  session.set_training(suggest_training(ds, positions, cfg.fraction, cfg.seed, cfg.mode));

  EvalResult r;
  r.dataset = ds.name;
  r.method = tree->method();
  r.config = cfg;
  const auto first = session.train();
  r.initial_training_accuracy = first.metrics.accuracy;
  const auto last = auto_update(session, cfg.rounds, &r.actions);
  r.final_training_accuracy = last.metrics.accuracy;
  r.train_bags = session.training().size();
  r.test_bags = ds.bags.size() - r.train_bags;
  r.training_rows = session.training_rows().size();
  const auto test = session.classmatch(Scope::Test);
  r.confusion = test.confusion;
  if (test.confusion.total() > 0) r.metrics = test.metrics;
  return r;
}

PositioningResult positioning_experiment(std::shared_ptr<const MilTree> tree, BenchConfig cfg) {
  PositioningResult out;
  cfg.mode = TrainingMode::External;
  out.external = run_benchmark(tree, cfg);
  cfg.mode = TrainingMode::Internal;
  out.internal = run_benchmark(tree, cfg);
  cfg.mode = TrainingMode::Combined;
  out.combined = run_benchmark(tree, cfg);
  return out;
}

nlohmann::json to_json(const EvalResult& r) {
  return {{"dataset", r.dataset},
          {"method", to_string(r.method)},
          {"mode", to_string(r.config.mode)},
          {"fraction", r.config.fraction},
          {"seed", r.config.seed},
          {"svm", to_json(r.config.svm)},
          {"rounds", r.config.rounds},
          {"train_bags", r.train_bags},
          {"test_bags", r.test_bags},
          {"training_rows", r.training_rows},
          {"actions", r.actions},
          {"initial_training_accuracy", r.initial_training_accuracy},
          {"final_training_accuracy", r.final_training_accuracy},
          {"matching", r.matching()},
          {"non_matching", r.non_matching()},
          {"confusion", to_json(r.confusion)},
          {"metrics", to_json(r.metrics)}};
}

namespace {

std::string fixed(double v, int digits = 4) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string pad(const std::string& s, std::size_t w) {
  return s.size() >= w ? s : std::string(w - s.size(), ' ') + s;
}

}  // namespace

std::string format_results(const std::vector<EvalResult>& results) {
  std::ostringstream os;
  os << pad("dataset", 12) << pad("method", 7) << pad("seed", 6) << pad("train", 7) << pad("test", 6)
     << pad("rows", 6) << pad("acts", 6) << pad("accuracy", 10) << pad("precision", 10) << pad("recall", 8)
     << pad("f1", 8) << "\n";
  for (const auto& r : results) {
    os << pad(r.dataset, 12) << pad(to_string(r.method), 7) << pad(std::to_string(r.config.seed), 6)
       << pad(std::to_string(r.train_bags), 7) << pad(std::to_string(r.test_bags), 6)
       << pad(std::to_string(r.training_rows), 6) << pad(std::to_string(r.actions), 6)
       << pad(fixed(r.metrics.accuracy), 10) << pad(fixed(r.metrics.precision), 10)
       << pad(fixed(r.metrics.recall), 8) << pad(fixed(r.metrics.f1), 8) << "\n";
  }
  return os.str();
}

std::string results_csv(const std::vector<EvalResult>& results) {
  std::ostringstream os;
  os << "dataset,method,mode,seed,fraction,train_bags,test_bags,training_rows,actions,accuracy,precision,recall,f1\n";
  for (const auto& r : results) {
    os << r.dataset << ',' << to_string(r.method) << ',' << to_string(r.config.mode) << ',' << r.config.seed << ','
       << r.config.fraction << ',' << r.train_bags << ',' << r.test_bags << ',' << r.training_rows << ','
       << r.actions << ',' << fixed(r.metrics.accuracy, 6) << ',' << fixed(r.metrics.precision, 6) << ','
       << fixed(r.metrics.recall, 6) << ',' << fixed(r.metrics.f1, 6) << "\n";
  }
  return os.str();
}

namespace {

struct PositioningRow {
  std::string name;
  std::string (*cell)(const EvalResult&);
};

std::string with_share(std::size_t count, std::size_t total) {
  const double pct = total ? 100.0 * static_cast<double>(count) / static_cast<double>(total) : 0.0;
  return std::to_string(count) + " (" + fixed(pct, 1) + "%)";
}

const PositioningRow kRows[] = {
    {"Matching", [](const EvalResult& r) { return with_share(r.matching(), r.confusion.total()); }},
    {"Non-Matching", [](const EvalResult& r) { return with_share(r.non_matching(), r.confusion.total()); }},
    {"Accuracy", [](const EvalResult& r) { return fixed(100.0 * r.metrics.accuracy, 2) + "%"; }},
    {"Precision", [](const EvalResult& r) { return fixed(100.0 * r.metrics.precision, 2) + "%"; }},
    {"Recall", [](const EvalResult& r) { return fixed(100.0 * r.metrics.recall, 2) + "%"; }},
};

}  // namespace

std::string format_positioning(const PositioningResult& r) {
  std::ostringstream os;
  os << pad("", 14) << pad("External", 16) << pad("Internal", 16) << pad("Combined", 16) << "\n";
  for (const auto& row : kRows) {
    os << pad(row.name, 14) << pad(row.cell(r.external), 16) << pad(row.cell(r.internal), 16)
       << pad(row.cell(r.combined), 16) << "\n";
  }
  return os.str();
}

std::string positioning_csv(const PositioningResult& r) {
  std::ostringstream os;
  os << "mode,matching,non_matching,accuracy,precision,recall,f1\n";
  for (const auto* e : {&r.external, &r.internal, &r.combined}) {
    os << to_string(e->config.mode) << ',' << e->matching() << ',' << e->non_matching() << ','
       << fixed(e->metrics.accuracy, 6) << ',' << fixed(e->metrics.precision, 6) << ','
       << fixed(e->metrics.recall, 6) << ',' << fixed(e->metrics.f1, 6) << "\n";
  }
  return os.str();
}

}  // namespace milt
