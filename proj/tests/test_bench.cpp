#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "milt/bench.hpp"
#include "milt/error.hpp"

using namespace milt;

namespace {

std::shared_ptr<const MilTree> planted(std::uint64_t seed, SelectionMethod method) {
  SyntheticSpec spec;
  spec.seed = seed;
  return build_miltree(std::make_shared<const MilDataset>(generate_synthetic(spec).dataset), method);
}

}  // namespace

TEST_SUITE("bench") {
  TEST_CASE("benchmark bookkeeping") {
    const auto t = planted(1, SelectionMethod::SI);
    BenchConfig cfg;
    cfg.seed = 4;
    const auto r = run_benchmark(t, cfg);
    CHECK(r.train_bags + r.test_bags == t->dataset().bags.size());
    CHECK(r.confusion.total() == r.test_bags);
    CHECK(r.matching() + r.non_matching() == r.test_bags);
    CHECK(r.metrics.accuracy == doctest::Approx(static_cast<double>(r.matching()) / r.test_bags));
    CHECK(r.training_rows == r.train_bags + (r.method == SelectionMethod::SI ? r.actions : 0));
    CHECK(r.metrics.accuracy >= 0.9);

    const auto again = run_benchmark(t, cfg);
    CHECK(to_json(again).dump() == to_json(r).dump());
  }

  TEST_CASE("zero rounds take no actions") {
    const auto t = planted(2, SelectionMethod::Med);
    BenchConfig cfg;
    cfg.rounds = 0;
    const auto r = run_benchmark(t, cfg);
    CHECK(r.actions == 0);
    CHECK(r.initial_training_accuracy == r.final_training_accuracy);
  }

  TEST_CASE("auto update swaps only misclassified bags") {
    const auto t = planted(3, SelectionMethod::Med);
    Session s(t, {SvmVariant::C});
    s.set_training(suggest_training(t->dataset(), t->classify_positions(), 0.3, 3));
    const auto first = s.train();
    const auto wrong = first.bags_with(MatchStatus::Misclassified);
    std::size_t actions = 0;
    auto_update(s, 1, &actions);
    for (std::size_t b = 0; b < s.slots().size(); ++b) {
      const bool swapped = s.slots()[b].proto_class != t->pairs()[b].b_ix;
      if (swapped) CHECK(std::find(wrong.begin(), wrong.end(), b) != wrong.end());
    }
    CHECK(actions <= wrong.size());
  }

  TEST_CASE("positioning modes differ only in the training set") {
    const auto t = planted(5, SelectionMethod::Med);
    const auto p = positioning_experiment(t, {});
    CHECK(p.external.config.mode == TrainingMode::External);
    CHECK(p.internal.config.mode == TrainingMode::Internal);
    CHECK(p.combined.config.mode == TrainingMode::Combined);
    CHECK(p.external.train_bags == p.combined.train_bags);
    CHECK(p.internal.train_bags == p.combined.train_bags);
    const auto text = format_positioning(p);
    for (const char* row : {"Matching", "Non-Matching", "Accuracy", "Precision", "Recall"}) {
      CHECK(text.find(row) != std::string::npos);
    }
    std::istringstream csv(positioning_csv(p));
    std::string line;
    std::size_t lines = 0;
    while (std::getline(csv, line)) ++lines;
    CHECK(lines == 4);
  }

  TEST_CASE("result tables") {
    const auto t = planted(6, SelectionMethod::SI);
    std::vector<EvalResult> rs{run_benchmark(t, {}), run_benchmark(t, {.seed = 2})};
    std::istringstream csv(results_csv(rs));
    std::string line;
    std::size_t lines = 0;
    while (std::getline(csv, line)) ++lines;
    CHECK(lines == 3);
    CHECK(format_results(rs).find(t->dataset().name) != std::string::npos);
  }

  TEST_CASE("two-bag dataset") {
    const auto ds = std::make_shared<const MilDataset>(
        parse_csv("bag_id,label,f0\na,0,0\na,0,1\nb,1,5\nb,1,7\n", "pair"));
    BenchConfig cfg;
    cfg.svm = SvmConfig{SvmVariant::C};
    // Both bags are needed for training, which leaves the test set empty.
    const auto two = run_benchmark(build_miltree(ds, SelectionMethod::Med), cfg);
    CHECK(two.train_bags == 2);
    CHECK(two.test_bags == 0);
    CHECK(two.metrics.accuracy == 0.0);
    const auto three = std::make_shared<const MilDataset>(
        parse_csv("bag_id,label,f0\na,0,0\nb,1,5\nc,1,6\n", "three"));
    cfg.fraction = 0.5;
    const auto r = run_benchmark(build_miltree(three, SelectionMethod::Med), cfg);
    CHECK(r.test_bags == 1);
    CHECK(r.confusion.total() == 1);
  }

  TEST_CASE("identical bags give identical modes") {
    std::string csv = "bag_id,label,f0,f1\n";
    for (int i = 0; i < 40; ++i) {
      const auto id = "b" + std::to_string(i);
      csv += id + "," + std::to_string(i % 2) + ",1,2\n" + id + "," + std::to_string(i % 2) + ",3,1\n";
    }
    const auto ds = std::make_shared<const MilDataset>(parse_csv(csv, "same"));
    BenchConfig cfg;
    cfg.svm = SvmConfig{SvmVariant::C};
    const auto p = positioning_experiment(build_miltree(ds, SelectionMethod::Med), cfg);
    CHECK(p.external.metrics.accuracy == p.internal.metrics.accuracy);
    CHECK(p.internal.metrics.accuracy == p.combined.metrics.accuracy);
    CHECK(p.combined.matching() + p.combined.non_matching() == p.combined.test_bags);
  }
}
