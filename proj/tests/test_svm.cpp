#include <doctest.h>

#include "milt/error.hpp"
#include "milt/svm.hpp"
#include "oracles.hpp"
#include "svm_checks.hpp"

using namespace milt;

TEST_SUITE("svm") {
  TEST_CASE("symmetric pair") {
    const std::vector<FeatureVector> x{{-1}, {1}};
    const std::vector<int> y{-1, 1};
    const auto m = train_binary(x, y, {});
    CHECK(m.weights[0] == doctest::Approx(1.0));
    CHECK(m.bias == doctest::Approx(0.0));
    CHECK(m.support_indices == std::vector<std::size_t>{0, 1});
    CHECK(m.predict(FeatureVector{0.5}) == 1);
    CHECK(m.predict(FeatureVector{-0.5}) == -1);
    // The boundary belongs to the positive class.
    LinearModel flat{{1.0}, -2.0, {}, 0, 1};
    CHECK(flat.predict(FeatureVector{2.0}) == 1);
  }

  TEST_CASE("4-point dual matches grid search") {
    const std::vector<FeatureVector> x{{0, 0}, {1, 0.2}, {2, 2}, {0.5, 1.5}};
    const std::vector<int> y{-1, -1, 1, 1};
    SvmConfig cfg;
    cfg.c = 1.0;
    cfg.tolerance = 1e-8;
    const auto sol = solve_dual(x, y, cfg);
    // alpha_3 is fixed by the equality constraint.
    auto objective = [&](const oracle::Vec& a3) {
      std::vector<double> a{a3[0], a3[1], a3[2], 0.0};
      a[3] = a[0] + a[1] - a[2];
      if (a[3] < 0.0 || a[3] > cfg.c) return std::numeric_limits<double>::infinity();
      double q = 0.0, lin = 0.0;
      for (int i = 0; i < 4; ++i) {
        lin += a[i];
        for (int j = 0; j < 4; ++j) q += a[i] * a[j] * y[i] * y[j] * checks::kernel(x[i], x[j]);
      }
      return 0.5 * q - lin;
    };
    const auto [best, arg] = oracle::grid_minimize(objective, 3, {0, 0, 0}, {1, 1, 1});
    CHECK(std::abs(sol.objective - best) <= 1e-6);
    CHECK(checks::feasibility_error(y, sol) <= 1e-12);
  }

  TEST_CASE("separable blobs") {
    SplitMix64 rng(1);
    std::vector<FeatureVector> x;
    std::vector<int> y;
    checks::separable_set(rng, 60, 2, 2.0, x, y);
    const auto sol = solve_dual(x, y, {});
    CHECK(checks::kkt_residual(x, y, sol) <= 1e-3);
    const auto m = train_binary(x, y, {});
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(m.predict(x[i]) == y[i]);
  }

  TEST_CASE("nu-SVC bounds") {
    SplitMix64 rng(2);
    for (int trial = 0; trial < 10; ++trial) {
      std::vector<FeatureVector> x;
      std::vector<int> y;
      checks::separable_set(rng, 40, 3, trial % 2 ? 0.5 : 1.5, x, y);
      SvmConfig cfg{SvmVariant::Nu};
      cfg.nu = 0.3 + 0.05 * trial;
      const auto sol = solve_dual(x, y, cfg);
      const auto c = checks::nu_counts(x, y, sol, 1e-3);
      CHECK(c.margin_error_fraction <= cfg.nu + 1e-12);
      CHECK(c.bounded_fraction <= cfg.nu + 1e-12);
      CHECK(cfg.nu <= c.support_fraction + 1e-12);
      CHECK(checks::kkt_residual(x, y, sol) <= 1e-3);
    }
  }

  TEST_CASE("infeasible nu and bad input") {
    const std::vector<FeatureVector> x{{0}, {1}, {2}, {3}};
    SvmConfig cfg{SvmVariant::Nu};
    cfg.nu = 0.9;
    CHECK_THROWS_AS(train_binary(x, std::vector<int>{-1, 1, 1, 1}, cfg), Error);
    CHECK_THROWS_AS(train_binary(x, std::vector<int>{1, 1, 1, 1}, {}), Error);
    CHECK_THROWS_AS(train_binary(x, std::vector<int>{1, 0, 1, -1}, {}), Error);
    SvmConfig bad;
    bad.c = 0.0;
    CHECK_THROWS_AS(bad.validate(), Error);
  }

  TEST_CASE("scale invariance of predicted labels") {
    SplitMix64 rng(3);
    std::vector<FeatureVector> x;
    std::vector<int> y;
    checks::separable_set(rng, 30, 3, 2.0, x, y);
    auto scaled = x;
    for (auto& p : scaled)
      for (auto& v : p) v *= 7.5;
    const auto a = train_binary(x, y, {});
    const auto b = train_binary(scaled, y, {});
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(a.predict(x[i]) == b.predict(scaled[i]));
  }

  TEST_CASE("training is deterministic") {
    SplitMix64 rng(4);
    std::vector<FeatureVector> x;
    std::vector<int> y;
    checks::separable_set(rng, 50, 4, 0.0, x, y);
    const auto a = train_binary(x, y, {});
    const auto b = train_binary(x, y, {});
    CHECK(a.weights == b.weights);
    CHECK(a.bias == b.bias);
  }

  TEST_CASE("multiclass") {
    SplitMix64 rng(5);
    std::vector<FeatureVector> x;
    std::vector<ClassId> labels;
    const double centers[3][2] = {{0, 0}, {8, 0}, {0, 8}};
    for (int i = 0; i < 90; ++i) {
      const int c = i % 3;
      x.push_back({centers[c][0] + rng.normal(), centers[c][1] + rng.normal()});
      labels.push_back(c);
    }
    const auto m = train_multiclass(x, labels, {});
    CHECK(m.models.size() == 3);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < x.size(); ++i) correct += m.predict(x[i]).label == labels[i];
    CHECK(correct >= 0.95 * x.size());

    const auto batch = m.predict_batch(x);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(batch[i].label == m.predict(x[i]).label);
    CHECK_THROWS_AS(m.predict(FeatureVector{1, 2, 3}), Error);
    CHECK_THROWS_AS(train_multiclass(x, std::vector<ClassId>(x.size(), 1), {}), Error);
  }

  TEST_CASE("two-class one-vs-all equals the binary model") {
    SplitMix64 rng(6);
    std::vector<FeatureVector> x;
    std::vector<int> y;
    checks::separable_set(rng, 40, 3, -0.5, x, y);
    std::vector<ClassId> labels;
    for (auto v : y) labels.push_back(v > 0 ? 1 : 0);
    const auto bin = train_binary(x, y, {});
    const auto multi = train_multiclass(x, labels, {});
    for (std::size_t i = 0; i < x.size(); ++i) {
      CHECK((bin.predict(x[i]) > 0 ? 1 : 0) == multi.predict(x[i]).label);
    }
  }

  TEST_CASE("ties in the argmax go to the lowest class") {
    MulticlassModel m;
    m.classes = {0, 1, 2};
    m.models = {{{0.0}, 1.0, {}, -1, 0}, {{0.0}, 1.0, {}, -1, 1}, {{0.0}, 0.5, {}, -1, 2}};
    CHECK(m.predict(FeatureVector{3.0}).label == 0);
  }

  TEST_CASE("model json round trip") {
    SplitMix64 rng(7);
    std::vector<FeatureVector> x;
    std::vector<ClassId> labels;
    for (int i = 0; i < 30; ++i) {
      x.push_back({rng.normal(), rng.normal(), rng.normal()});
      labels.push_back(i % 3);
    }
    SvmConfig cfg{SvmVariant::C};
    cfg.scale = true;
    const auto m = train_multiclass(x, labels, cfg);
    const auto back = multiclass_model_from_json(nlohmann::json::parse(to_json(m).dump()));
    for (const auto& p : x) CHECK(back.predict(p).decision_values == m.predict(p).decision_values);
    const auto j = to_json(m.models[0], cfg);
    for (const char* key : {"variant", "params", "weights", "bias", "classes"}) CHECK(j.contains(key));
  }

  TEST_CASE("min-max scaler") {
    const std::vector<FeatureVector> rows{{0, 5}, {10, 5}};
    const auto s = MinMaxScaler::fit(rows);
    CHECK(s.transform(FeatureVector{5, 5}) == FeatureVector{0.5, 0.0});
  }
}
