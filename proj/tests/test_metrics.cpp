#include <doctest.h>

#include "milt/error.hpp"
#include "milt/metrics.hpp"

using namespace milt;

TEST_SUITE("metrics") {
  TEST_CASE("diagonal") {
    const auto m = score(ConfusionMatrix::from_rows({{5, 0}, {0, 5}}));
    CHECK(m.accuracy == 1.0);
    CHECK(m.precision == 1.0);
    CHECK(m.recall == 1.0);
    CHECK(m.f1 == 1.0);
  }

  TEST_CASE("hand-scored binary matrix") {
    // Rows are truth. Class 0: tp 3, predicted 5, actual 4. Class 1: tp 4, predicted 5, actual 6.
    const auto m = score(ConfusionMatrix::from_rows({{3, 1}, {2, 4}}));
    CHECK(m.accuracy == doctest::Approx(0.7));
    CHECK(m.class_precision[0] == doctest::Approx(3.0 / 5));
    CHECK(m.class_recall[0] == doctest::Approx(3.0 / 4));
    CHECK(m.class_precision[1] == doctest::Approx(4.0 / 5));
    CHECK(m.class_recall[1] == doctest::Approx(4.0 / 6));
    CHECK(m.precision == doctest::Approx((0.6 + 0.8) / 2));
    CHECK(m.recall == doctest::Approx((0.75 + 4.0 / 6) / 2));
    const double f0 = 2 * 0.6 * 0.75 / (0.6 + 0.75);
    const double f1 = 2 * 0.8 * (4.0 / 6) / (0.8 + 4.0 / 6);
    CHECK(m.f1 == doctest::Approx((f0 + f1) / 2));
  }

  TEST_CASE("never-predicted class has zero precision") {
    const auto m = score(ConfusionMatrix::from_rows({{0, 3}, {0, 7}}));
    CHECK(m.class_precision[0] == 0.0);
    CHECK(m.class_recall[0] == 0.0);
    CHECK(m.class_f1[0] == 0.0);
    CHECK(m.accuracy == doctest::Approx(0.7));
  }

  TEST_CASE("permutation equivariance") {
    const std::vector<std::vector<std::uint64_t>> rows{{4, 1, 0}, {2, 6, 1}, {0, 3, 5}};
    const int perm[3] = {2, 0, 1};
    std::vector<std::vector<std::uint64_t>> permuted(3, std::vector<std::uint64_t>(3));
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) permuted[perm[i]][perm[j]] = rows[i][j];
    const auto a = score(ConfusionMatrix::from_rows(rows));
    const auto b = score(ConfusionMatrix::from_rows(permuted));
    CHECK(a.accuracy == doctest::Approx(b.accuracy));
    CHECK(a.precision == doctest::Approx(b.precision));
    CHECK(a.recall == doctest::Approx(b.recall));
    CHECK(a.f1 == doctest::Approx(b.f1));
    for (int i = 0; i < 3; ++i) CHECK(a.class_recall[i] == doctest::Approx(b.class_recall[perm[i]]));
  }

  TEST_CASE("counting") {
    ConfusionMatrix c(2);
    c.add(0, 0);
    c.add(1, 0);
    c.add(1, 1);
    CHECK(c.total() == 3);
    CHECK(c.trace() == 2);
    CHECK(c.row_sum(1) == 2);
    CHECK(c.column_sum(0) == 2);
    CHECK_THROWS_AS(c.add(2, 0), Error);
    CHECK_THROWS_AS(score(ConfusionMatrix{}), Error);
    CHECK_THROWS_AS(ConfusionMatrix::from_rows({{1, 2}}), Error);
  }
}
