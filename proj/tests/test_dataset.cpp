#include <doctest.h>

#include <cmath>
#include <set>

#include "milt/dataset.hpp"
#include "milt/error.hpp"
#include "oracles.hpp"

using namespace milt;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::Io;
}

}  // namespace

TEST_SUITE("dataset") {
  TEST_CASE("single row file") {
    const auto ds = parse_csv("bag_id,label,f0\nb0,1,0.5\n", "tiny");
    REQUIRE(ds.bags.size() == 1);
    CHECK(ds.dimension == 1);
    CHECK(ds.bags[0].size() == 1);
    CHECK(ds.bags[0].label == 1);
    CHECK(ds.bags[0].instances[0][0] == 0.5);
    CHECK(ds.num_classes() == 2);
  }

  TEST_CASE("rows group by bag and keep order, CRLF accepted") {
    const auto ds = parse_csv("bag_id,label,f0,f1\r\na,0,1,2\r\nb,1,3,4\r\na,0,5,6\r\n\r\n", "x");
    REQUIRE(ds.bags.size() == 2);
    CHECK(ds.bags[0].id == "a");
    CHECK(ds.bags[0].instances == std::vector<FeatureVector>{{1, 2}, {5, 6}});
    CHECK(ds.bags[1].instances == std::vector<FeatureVector>{{3, 4}});
  }

  TEST_CASE("malformed inputs") {
    CHECK(kind_of([] { parse_csv("", "e"); }) == ErrorKind::Parse);
    CHECK(kind_of([] { parse_csv("bag,label,f0\nb,0,1\n", "e"); }) == ErrorKind::Parse);
    CHECK(kind_of([] { parse_csv("bag_id,label,f1\nb,0,1\n", "e"); }) == ErrorKind::Parse);
    CHECK(kind_of([] { parse_csv("bag_id,label,f0,f1\nb,0,1\n", "e"); }) == ErrorKind::Parse);
    CHECK(kind_of([] { parse_csv("bag_id,label,f0\nb,0,abc\n", "e"); }) == ErrorKind::Parse);
    CHECK(kind_of([] { parse_csv("bag_id,label,f0\nb,0,1.5x\n", "e"); }) == ErrorKind::Parse);
    CHECK(kind_of([] { parse_csv("bag_id,label,f0\nb,-1,1\n", "e"); }) == ErrorKind::Parse);
    CHECK(kind_of([] { parse_csv("bag_id,label,f0\nb,0,1\nb,1,2\n", "e"); }) == ErrorKind::Parse);
    CHECK(kind_of([] { parse_csv("bag_id,label,f0\n", "e"); }) == ErrorKind::Parse);
    CHECK(kind_of([] { load_csv("/nonexistent/file.csv"); }) == ErrorKind::Io);
  }

  TEST_CASE("Musk1 and Elephant counts") {
    const auto musk = load_csv(MILT_DATA_DIR "/musk1.csv");
    CHECK(musk.name == "musk1");
    CHECK(musk.bags.size() == 92);
    CHECK(musk.class_counts() == std::vector<std::size_t>{45, 47});
    CHECK(musk.num_instances() == 476);
    CHECK(musk.dimension == 166);

    const auto elephant = load_csv(MILT_DATA_DIR "/elephant.csv");
    CHECK(elephant.bags.size() == 200);
    CHECK(elephant.class_counts() == std::vector<std::size_t>{100, 100});
    CHECK(elephant.num_instances() == 1391);
    CHECK(elephant.dimension == 230);
  }

  TEST_CASE("save/load round trip is exact") {
    SyntheticSpec spec;
    spec.seed = 9;
    const auto ds = generate_synthetic(spec).dataset;
    const auto back = parse_csv(to_csv(ds), ds.name);
    REQUIRE(back.bags.size() == ds.bags.size());
    for (std::size_t i = 0; i < ds.bags.size(); ++i) {
      CHECK(back.bags[i].id == ds.bags[i].id);
      CHECK(back.bags[i].label == ds.bags[i].label);
      CHECK(back.bags[i].instances == ds.bags[i].instances);
    }
    CHECK(to_csv(back) == to_csv(ds));
    CHECK(dataset_hash(back) == dataset_hash(ds));
  }

  TEST_CASE("UCI Musk layout") {
    const auto ds = parse_musk_uci("MUSK-1,c1,1,2,1.\nMUSK-1,c2,3,4,1.\nNON-2,c1,5,6,0.\n", "musk");
    REQUIRE(ds.bags.size() == 2);
    CHECK(ds.dimension == 2);
    CHECK(ds.bags[0].label == 1);
    CHECK(ds.bags[0].size() == 2);
    CHECK(ds.bags[1].label == 0);
    CHECK_THROWS_AS(parse_musk_uci("A,c,1,2,3\n", "bad"), Error);
  }

  TEST_CASE("stratified split counts follow largest remainder") {
    const auto ds = load_csv(MILT_DATA_DIR "/musk1.csv");
    const auto s = split(ds, {0.3, 5, true});
    // 45 * 0.3 = 13.5 and 47 * 0.3 = 14.1; 28 bags total, the extra one to the larger remainder.
    std::size_t train_neg = 0, train_pos = 0;
    for (const auto b : s.train) (ds.bags[b].label == 0 ? train_neg : train_pos)++;
    CHECK(s.train.size() == 28);
    CHECK(s.test.size() == 64);
    CHECK(train_neg == 14);
    CHECK(train_pos == 14);

    std::set<std::size_t> all(s.train.begin(), s.train.end());
    for (const auto b : s.test) CHECK(all.insert(b).second);
    CHECK(all.size() == ds.bags.size());

    const auto again = split(ds, {0.3, 5, true});
    CHECK(again.train == s.train);
    CHECK(split(ds, {0.3, 6, true}).train != s.train);
  }

  TEST_CASE("split that leaves a class empty fails") {
    const auto ds = parse_csv("bag_id,label,f0\na,0,1\nb,1,2\n", "two");
    CHECK_THROWS_AS(split(ds, {0.5, 1, true}), Error);
    CHECK_THROWS_AS(split(ds, {1.5, 1, true}), Error);
  }

  TEST_CASE("apportion") {
    CHECK(apportion({45, 47}, 0.3) == std::vector<std::size_t>{14, 14});
    CHECK(apportion({10, 10}, 0.5) == std::vector<std::size_t>{5, 5});
    CHECK(apportion({1, 1, 1}, 0.5) == std::vector<std::size_t>{1, 1, 0});
  }

  TEST_CASE("planted instance is the farthest from the background") {
    SyntheticSpec spec;
    spec.n_bags = 40;
    spec.planted_shift = 6.0;
    spec.noise_sigma = 1.0;
    std::size_t hits = 0, total = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      spec.seed = seed;
      const auto syn = generate_synthetic(spec);
      for (const auto& bag : syn.dataset.bags) {
        if (bag.label != 1) continue;
        const oracle::Vec origin(spec.dimension, 0.0);
        std::size_t far = 0;
        for (std::size_t j = 1; j < bag.size(); ++j) {
          if (oracle::dist(bag.instances[j], origin) > oracle::dist(bag.instances[far], origin)) far = j;
        }
        hits += far == syn.planted.at(bag.id);
        ++total;
      }
    }
    CHECK(static_cast<double>(hits) / static_cast<double>(total) >= 0.95);
  }

  TEST_CASE("synthetic generation is deterministic") {
    SyntheticSpec spec;
    spec.seed = 77;
    const auto a = generate_synthetic(spec);
    const auto b = generate_synthetic(spec);
    CHECK(to_csv(a.dataset) == to_csv(b.dataset));
    CHECK(a.manifest() == b.manifest());
    spec.seed = 78;
    CHECK(to_csv(generate_synthetic(spec).dataset) != to_csv(a.dataset));
  }

  TEST_CASE("synthetic shape") {
    SyntheticSpec spec;
    const auto syn = generate_synthetic(spec);
    const auto& ds = syn.dataset;
    CHECK(ds.bags.size() == 40);
    CHECK(ds.class_counts() == std::vector<std::size_t>{20, 20});
    CHECK(syn.planted.size() == 20);
    for (const auto& bag : ds.bags) {
      CHECK(bag.size() >= spec.min_instances);
      CHECK(bag.size() <= spec.max_instances);
    }
    CHECK_NOTHROW(ds.validate());
    spec.n_bags = 3;
    CHECK_THROWS_AS(generate_synthetic(spec), Error);
  }

  TEST_CASE("zero shift carries no signal") {
    SyntheticSpec spec;
    spec.planted_shift = 0.0;
    spec.n_bags = 400;
    const auto syn = generate_synthetic(spec);
    double pos = 0.0, neg = 0.0;
    std::size_t np = 0, nn = 0;
    for (const auto& bag : syn.dataset.bags) {
      for (const auto& x : bag.instances) {
        double s = 0.0;
        for (double v : x) s += v;
        (bag.label ? pos : neg) += s;
        (bag.label ? np : nn)++;
      }
    }
    CHECK(std::abs(pos / np - neg / nn) < 0.3);
  }
}
