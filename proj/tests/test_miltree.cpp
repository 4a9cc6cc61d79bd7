#include <doctest.h>

#include <set>

#include "milt/error.hpp"
#include "milt/miltree.hpp"

using namespace milt;

namespace {

std::shared_ptr<const MilDataset> synthetic(std::uint64_t seed, std::size_t n_bags = 40) {
  SyntheticSpec spec;
  spec.seed = seed;
  spec.n_bags = n_bags;
  return std::make_shared<const MilDataset>(generate_synthetic(spec).dataset);
}

NjTree star(std::size_t leaves) {
  NjTree t;
  for (std::size_t i = 0; i < leaves; ++i) t.nodes.push_back({NodeKind::Leaf, i, 0, 0});
  t.nodes.push_back({NodeKind::Virtual, std::nullopt, 0, 0});
  for (std::size_t i = 0; i < leaves; ++i) t.edges.push_back({leaves, i, 1, 1});
  return t;
}

}  // namespace

TEST_SUITE("miltree") {
  TEST_CASE("build") {
    const auto ds = synthetic(3, 200);
    for (auto method : {SelectionMethod::SI, SelectionMethod::Med}) {
      const auto t = build_miltree(ds, method);
      CHECK(t->bag_tree().leaf_count() == 200);
      CHECK(t->bag_tree().virtual_count() == 198);
      const auto slots = t->initial_slots();
      for (std::size_t i = 0; i < slots.size(); ++i) {
        CHECK(slots[i].proto_proj == t->pairs()[i].b_ix);
        CHECK(slots[i].proto_class == slots[i].proto_proj);
        CHECK(slots[i].extra_protos.empty());
      }
    }
  }

  TEST_CASE("two bags give a single edge") {
    const auto ds = std::make_shared<const MilDataset>(parse_csv("bag_id,label,f0\na,0,1\nb,1,4\n", "two"));
    const auto t = build_miltree(ds, SelectionMethod::Med);
    CHECK(t->bag_tree().edges.size() == 1);
    CHECK(t->bag_tree().edges[0].length == 3.0);
  }

  TEST_CASE("rebuilding gives an identical export") {
    const auto ds = synthetic(4);
    const auto a = build_miltree(ds, SelectionMethod::SI);
    const auto b = build_miltree(ds, SelectionMethod::SI);
    CHECK(bag_tree_json(*a, a->initial_slots(), a->classify_positions()).dump() ==
          bag_tree_json(*b, b->initial_slots(), b->classify_positions()).dump());
  }

  TEST_CASE("instance trees") {
    const auto ds = std::make_shared<const MilDataset>(
        parse_csv("bag_id,label,f0\na,0,1\nb,1,4\nb,1,5\nb,1,9\nc,0,2\n", "small"));
    const auto t = build_miltree(ds, SelectionMethod::Med);
    CHECK(t->instance_tree(0).tree.nodes.size() == 1);
    const auto& it = t->instance_tree(1);
    CHECK(it.tree.leaf_count() == 3);
    CHECK(it.proto_proj == t->pairs()[1].b_ix);
    CHECK(&t->instance_tree(1) == &it);
    CHECK_THROWS_AS(t->instance_tree(7), Error);
    const auto j = instance_tree_json(*t, 1, t->initial_slots()[1]);
    std::size_t flagged = 0;
    for (const auto& n : j["nodes"])
      if (n.value("proto_proj", false)) ++flagged;
    CHECK(flagged == 1);
  }

  TEST_CASE("star tree: every bag is internal") {
    const auto pos = classify_positions(star(6));
    for (const auto& p : pos) {
      CHECK(p.kind == Position::Internal);
      CHECK(p.depth_score == 1.0);
    }
  }

  TEST_CASE("caterpillar: the far end pair is external") {
    // Leaves 0..5; spine 6-7-8-9 with cherries (0,1) on 6 and (4,5) on 9.
    NjTree t;
    for (std::size_t i = 0; i < 6; ++i) t.nodes.push_back({NodeKind::Leaf, i, 0, 0});
    for (int k = 0; k < 4; ++k) t.nodes.push_back({NodeKind::Virtual, std::nullopt, 0, 0});
    t.edges = {{6, 0, 1, 1}, {6, 1, 1, 1}, {7, 6, 1, 1}, {7, 2, 1, 1},
               {8, 7, 1, 1}, {8, 3, 1, 1}, {9, 8, 1, 1}, {9, 4, 1, 1}, {9, 5, 1, 1}};
    // Nodes 7 and 8 both have eccentricity 3; the lower id is the center.
    CHECK(topological_center(t) == 7);
    // Virtual nodes on each leaf's path to node 7, counted by hand.
    CHECK(center_depths(t) == std::vector<double>{2, 2, 1, 2, 3, 3});
    const auto pos = classify_positions(t);
    std::set<std::size_t> external;
    for (const auto& p : pos)
      if (p.kind == Position::External) external.insert(p.bag);
    CHECK(external == std::set<std::size_t>{4, 5});
  }

  TEST_CASE("positions partition the bags") {
    const auto t = build_miltree(synthetic(5, 200), SelectionMethod::Med);
    const auto pos = t->classify_positions();
    CHECK(pos.size() == 200);
    std::size_t ext = 0;
    for (const auto& p : pos) ext += p.kind == Position::External;
    CHECK(ext > 0);
    CHECK(ext < 200);
  }

  TEST_CASE("suggest_training") {
    const auto ds = std::make_shared<const MilDataset>(load_csv(MILT_DATA_DIR "/musk1.csv"));
    const auto t = build_miltree(ds, SelectionMethod::Med);
    const auto pos = t->classify_positions();
    const auto picked = suggest_training(*ds, pos, 0.3, 1);
    CHECK(picked.size() == 28);
    CHECK(std::is_sorted(picked.begin(), picked.end()));
    CHECK(suggest_training(*ds, pos, 0.3, 1) == picked);
    // Per class: 14 bags, 7 external and 7 internal unless a pool runs short.
    for (ClassId c = 0; c < 2; ++c) {
      std::size_t ext = 0, in = 0, pool_ext = 0, pool_in = 0;
      for (const auto& p : pos) {
        if (ds->bags[p.bag].label != c) continue;
        (p.kind == Position::External ? pool_ext : pool_in)++;
      }
      for (const auto b : picked) {
        if (ds->bags[b].label != c) continue;
        (pos[b].kind == Position::External ? ext : in)++;
      }
      CHECK(ext + in == 14);
      CHECK(ext == std::min<std::size_t>(7, pool_ext));
      (void)pool_in;
    }
    for (const auto b : suggest_training(*ds, pos, 0.3, 1, TrainingMode::External)) {
      if (pos[b].kind != Position::External) {
        // Only allowed once the class's external pool is used up.
        std::size_t pool = 0;
        for (const auto& p : pos) pool += ds->bags[p.bag].label == ds->bags[b].label && p.kind == Position::External;
        CHECK(pool < 14);
      }
    }
    CHECK_THROWS_AS(suggest_training(*ds, pos, 0.0, 1), Error);
  }

  TEST_CASE("a one-bag class is always selected") {
    const auto ds = std::make_shared<const MilDataset>(
        parse_csv("bag_id,label,f0\na,0,1\nb,0,2\nc,0,3\nd,0,4\ne,1,9\n", "lonely"));
    const auto t = build_miltree(ds, SelectionMethod::Med);
    const auto picked = suggest_training(*ds, t->classify_positions(), 0.3, 3);
    CHECK(std::count(picked.begin(), picked.end(), 4u) == 1);
  }

  TEST_CASE("bag tree json carries bag fields") {
    const auto t = build_miltree(synthetic(6), SelectionMethod::SI);
    const auto j = bag_tree_json(*t, t->initial_slots(), t->classify_positions());
    for (const auto& n : j["nodes"]) {
      if (n["kind"] != "leaf") continue;
      for (const char* key : {"bag_id", "label", "position", "proto_proj", "proto_class", "x", "y"}) {
        CHECK(n.contains(key));
      }
    }
  }
}
