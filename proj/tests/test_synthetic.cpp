#include <doctest.h>

#include <set>

#include "grove/error.hpp"
#include "grove/ingest.hpp"
#include "grove/synthetic.hpp"

using namespace grove;

TEST_CASE("generator output is deterministic per seed") {
  SyntheticSpec spec;
  spec.dropout = 0.2;
  const SyntheticEnsemble a = generate_synthetic_ensemble(spec);
  const SyntheticEnsemble b = generate_synthetic_ensemble(spec);
  REQUIRE(a.profiles.size() == 4);
  for (std::size_t i = 0; i < a.profiles.size(); ++i) {
    CHECK(serialize_profile(a.profiles[i]) == serialize_profile(b.profiles[i]));
  }
  spec.seed = 43;
  const SyntheticEnsemble c = generate_synthetic_ensemble(spec);
  CHECK(serialize_profile(a.profiles[0]) != serialize_profile(c.profiles[0]));
}

TEST_CASE("generated profiles are valid and use the requested shape") {
  SyntheticSpec spec;
  spec.run_count = 3;
  spec.callsite_count = 40;
  spec.module_count = 5;
  spec.rank_counts = {2, 3, 4};
  spec.noise = 0.3;
  const SyntheticEnsemble e = generate_synthetic_ensemble(spec);
  std::set<std::string> names;
  std::set<std::string> modules;
  for (std::size_t r = 0; r < e.profiles.size(); ++r) {
    const Profile& p = e.profiles[r];
    CHECK(validate_profile(p).empty());
    CHECK(p.rank_count == spec.rank_counts[r]);
    for (const CCTNode& n : p.nodes) {
      names.insert(n.frame.name);
      modules.insert(n.frame.module);
    }
  }
  CHECK(names.size() == 40);
  CHECK(modules.size() == 5);
  CHECK(e.profiles[0].run_name == "run-000");
}

TEST_CASE("dropout log matches what each run omits") {
  SyntheticSpec spec;
  spec.run_count = 5;
  spec.dropout = 0.3;
  const SyntheticEnsemble e = generate_synthetic_ensemble(spec);
  for (std::size_t r = 0; r < e.profiles.size(); ++r) {
    std::set<NamePath> present;
    const Profile& p = e.profiles[r];
    std::vector<NamePath> path_of(p.nodes.size());
    path_of[0] = {p.nodes[0].frame.name};
    for (const CCTNode& n : p.nodes) {
      if (n.id != 0 && path_of[n.id].empty()) FAIL("child listed before parent");
      for (NodeId c : n.children) {
        path_of[c] = path_of[n.id];
        path_of[c].push_back(p.nodes[c].frame.name);
      }
      present.insert(path_of[n.id]);
    }
    const std::set<NamePath> dropped(e.dropped[r].begin(), e.dropped[r].end());
    for (const NamePath& base : e.base_paths) CHECK((present.count(base) == 1) != (dropped.count(base) == 1));
    CHECK(present.size() + dropped.size() == e.base_paths.size());
  }
}

TEST_CASE("planted outlier doubles one call site in the last run") {
  SyntheticSpec spec;
  spec.plant_outlier = true;
  spec.noise = 0.0;
  const SyntheticEnsemble e = generate_synthetic_ensemble(spec);
  REQUIRE(e.outlier_callsite.has_value());
  CHECK(e.outlier_run == e.profiles.back().run_name);
  auto excl = [&](const Profile& p) {
    for (const CCTNode& n : p.nodes) {
      if (n.frame.name == *e.outlier_callsite) return aggregate_run_representative(p, n.id).exclusive;
    }
    return -1.0;
  };
  CHECK(excl(e.profiles.back()) == doctest::Approx(2 * excl(e.profiles.front())));
}

TEST_CASE("inconsistent specs are rejected") {
  SyntheticSpec spec;
  spec.rank_counts = {1, 2};
  CHECK_THROWS_AS(generate_synthetic_ensemble(spec), Error);
  spec = {};
  spec.run_count = 0;
  CHECK_THROWS_AS(generate_synthetic_ensemble(spec), Error);
  spec = {};
  spec.module_count = 100;
  CHECK_THROWS_AS(generate_synthetic_ensemble(spec), Error);
}
