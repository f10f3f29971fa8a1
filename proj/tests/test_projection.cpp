#include <doctest.h>

#include <cmath>
#include <random>

#include "grove/error.hpp"
#include "grove/projection.hpp"
#include "grove/synthetic.hpp"
#include "support.hpp"

using namespace grove;

namespace {

double dist(const Point2& a, const Point2& b) { return std::hypot(a[0] - b[0], a[1] - b[1]); }

}  // namespace

TEST_CASE("pairwise distances") {
  const std::vector<std::vector<double>> rows{{0, 0}, {3, 4}, {0, 1}};
  const DistanceMatrix d = pairwise_distances(rows);
  CHECK(d.n == 3);
  CHECK(d.at(0, 1) == 5.0);
  CHECK(d.at(1, 0) == 5.0);
  CHECK(d.at(2, 2) == 0.0);
}

TEST_CASE("MDS recovers planar configurations embedded in higher dimensions") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 3 + static_cast<std::size_t>(t % 9);
    // Random orthonormal pair in 5-D spans the plane.
    std::vector<double> a(5);
    std::vector<double> b(5);
    for (double& x : a) x = u(rng);
    for (double& x : b) x = u(rng);
    auto dot = [](const std::vector<double>& x, const std::vector<double>& y) {
      double s = 0;
      for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
      return s;
    };
    const double na = std::sqrt(dot(a, a));
    for (double& x : a) x /= na;
    const double ab = dot(a, b);
    for (std::size_t i = 0; i < 5; ++i) b[i] -= ab * a[i];
    const double nb = std::sqrt(dot(b, b));
    for (double& x : b) x /= nb;

    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < n; ++i) {
      const double p = u(rng) * 10;
      const double q = u(rng) * 10;
      std::vector<double> row(5);
      for (std::size_t k = 0; k < 5; ++k) row[k] = p * a[k] + q * b[k] + 1.0;
      rows.push_back(row);
    }
    const DistanceMatrix d = pairwise_distances(rows);
    const Embedding e = classical_mds(d);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        CHECK(test::relative_error(dist(e.points[i], e.points[j]), d.at(i, j)) < 1e-6);
      }
    }
    CHECK(e.stress < 1e-12);
  }
}

TEST_CASE("MDS edge cases") {
  const DistanceMatrix one{1, {0.0}};
  const Embedding e1 = classical_mds(one);
  REQUIRE(e1.points.size() == 1);
  CHECK(e1.points[0] == Point2{0, 0});
  const DistanceMatrix same{3, std::vector<double>(9, 0.0)};
  const Embedding e3 = classical_mds(same);
  CHECK(e3.stress == 0.0);
  for (const Point2& p : e3.points) CHECK(p == Point2{0, 0});
}

TEST_CASE("k-means separates well-spaced clusters") {
  std::vector<std::vector<double>> pts{{0, 0}, {0.1, 0}, {10, 10}, {10.1, 10}, {0, 0.2}, {20, 0}};
  const KMeansResult r = kmeans(pts, 3);
  CHECK(r.assignment == std::vector<std::uint32_t>{0, 0, 1, 1, 0, 2});
  CHECK(r.cost > 0.0);
  const KMeansResult all = kmeans(pts, 6);
  CHECK(all.cost == 0.0);
  CHECK(all.assignment == std::vector<std::uint32_t>{0, 1, 2, 3, 4, 5});
  const KMeansResult single = kmeans(pts, 1);
  CHECK(single.assignment == std::vector<std::uint32_t>(6, 0));
  CHECK_THROWS_AS(kmeans(pts, 0), Error);
  CHECK_THROWS_AS(kmeans(pts, 7), Error);
}

TEST_CASE("projection features are scaled to the unit interval") {
  SyntheticSpec spec;
  spec.run_count = 6;
  const auto ens = generate_synthetic_ensemble(spec);
  const EnsembleGraphFrame f = build_ensemble(ens.profiles);
  const ProjectionFeatures feat = projection_features(f);
  CHECK(feat.columns.back() == "total_exclusive");
  REQUIRE(feat.rows.size() == 6);
  for (const auto& row : feat.rows) {
    REQUIRE(row.size() == feat.columns.size());
    for (double v : row) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("parameter projection is deterministic and validates k") {
  SyntheticSpec spec;
  spec.run_count = 8;
  const auto ens = generate_synthetic_ensemble(spec);
  const EnsembleGraphFrame f = build_ensemble(ens.profiles);
  const ProjectionResult a = project_parameters(f, 3);
  const ProjectionResult b = project_parameters(f, 3);
  CHECK(a.points == b.points);
  CHECK(a.clusters == b.clusters);
  CHECK(a.runs.size() == 8);
  CHECK(project_parameters(f, 8).within_cluster_cost == 0.0);
  CHECK_THROWS_AS(project_parameters(f, 0), Error);
  CHECK_THROWS_AS(project_parameters(f, 9), Error);
}
