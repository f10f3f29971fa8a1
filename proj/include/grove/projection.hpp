#pragma once

// Parameter projection: per-run feature vectors (scaled execution
// parameters plus total runtimes), classical MDS to 2-D and k-means.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "grove/ensemble.hpp"

namespace grove {

using Point2 = std::array<double, 2>;

/// Dense symmetric n x n matrix, row-major.
struct DistanceMatrix {
  std::size_t n = 0;
  std::vector<double> values;

  double at(std::size_t i, std::size_t j) const { return values[i * n + j]; }
};

DistanceMatrix pairwise_distances(std::span<const std::vector<double>> rows);

struct Embedding {
  std::vector<Point2> points;
  double stress = 0.0;  // sum (d_ij - delta_ij)^2 / sum delta_ij^2, 0 when all deltas are 0
};

/// Torgerson scaling to two dimensions. Each axis is oriented so that its
/// largest-magnitude coordinate is positive.
Embedding classical_mds(const DistanceMatrix& distances);

struct KMeansResult {
  std::vector<std::uint32_t> assignment;  // dense ids in order of first appearance
  std::vector<std::vector<double>> centroids;
  double cost = 0.0;  // within-cluster sum of squared distances
  std::uint32_t iterations = 0;
};

/// Lloyd's algorithm with farthest-point seeding from point 0, at most 100
/// iterations, stopping when no centroid moves more than 1e-6 of the data
/// extent.
KMeansResult kmeans(std::span<const std::vector<double>> points, std::uint32_t k);

struct ProjectionFeatures {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;  // one per run, each entry in [0, 1]
};

/// Numeric parameters min-max scaled; categorical ones coded by order of
/// first appearance then scaled; total inclusive and exclusive runtime
/// scaled likewise. Constant columns scale to 0; a run lacking a
/// parameter gets 0 in that column.
ProjectionFeatures projection_features(const EnsembleGraphFrame& frame);

struct ProjectionResult {
  std::vector<std::string> runs;
  std::vector<Point2> points;
  std::vector<std::uint32_t> clusters;
  double stress = 0.0;
  double within_cluster_cost = 0.0;
  std::vector<std::string> features;
};

ProjectionResult project_parameters(const EnsembleGraphFrame& frame, std::uint32_t k);

}  // namespace grove
