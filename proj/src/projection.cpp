#include "grove/projection.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "grove/error.hpp"
#include "grove/kernels.hpp"

namespace grove {

DistanceMatrix pairwise_distances(std::span<const std::vector<double>> rows) {
  const auto& k = kernels::active();
  DistanceMatrix d{rows.size(), std::vector<double>(rows.size() * rows.size(), 0.0)};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = i + 1; j < rows.size(); ++j) {
      if (rows[i].size() != rows[j].size()) fail(Errc::precondition, "feature rows differ in length");
      const double dist = std::sqrt(k.squared_distance(rows[i], rows[j]));
      d.values[i * d.n + j] = dist;
      d.values[j * d.n + i] = dist;
    }
  }
  return d;
}

Embedding classical_mds(const DistanceMatrix& distances) {
  const std::size_t n = distances.n;
  Embedding out;
  out.points.assign(n, Point2{0.0, 0.0});
  if (n < 2) return out;

  // B = -1/2 J D^2 J with J the centering matrix.
  Eigen::MatrixXd sq(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double v = distances.at(i, j);
      sq(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v * v;
    }
  }
  const Eigen::VectorXd row_mean = sq.rowwise().mean();
  const Eigen::VectorXd col_mean = sq.colwise().mean().transpose();
  const double grand = sq.mean();
  Eigen::MatrixXd b(n, n);
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
    for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(n); ++j) {
      b(i, j) = -0.5 * (sq(i, j) - row_mean(i) - col_mean(j) + grand);
    }
  }

  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(b);
  if (solver.info() != Eigen::Success) fail(Errc::precondition, "MDS eigendecomposition failed");
  const Eigen::VectorXd& evals = solver.eigenvalues();  // ascending
  const Eigen::MatrixXd& evecs = solver.eigenvectors();

  for (int axis = 0; axis < 2; ++axis) {
    const Eigen::Index col = static_cast<Eigen::Index>(n) - 1 - axis;
    if (col < 0) break;
    const double scale = std::sqrt(std::max(evals(col), 0.0));
    Eigen::VectorXd coord = evecs.col(col) * scale;
    Eigen::Index largest = 0;
    for (Eigen::Index i = 1; i < coord.size(); ++i) {
      if (std::abs(coord(i)) > std::abs(coord(largest))) largest = i;
    }
    if (coord(largest) < 0.0) coord = -coord;
    for (std::size_t i = 0; i < n; ++i) out.points[i][axis] = coord(static_cast<Eigen::Index>(i)) + 0.0;
  }

  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = out.points[i][0] - out.points[j][0];
      const double dy = out.points[i][1] - out.points[j][1];
      const double embedded = std::sqrt(dx * dx + dy * dy);
      const double target = distances.at(i, j);
      num += (embedded - target) * (embedded - target);
      den += target * target;
    }
  }
  out.stress = den > 0.0 ? num / den : 0.0;
  return out;
}

KMeansResult kmeans(std::span<const std::vector<double>> points, std::uint32_t k) {
  const std::size_t n = points.size();
  if (k < 1 || k > n) fail(Errc::invalid_argument, "k must be in [1, number of points]");
  const auto& kern = kernels::active();
  const std::size_t dims = points.front().size();

  // Farthest-point seeding.
  std::vector<std::vector<double>> centroids{points[0]};
  std::vector<double> nearest(n);
  for (std::size_t i = 0; i < n; ++i) nearest[i] = kern.squared_distance(points[i], centroids[0]);
  while (centroids.size() < k) {
    std::size_t pick = 0;
    for (std::size_t i = 1; i < n; ++i) {
      if (nearest[i] > nearest[pick]) pick = i;
    }
    centroids.push_back(points[pick]);
    for (std::size_t i = 0; i < n; ++i) nearest[i] = std::min(nearest[i], kern.squared_distance(points[i], points[pick]));
  }

  double extent = 0.0;
  for (std::size_t i = 1; i < n; ++i) extent = std::max(extent, std::sqrt(kern.squared_distance(points[i], points[0])));
  const double tolerance = 1e-6 * extent;

  KMeansResult out;
  std::vector<std::uint32_t> assign(n, 0);
  for (std::uint32_t iter = 1; iter <= 100; ++iter) {
    out.iterations = iter;
    for (std::size_t i = 0; i < n; ++i) {
      std::uint32_t best = 0;
      double best_d = kern.squared_distance(points[i], centroids[0]);
      for (std::uint32_t c = 1; c < k; ++c) {
        const double d = kern.squared_distance(points[i], centroids[c]);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      assign[i] = best;
    }
    std::vector<std::vector<double>> sums(k, std::vector<double>(dims, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++counts[assign[i]];
      for (std::size_t d = 0; d < dims; ++d) sums[assign[i]][d] += points[i][d];
    }
    double shift = 0.0;
    for (std::uint32_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;  // empty cluster keeps its centroid
      for (double& v : sums[c]) v /= static_cast<double>(counts[c]);
      shift = std::max(shift, std::sqrt(kern.squared_distance(sums[c], centroids[c])));
      centroids[c] = std::move(sums[c]);
    }
    if (shift <= tolerance) break;
  }

  // Dense relabeling in order of first appearance.
  std::vector<std::int64_t> relabel(k, -1);
  std::uint32_t next = 0;
  out.assignment.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (relabel[assign[i]] < 0) relabel[assign[i]] = next++;
    out.assignment[i] = static_cast<std::uint32_t>(relabel[assign[i]]);
  }
  out.centroids.resize(next);
  for (std::uint32_t c = 0; c < k; ++c) {
    if (relabel[c] >= 0) out.centroids[static_cast<std::size_t>(relabel[c])] = centroids[c];
  }
  for (std::size_t i = 0; i < n; ++i) out.cost += kern.squared_distance(points[i], out.centroids[out.assignment[i]]);
  return out;
}

namespace {

void scale_column(std::vector<double>& column) {
  const auto [lo, hi] = std::minmax_element(column.begin(), column.end());
  const double min = *lo;
  const double range = *hi - *lo;
  for (double& v : column) v = range > 0.0 ? (v - min) / range : 0.0;
}

}  // namespace

ProjectionFeatures projection_features(const EnsembleGraphFrame& frame) {
  const auto& runs = frame.table.runs();
  const std::size_t n = runs.size();

  // A parameter is numeric only if every run that sets it gives a number.
  std::map<std::string, bool> numeric;
  for (const RunInfo& r : runs) {
    for (const auto& [key, value] : r.params) {
      const bool is_num = std::holds_alternative<double>(value);
      auto [it, inserted] = numeric.try_emplace(key, is_num);
      if (!inserted) it->second = it->second && is_num;
    }
  }

  ProjectionFeatures out;
  std::vector<std::vector<double>> columns;
  for (const auto& [key, is_num] : numeric) {
    std::vector<double> col(n, 0.0);
    std::vector<char> has(n, 0);
    std::map<std::string, double> codes;
    for (std::size_t i = 0; i < n; ++i) {
      const auto it = runs[i].params.find(key);
      if (it == runs[i].params.end()) continue;
      has[i] = 1;
      if (is_num) {
        col[i] = std::get<double>(it->second);
      } else {
        std::string text;
        if (const double* d = std::get_if<double>(&it->second)) {
          text = std::to_string(*d);
        } else {
          text = std::get<std::string>(it->second);
        }
        auto [code, fresh] = codes.try_emplace(text, static_cast<double>(codes.size()));
        col[i] = code->second;
      }
    }
    std::vector<double> present;
    for (std::size_t i = 0; i < n; ++i) {
      if (has[i]) present.push_back(col[i]);
    }
    const auto [lo, hi] = std::minmax_element(present.begin(), present.end());
    const double range = *hi - *lo;
    for (std::size_t i = 0; i < n; ++i) col[i] = has[i] && range > 0.0 ? (col[i] - *lo) / range : 0.0;
    out.columns.push_back(key);
    columns.push_back(std::move(col));
  }

  // Total runtimes per run: root inclusive and summed exclusive over the CCT.
  std::vector<double> total_incl(n, 0.0);
  std::vector<double> total_excl(n, 0.0);
  std::vector<std::uint32_t> slot(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = frame.run_index(runs[i].name);
    if (!r) fail(Errc::precondition, "metric table run missing from ensemble");
    slot[i] = *r;
  }
  if (!frame.cct.nodes().empty()) {
    for (std::size_t i = 0; i < n; ++i) {
      total_incl[i] = frame.cct.node(0).metrics.value(slot[i], Metric::inclusive).value_or(0.0);
    }
    for (const EnsembleNode& node : frame.cct.nodes()) {
      const auto excl = node.metrics.values(Metric::exclusive);
      for (std::size_t i = 0; i < n; ++i) {
        if (!std::isnan(excl[slot[i]])) total_excl[i] += excl[slot[i]];
      }
    }
  }
  scale_column(total_incl);
  scale_column(total_excl);
  out.columns.push_back("total_inclusive");
  columns.push_back(std::move(total_incl));
  out.columns.push_back("total_exclusive");
  columns.push_back(std::move(total_excl));

  out.rows.assign(n, std::vector<double>(columns.size()));
  for (std::size_t c = 0; c < columns.size(); ++c) {
    for (std::size_t i = 0; i < n; ++i) out.rows[i][c] = columns[c][i];
  }
  return out;
}

ProjectionResult project_parameters(const EnsembleGraphFrame& frame, std::uint32_t k) {
  const std::size_t n = frame.table.runs().size();
  if (k < 1 || k > n) fail(Errc::invalid_argument, "k must be in [1, run count]");
  const ProjectionFeatures features = projection_features(frame);
  const Embedding embedding = classical_mds(pairwise_distances(features.rows));

  std::vector<std::vector<double>> pts;
  for (const Point2& p : embedding.points) pts.push_back({p[0], p[1]});
  const KMeansResult clusters = kmeans(pts, k);

  ProjectionResult out;
  for (const RunInfo& r : frame.table.runs()) out.runs.push_back(r.name);
  out.points = embedding.points;
  out.clusters = clusters.assignment;
  out.stress = embedding.stress;
  out.within_cluster_cost = clusters.cost;
  out.features = features.columns;
  return out;
}

}  // namespace grove
