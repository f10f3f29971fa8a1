#pragma once

// Distributional statistics over a built ensemble. Absent slots are left
// out of histograms and boxplots; the diff is the one place where absent
// counts as zero, and it flags such entries as partial.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "grove/ensemble.hpp"

namespace grove {

struct Histogram {
  std::vector<double> bin_edges;  // bins + 1 entries; [v, v] when all values are equal
  std::vector<std::uint32_t> counts;
  std::vector<std::vector<std::string>> members;

  std::size_t bins() const { return counts.size(); }
  std::size_t total() const;
  /// Counts scaled by the largest count, in [0, 1].
  std::vector<double> normalized_heights() const;
  /// Bin holding v, with edges[i] <= v <= edges[i+1]; nullopt outside range.
  std::optional<std::uint32_t> bin_of(double v) const;
};

/// Equal-width histogram over [min, max] of the values. Bins are half-open
/// except the last. A zero-width range collapses to a single bin.
Histogram make_histogram(std::span<const double> values, std::span<const std::string> labels, std::uint32_t bins);

/// Histogram of the present per-run values of one metric vector, labeled by run.
Histogram ensemble_gradient(const MetricVector& metrics, std::span<const std::string> run_names, Metric metric,
                            std::uint32_t bins);

Histogram supernode_gradient(const EnsembleSuperGraph& sg, std::string_view label, Metric metric, std::uint32_t bins);
Histogram callsite_gradient(const EnsembleCallGraph& g, std::string_view callsite, Metric metric, std::uint32_t bins);

// ---------------------------------------------------------------------------

struct LabeledValue {
  std::string label;
  double value;

  friend bool operator==(const LabeledValue&, const LabeledValue&) = default;
};

struct BoxplotStats {
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
  double lower_fence = 0.0;
  double upper_fence = 0.0;
  std::size_t count = 0;
  std::vector<LabeledValue> outliers;  // ascending by value, then label
};

/// Quantile by linear interpolation between order statistics at position
/// p * (m - 1) of an ascending list.
double quantile_sorted(std::span<const double> sorted, double p);

/// Boxplot summary; fences at 1.5 IQR beyond the quartiles. observations
/// must be non-empty.
BoxplotStats boxplot(std::vector<LabeledValue> observations);

/// Per-rank boxplot of a call site. scope_run limits observations to one
/// run; otherwise every rank of every run. Labels are "run:rank".
/// Throws not_found for an unknown call site or one absent from the run.
BoxplotStats rank_boxplot(const MetricTable& table, std::string_view callsite,
                          std::optional<std::string_view> scope_run, Metric metric = Metric::exclusive);

// ---------------------------------------------------------------------------

enum class DistributionMode { callsite, callgraph, rank };

DistributionMode distribution_mode_from_string(std::string_view s);
std::string_view to_string(DistributionMode m);

/// Runtime distribution of one supernode:
///  callsite  - one value per member: mean of its present per-run values
///  callgraph - one value per run where the supernode is present
///  rank      - one value per (run, rank): summed member exclusive time, or
///              summed entry-function inclusive time for the inclusive metric
Histogram distribution(const EnsembleGraphFrame& frame, const EnsembleSuperGraph& sg, std::string_view label,
                       Metric metric, DistributionMode mode, std::uint32_t bins);

struct ScatterPoint {
  std::string callsite;
  std::string run;
  double exclusive;
  double inclusive;
};

struct Scatter {
  std::vector<ScatterPoint> points;
  std::optional<double> pearson_r;  // absent with fewer than 2 points or zero variance
};

std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

/// Exclusive vs inclusive per (member call site, run).
Scatter correlation_scatter(const EnsembleGraphFrame& frame, const EnsembleSuperGraph& sg, std::string_view label,
                            std::optional<std::string_view> scope_run);

// ---------------------------------------------------------------------------

struct NodeOverlay {
  std::string label;
  bool present = false;
  double inclusive = 0.0;
  double exclusive = 0.0;
  std::optional<std::uint32_t> bin;  // position inside the node's ensemble gradient
};

struct EdgeOverlay {
  std::string source;
  std::string target;
  std::optional<double> flow;
};

struct TargetOverlay {
  std::string run;
  Metric metric;
  std::uint32_t bins;
  std::vector<NodeOverlay> nodes;
  std::vector<EdgeOverlay> edges;
};

TargetOverlay target_overlay(const EnsembleSuperGraph& sg, std::string_view run, Metric metric, std::uint32_t bins);

struct NodeDelta {
  std::string label;
  double delta_inclusive = 0.0;
  double delta_exclusive = 0.0;
  double normalized_inclusive = 0.0;  // delta / max |delta| over nodes
  double normalized_exclusive = 0.0;
  bool partial = false;  // absent in at least one of the two runs
};

struct EdgeDelta {
  std::string source;
  std::string target;
  double delta_flow = 0.0;
  bool partial = false;
};

/// Positive deltas mean run_b is slower than run_a.
struct DiffGraph {
  std::string run_a;
  std::string run_b;
  std::vector<NodeDelta> nodes;
  std::vector<EdgeDelta> edges;
};

DiffGraph diff_supergraphs(const EnsembleSuperGraph& sg, std::string_view run_a, std::string_view run_b);

}  // namespace grove
