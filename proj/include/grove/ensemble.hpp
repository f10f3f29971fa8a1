#pragma once

// Ensemble construction: unify the runs' metric tables, union their
// calling-context trees into one tree whose metrics are per-run vectors,
// collapse that into a call graph, filter, and group call sites into
// supernodes.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "grove/kernels.hpp"
#include "grove/profile.hpp"

namespace grove {

/// Per-run metric values in ensemble run order. A NaN slot is absent: the
/// calling context does not exist in that run. A run that reached a call
/// site with zero measured time stores 0.
class MetricVector {
 public:
  MetricVector() = default;
  explicit MetricVector(std::size_t runs)
      : inclusive_(runs, kernels::kAbsent), exclusive_(runs, kernels::kAbsent) {}

  std::size_t size() const { return inclusive_.size(); }
  bool present(std::size_t run) const;
  std::optional<MetricSample> at(std::size_t run) const;
  std::optional<double> value(std::size_t run, Metric m) const;
  void set(std::size_t run, MetricSample s);

  std::span<const double> values(Metric m) const { return m == Metric::inclusive ? inclusive_ : exclusive_; }
  std::span<double> values(Metric m) { return m == Metric::inclusive ? inclusive_ : exclusive_; }

  /// Maximum over present slots; 0 when nothing is present.
  double max(Metric m) const;
  std::size_t present_count() const;

  /// Slot-wise sum where absent is the identity and absent + absent = absent.
  MetricVector& operator+=(const MetricVector& other);

  MetricVector select(std::span<const std::uint32_t> runs) const;

  friend bool operator==(const MetricVector& a, const MetricVector& b);

 private:
  std::vector<double> inclusive_;
  std::vector<double> exclusive_;
};

/// Flow vector: one inclusive value per run, NaN when absent.
using FlowVector = std::vector<double>;
double max_present(std::span<const double> v);
void accumulate(FlowVector& dst, std::span<const double> src);
bool same_values(std::span<const double> a, std::span<const double> b);

// ---------------------------------------------------------------------------

struct EnsembleNode {
  Frame frame;
  std::optional<std::uint32_t> parent;
  std::vector<std::uint32_t> children;
  MetricVector metrics;

  friend bool operator==(const EnsembleNode&, const EnsembleNode&) = default;
};

/// Union of the runs' calling-context trees. Node 0 is the root and every
/// parent precedes its children.
class EnsembleCCT {
 public:
  EnsembleCCT() = default;
  EnsembleCCT(std::vector<std::string> run_names, std::vector<EnsembleNode> nodes);

  const std::vector<std::string>& run_names() const { return run_names_; }
  std::size_t run_count() const { return run_names_.size(); }
  const std::vector<EnsembleNode>& nodes() const { return nodes_; }
  const EnsembleNode& node(std::uint32_t id) const { return nodes_.at(id); }

  std::optional<std::uint32_t> find(std::span<const Frame> path) const;
  /// Lookup by call-site names only (module ignored).
  std::optional<std::uint32_t> find_by_names(std::span<const std::string> names) const;
  std::vector<Frame> path_of(std::uint32_t id) const;

  friend bool operator==(const EnsembleCCT& a, const EnsembleCCT& b) {
    return a.run_names_ == b.run_names_ && a.nodes_ == b.nodes_;
  }

 private:
  std::vector<std::string> run_names_;
  std::vector<EnsembleNode> nodes_;
  std::map<std::string, std::uint32_t> path_index_;
  std::map<std::string, std::uint32_t> name_index_;
};

struct CallGraphNode {
  std::string name;
  std::string module;
  MetricVector metrics;

  friend bool operator==(const CallGraphNode&, const CallGraphNode&) = default;
};

struct CallGraphEdge {
  std::uint32_t source;
  std::uint32_t target;
  FlowVector flow;

  friend bool operator==(const CallGraphEdge& a, const CallGraphEdge& b) {
    return a.source == b.source && a.target == b.target && same_values(a.flow, b.flow);
  }
};

/// Call sites with the same function name merged. May contain cycles.
struct EnsembleCallGraph {
  std::vector<std::string> run_names;
  std::vector<CallGraphNode> nodes;
  std::vector<CallGraphEdge> edges;
  std::uint32_t root = 0;

  std::optional<std::uint32_t> find(std::string_view name) const;

  friend bool operator==(const EnsembleCallGraph&, const EnsembleCallGraph&) = default;
};

struct Supernode {
  std::string label;   // module name, or "<module>:<callsite>" after splits
  std::string module;
  std::vector<std::string> members;          // sorted
  std::vector<std::string> entry_functions;  // sorted
  MetricVector metrics;  // inclusive: sum over entry functions; exclusive: sum over members
  double max_inclusive = 0.0;
  double max_exclusive = 0.0;

  friend bool operator==(const Supernode&, const Supernode&) = default;
};

struct Superedge {
  std::uint32_t source;
  std::uint32_t target;
  FlowVector flow;
  double max_flow = 0.0;

  friend bool operator==(const Superedge& a, const Superedge& b) {
    return a.source == b.source && a.target == b.target && same_values(a.flow, b.flow) &&
           a.max_flow == b.max_flow;
  }
};

/// Module-grouped DAG. Edges that closed a cycle are moved to cycle_edges.
struct EnsembleSuperGraph {
  std::vector<std::string> run_names;
  std::vector<Supernode> nodes;
  std::vector<Superedge> edges;
  std::vector<Superedge> cycle_edges;
  std::uint32_t root = 0;

  std::optional<std::uint32_t> find(std::string_view label) const;
  /// Supernode index holding the call site, if it survived filtering.
  std::optional<std::uint32_t> group_of(std::string_view callsite) const;

  friend bool operator==(const EnsembleSuperGraph&, const EnsembleSuperGraph&) = default;
};

struct BuildOptions {
  Metric filter_metric = Metric::inclusive;
  double filter_fraction = 0.0;

  friend bool operator==(const BuildOptions&, const BuildOptions&) = default;
};

struct EnsembleGraphFrame {
  BuildOptions options;
  MetricTable table;
  EnsembleCCT cct;             // unfiltered
  EnsembleCallGraph callgraph; // filtered
  EnsembleSuperGraph supergraph;

  const std::vector<std::string>& run_names() const { return cct.run_names(); }
  std::optional<std::uint32_t> run_index(std::string_view run) const;

  friend bool operator==(const EnsembleGraphFrame&, const EnsembleGraphFrame&) = default;
};

// ---------------------------------------------------------------------------

MetricTable unify_metric_tables(std::span<const Profile> profiles);

EnsembleCCT union_ccts(std::span<const Profile> profiles);

EnsembleCallGraph cct_to_callgraph(const EnsembleCCT& cct);

EnsembleCallGraph filter_graph(const EnsembleCallGraph& g, Metric metric, double fraction);

/// Groups call sites by module. Entry functions are members called from
/// outside the module (or the root).
EnsembleSuperGraph group_by_module(const EnsembleCallGraph& g);

/// Groups call sites by an arbitrary assignment. group_of_node[i] indexes
/// labels/modules; every call-graph node must be assigned.
EnsembleSuperGraph build_supergraph(const EnsembleCallGraph& g, std::span<const std::uint32_t> group_of_node,
                                    std::span<const std::string> labels, std::span<const std::string> modules);

EnsembleGraphFrame build_ensemble(std::span<const Profile> profiles, const BuildOptions& options = {});

/// Re-ensembles over a subset of runs, in the given order, without the
/// original profiles.
EnsembleGraphFrame subset_ensemble(const EnsembleGraphFrame& frame, std::span<const std::string> runs);

}  // namespace grove
