#pragma once

// Geometry for the ensemble Sankey view, icicle trees for the supernode
// hierarchy, and replay of split commands against the baseline super graph.
// Coordinates are abstract canvas units, origin top-left, y downward.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "grove/analytics.hpp"
#include "grove/ensemble.hpp"

namespace grove {

struct SankeyOptions {
  double width = 1000.0;
  double height = 600.0;
  double margin = 20.0;
  double min_node_height = 2.0;
  double node_width = 20.0;
  double vertical_gap = 10.0;
  std::uint32_t bins = 10;
  Metric gradient_metric = Metric::inclusive;
};

struct SankeyNode {
  std::uint32_t id = 0;  // index into the super graph's nodes
  std::string label;
  std::string module;
  std::vector<std::string> entry_functions;
  std::uint32_t level = 0;
  std::uint32_t order = 0;  // position within the level, top to bottom
  double x = 0.0;
  double y = 0.0;
  double width = 0.0;
  double height = 0.0;
  double max_inclusive = 0.0;
  double border_value = 0.0;  // max exclusive
  Histogram gradient;
};

struct SankeyEdge {
  std::uint32_t source = 0;
  std::uint32_t target = 0;
  double max_flow = 0.0;
  double source_end_thickness = 0.0;
  double target_end_thickness = 0.0;
  double source_y_offset = 0.0;  // from the top of the source node
  double target_y_offset = 0.0;  // from the top of the target node
};

struct SankeyLayout {
  double width = 0.0;
  double height = 0.0;  // grows past the requested height if a level cannot fit at minimum heights
  std::vector<SankeyNode> nodes;  // same order as the super graph
  std::vector<SankeyEdge> edges;  // same order as the super graph
  std::vector<SankeyEdge> cycle_edges;  // dropped edges, geometry left zero
};

/// Throws precondition if the edges contain a cycle.
SankeyLayout compute_sankey_layout(const EnsembleSuperGraph& sg, const SankeyOptions& options = {});

// ---------------------------------------------------------------------------

struct IcicleNode {
  std::string callsite;
  std::optional<std::uint32_t> parent;  // index into IcicleTree::nodes
  std::uint32_t depth = 0;
  double x0 = 0.0;  // extent within [0, 1]
  double x1 = 0.0;
  double max_inclusive = 0.0;
  double border_value = 0.0;
  std::vector<std::string> present_in;
  bool absent = false;  // absent from the requested target run
  Histogram gradient;   // empty when absent
};

struct IcicleTree {
  std::string label;
  std::optional<std::string> target;
  std::vector<IcicleNode> nodes;  // breadth-first; depth 0 holds the entry functions
};

/// Hierarchy of a supernode's call sites, built breadth-first from its
/// entry functions over the unfiltered ensemble; edges back to an already
/// placed call site are dropped. For an unsplit module the tree covers
/// every call site of the module, including ones the filter removed.
IcicleTree supernode_hierarchy(const EnsembleGraphFrame& frame, const EnsembleSuperGraph& sg, std::string_view label,
                               std::optional<std::string_view> target = std::nullopt, std::uint32_t bins = 10,
                               Metric metric = Metric::inclusive);

// ---------------------------------------------------------------------------

struct SplitCommand {
  enum class Kind { split_by_entry_functions, reveal_callsite };
  Kind kind = Kind::split_by_entry_functions;
  std::string group;     // supernode label the command applies to
  std::string callsite;  // reveal only

  friend bool operator==(const SplitCommand&, const SplitCommand&) = default;
};

struct SplitState {
  std::vector<SplitCommand> commands;
};

/// Replays the commands against the frame's baseline grouping. Split
/// supernodes are labeled "<module>:<entry>" and revealed call sites
/// "<module>:<callsite>". A repeated command is a no-op; an unknown group
/// or call site throws not_found.
EnsembleSuperGraph apply_splits(const EnsembleGraphFrame& frame, const SplitState& state);

}  // namespace grove
