#include "grove/documents.hpp"

#include "grove/error.hpp"

namespace grove {

using json = nlohmann::json;

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json labeled(const std::vector<LabeledValue>& values) {
  json out = json::array();
  for (const LabeledValue& v : values) out.push_back({{"label", v.label}, {"value", v.value}});
  return out;
}

}  // namespace

json to_document(const Histogram& h) {
  return {{"bin_edges", h.bin_edges},
          {"counts", h.counts},
          {"heights", h.normalized_heights()},
          {"members", h.members}};
}

json to_document(const BoxplotStats& b) {
  return {{"count", b.count},        {"lower_fence", b.lower_fence}, {"max", b.max},
          {"median", b.median},      {"min", b.min},                 {"outliers", labeled(b.outliers)},
          {"q1", b.q1},              {"q3", b.q3},                   {"upper_fence", b.upper_fence}};
}

json to_document(const Scatter& s) {
  json points = json::array();
  for (const ScatterPoint& p : s.points) {
    points.push_back({{"callsite", p.callsite}, {"run", p.run}, {"exclusive", p.exclusive}, {"inclusive", p.inclusive}});
  }
  return {{"points", std::move(points)}, {"pearson_r", optional_number(s.pearson_r)}};
}

json to_document(const TargetOverlay& t) {
  json nodes = json::array();
  for (const NodeOverlay& n : t.nodes) {
    nodes.push_back({{"label", n.label},
                     {"present", n.present},
                     {"inclusive", n.present ? json(n.inclusive) : json(nullptr)},
                     {"exclusive", n.present ? json(n.exclusive) : json(nullptr)},
                     {"bin", n.bin ? json(*n.bin) : json(nullptr)}});
  }
  json edges = json::array();
  for (const EdgeOverlay& e : t.edges) {
    edges.push_back({{"source", e.source}, {"target", e.target}, {"flow", optional_number(e.flow)}});
  }
  return {{"run", t.run}, {"metric", to_string(t.metric)}, {"bins", t.bins}, {"nodes", nodes}, {"edges", edges}};
}

json to_document(const DiffGraph& d) {
  json nodes = json::array();
  for (const NodeDelta& n : d.nodes) {
    nodes.push_back({{"label", n.label},
                     {"delta_inclusive", n.delta_inclusive},
                     {"delta_exclusive", n.delta_exclusive},
                     {"normalized_inclusive", n.normalized_inclusive},
                     {"normalized_exclusive", n.normalized_exclusive},
                     {"partial", n.partial}});
  }
  json edges = json::array();
  for (const EdgeDelta& e : d.edges) {
    edges.push_back({{"source", e.source}, {"target", e.target}, {"delta_flow", e.delta_flow}, {"partial", e.partial}});
  }
  return {{"run_a", d.run_a}, {"run_b", d.run_b}, {"nodes", nodes}, {"edges", edges}};
}

json to_document(const ProjectionResult& p) {
  json points = json::array();
  for (std::size_t i = 0; i < p.runs.size(); ++i) {
    points.push_back({{"run", p.runs[i]}, {"x", p.points[i][0]}, {"y", p.points[i][1]}, {"cluster", p.clusters[i]}});
  }
  return {{"points", std::move(points)},
          {"stress", p.stress},
          {"within_cluster_cost", p.within_cluster_cost},
          {"features", p.features}};
}

namespace {

json edge_document(const SankeyEdge& e) {
  return {{"source", e.source},
          {"target", e.target},
          {"max_flow", e.max_flow},
          {"source_end_thickness", e.source_end_thickness},
          {"target_end_thickness", e.target_end_thickness},
          {"source_y_offset", e.source_y_offset},
          {"target_y_offset", e.target_y_offset}};
}

}  // namespace

json to_document(const SankeyLayout& layout) {
  json nodes = json::array();
  for (const SankeyNode& n : layout.nodes) {
    nodes.push_back({{"id", n.id},
                     {"label", n.label},
                     {"module", n.module},
                     {"entry_functions", n.entry_functions},
                     {"level", n.level},
                     {"order", n.order},
                     {"x", n.x},
                     {"y", n.y},
                     {"width", n.width},
                     {"height", n.height},
                     {"max_inclusive", n.max_inclusive},
                     {"border_value", n.border_value},
                     {"gradient", to_document(n.gradient)}});
  }
  json edges = json::array();
  for (const SankeyEdge& e : layout.edges) edges.push_back(edge_document(e));
  json cycles = json::array();
  for (const SankeyEdge& e : layout.cycle_edges) {
    cycles.push_back({{"source", e.source}, {"target", e.target}, {"max_flow", e.max_flow}});
  }
  return {{"canvas", {{"width", layout.width}, {"height", layout.height}}},
          {"nodes", std::move(nodes)},
          {"edges", std::move(edges)},
          {"cycle_edges", std::move(cycles)}};
}

json to_document(const IcicleTree& tree) {
  json nodes = json::array();
  for (const IcicleNode& n : tree.nodes) {
    nodes.push_back({{"callsite", n.callsite},
                     {"parent", n.parent ? json(*n.parent) : json(nullptr)},
                     {"depth", n.depth},
                     {"x0", n.x0},
                     {"x1", n.x1},
                     {"max_inclusive", n.max_inclusive},
                     {"border_value", n.border_value},
                     {"present_in", n.present_in},
                     {"absent", n.absent},
                     {"gradient", n.absent ? json(nullptr) : to_document(n.gradient)}});
  }
  return {{"label", tree.label},
          {"target", tree.target ? json(*tree.target) : json(nullptr)},
          {"nodes", std::move(nodes)}};
}

json to_document(const SplitState& state) {
  json out = json::array();
  for (const SplitCommand& c : state.commands) {
    if (c.kind == SplitCommand::Kind::split_by_entry_functions) {
      out.push_back({{"op", "split"}, {"group", c.group}});
    } else {
      out.push_back({{"op", "reveal"}, {"group", c.group}, {"callsite", c.callsite}});
    }
  }
  return out;
}

SplitState split_state_from_document(const json& doc) {
  if (!doc.is_array()) fail(Errc::invalid_argument, "split state must be a JSON list");
  SplitState state;
  for (const json& c : doc) {
    if (!c.is_object() || !c.contains("op") || !c["op"].is_string() || !c.contains("group") ||
        !c["group"].is_string()) {
      fail(Errc::invalid_argument, "split command needs string fields 'op' and 'group'");
    }
    const std::string op = c["op"].get<std::string>();
    SplitCommand cmd;
    cmd.group = c["group"].get<std::string>();
    if (op == "split") {
      if (c.size() != 2) fail(Errc::invalid_argument, "split command takes only 'op' and 'group'");
      cmd.kind = SplitCommand::Kind::split_by_entry_functions;
    } else if (op == "reveal") {
      if (c.size() != 3 || !c.contains("callsite") || !c["callsite"].is_string()) {
        fail(Errc::invalid_argument, "reveal command needs 'op', 'group' and 'callsite'");
      }
      cmd.kind = SplitCommand::Kind::reveal_callsite;
      cmd.callsite = c["callsite"].get<std::string>();
    } else {
      fail(Errc::invalid_argument, "unknown split op '" + op + "'");
    }
    state.commands.push_back(std::move(cmd));
  }
  return state;
}

SplitState parse_split_state(std::string_view text) {
  json doc = json::parse(text.begin(), text.end(), nullptr, false);
  if (doc.is_discarded()) fail(Errc::invalid_argument, "split state is not valid JSON");
  return split_state_from_document(doc);
}

}  // namespace grove
