#include "grove/layout.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <set>

#include "grove/error.hpp"

namespace grove {

namespace {

// Longest path from the sources, by Kahn's algorithm.
std::vector<std::uint32_t> longest_path_levels(std::size_t n, const std::vector<Superedge>& edges) {
  std::vector<std::vector<std::uint32_t>> out(n);
  std::vector<std::uint32_t> indegree(n, 0);
  for (const Superedge& e : edges) {
    out[e.source].push_back(e.target);
    ++indegree[e.target];
  }
  std::vector<std::uint32_t> level(n, 0);
  std::deque<std::uint32_t> ready;
  for (std::uint32_t v = 0; v < n; ++v) {
    if (indegree[v] == 0) ready.push_back(v);
  }
  std::size_t done = 0;
  while (!ready.empty()) {
    const std::uint32_t v = ready.front();
    ready.pop_front();
    ++done;
    for (std::uint32_t w : out[v]) {
      level[w] = std::max(level[w], level[v] + 1);
      if (--indegree[w] == 0) ready.push_back(w);
    }
  }
  if (done != n) fail(Errc::precondition, "super graph has a cycle; layout needs a DAG");
  return level;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size();
  return m % 2 == 1 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
}

// Largest scale s with sum(max(s * m_i, floor)) <= avail.
double level_scale(const std::vector<double>& maxima, double floor, double avail) {
  double top = 0.0;
  for (double m : maxima) top = std::max(top, m);
  if (top <= 0.0) return INFINITY;
  auto fits = [&](double s) {
    double total = 0.0;
    for (double m : maxima) total += std::max(s * m, floor);
    return total <= avail;
  };
  double lo = 0.0;
  double hi = avail / top;
  if (fits(hi)) return hi;
  for (int i = 0; i < 200 && lo < hi; ++i) {
    const double mid = lo + (hi - lo) / 2;
    if (mid == lo || mid == hi) break;
    (fits(mid) ? lo : hi) = mid;
  }
  return lo;
}

}  // namespace

SankeyLayout compute_sankey_layout(const EnsembleSuperGraph& sg, const SankeyOptions& options) {
  if (options.bins < 1) fail(Errc::invalid_argument, "bin count must be at least 1");
  if (!(options.width > 0.0 && options.height > 0.0 && options.margin >= 0.0 && options.min_node_height > 0.0 &&
        options.node_width > 0.0 && options.vertical_gap >= 0.0)) {
    fail(Errc::invalid_argument, "layout dimensions must be positive");
  }
  const std::size_t n = sg.nodes.size();
  SankeyLayout layout;
  layout.width = options.width;
  layout.height = options.height;
  if (n == 0) return layout;

  const std::vector<std::uint32_t> level = longest_path_levels(n, sg.edges);
  const std::uint32_t depth = *std::max_element(level.begin(), level.end());

  // Initial order by label, then median sweeps down and up.
  std::vector<std::vector<std::uint32_t>> rows(depth + 1);
  for (std::uint32_t v = 0; v < n; ++v) rows[level[v]].push_back(v);
  for (auto& row : rows) {
    std::sort(row.begin(), row.end(),
              [&](std::uint32_t a, std::uint32_t b) { return sg.nodes[a].label < sg.nodes[b].label; });
  }
  std::vector<std::vector<std::uint32_t>> preds(n);
  std::vector<std::vector<std::uint32_t>> succs(n);
  for (const Superedge& e : sg.edges) {
    preds[e.target].push_back(e.source);
    succs[e.source].push_back(e.target);
  }
  std::vector<double> rel(n, 0.0);  // relative position within the node's level
  auto refresh = [&](std::uint32_t l) {
    const auto& row = rows[l];
    for (std::size_t i = 0; i < row.size(); ++i) {
      rel[row[i]] = (static_cast<double>(i) + 0.5) / static_cast<double>(row.size());
    }
  };
  for (std::uint32_t l = 0; l <= depth; ++l) refresh(l);
  auto sweep_level = [&](std::uint32_t l, const std::vector<std::vector<std::uint32_t>>& neighbors) {
    std::vector<std::pair<double, std::uint32_t>> keyed;
    for (std::uint32_t v : rows[l]) {
      std::vector<double> pos;
      for (std::uint32_t w : neighbors[v]) pos.push_back(rel[w]);
      keyed.emplace_back(pos.empty() ? rel[v] : median(std::move(pos)), v);
    }
    std::sort(keyed.begin(), keyed.end(), [&](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first < b.first;
      return sg.nodes[a.second].label < sg.nodes[b.second].label;
    });
    for (std::size_t i = 0; i < keyed.size(); ++i) rows[l][i] = keyed[i].second;
    refresh(l);
  };
  for (int pass = 0; pass < 3; ++pass) {
    for (std::uint32_t l = 1; l <= depth; ++l) sweep_level(l, preds);
    for (std::uint32_t l = depth; l-- > 0;) sweep_level(l, succs);
  }

  // Heights: one proportional scale shared by every level, floored.
  const double floor = options.min_node_height;
  const double gap = options.vertical_gap;
  double needed = 0.0;
  for (const auto& row : rows) {
    const double count = static_cast<double>(row.size());
    needed = std::max(needed, count * floor + (count - 1) * gap);
  }
  layout.height = std::max(options.height, needed + 2 * options.margin);
  double scale = INFINITY;
  for (const auto& row : rows) {
    std::vector<double> maxima;
    for (std::uint32_t v : row) maxima.push_back(sg.nodes[v].max_inclusive);
    const double avail = layout.height - 2 * options.margin - static_cast<double>(row.size() - 1) * gap;
    scale = std::min(scale, level_scale(maxima, floor, avail));
  }
  if (!std::isfinite(scale)) scale = 0.0;

  const double span = options.width - 2 * options.margin - options.node_width;
  layout.nodes.resize(n);
  for (std::uint32_t l = 0; l <= depth; ++l) {
    double y = options.margin;
    for (std::uint32_t i = 0; i < rows[l].size(); ++i) {
      const std::uint32_t v = rows[l][i];
      const Supernode& s = sg.nodes[v];
      SankeyNode& out = layout.nodes[v];
      out.id = v;
      out.label = s.label;
      out.module = s.module;
      out.entry_functions = s.entry_functions;
      out.level = l;
      out.order = i;
      out.x = options.margin + (depth == 0 ? 0.0 : span * static_cast<double>(l) / static_cast<double>(depth));
      out.y = y;
      out.width = options.node_width;
      out.height = std::max(scale * s.max_inclusive, floor);
      out.max_inclusive = s.max_inclusive;
      out.border_value = s.max_exclusive;
      out.gradient = ensemble_gradient(s.metrics, sg.run_names, options.gradient_metric, options.bins);
      y += out.height + gap;
    }
  }

  // Edge ends scaled by each node's total outgoing / incoming max flow,
  // stacked in the vertical order of the opposite endpoint.
  std::vector<double> total_out(n, 0.0);
  std::vector<double> total_in(n, 0.0);
  std::vector<std::vector<std::uint32_t>> out_edges(n);
  std::vector<std::vector<std::uint32_t>> in_edges(n);
  for (std::uint32_t i = 0; i < sg.edges.size(); ++i) {
    const Superedge& e = sg.edges[i];
    total_out[e.source] += e.max_flow;
    total_in[e.target] += e.max_flow;
    out_edges[e.source].push_back(i);
    in_edges[e.target].push_back(i);
  }
  layout.edges.resize(sg.edges.size());
  for (std::uint32_t i = 0; i < sg.edges.size(); ++i) {
    const Superedge& e = sg.edges[i];
    SankeyEdge& out = layout.edges[i];
    out.source = e.source;
    out.target = e.target;
    out.max_flow = e.max_flow;
    const double hs = layout.nodes[e.source].height;
    const double ht = layout.nodes[e.target].height;
    out.source_end_thickness = total_out[e.source] > 0.0 ? hs * (e.max_flow / total_out[e.source]) : 0.0;
    out.target_end_thickness = total_in[e.target] > 0.0 ? ht * (e.max_flow / total_in[e.target]) : 0.0;
  }
  auto by_position = [&](std::uint32_t a, std::uint32_t b) {
    const SankeyNode& na = layout.nodes[a];
    const SankeyNode& nb = layout.nodes[b];
    if (na.y != nb.y) return na.y < nb.y;
    if (na.level != nb.level) return na.level < nb.level;
    return na.label < nb.label;
  };
  for (std::uint32_t v = 0; v < n; ++v) {
    std::sort(out_edges[v].begin(), out_edges[v].end(),
              [&](std::uint32_t a, std::uint32_t b) { return by_position(sg.edges[a].target, sg.edges[b].target); });
    std::sort(in_edges[v].begin(), in_edges[v].end(),
              [&](std::uint32_t a, std::uint32_t b) { return by_position(sg.edges[a].source, sg.edges[b].source); });
    double offset = 0.0;
    for (std::uint32_t ei : out_edges[v]) {
      layout.edges[ei].source_y_offset = offset;
      offset += layout.edges[ei].source_end_thickness;
    }
    offset = 0.0;
    for (std::uint32_t ei : in_edges[v]) {
      layout.edges[ei].target_y_offset = offset;
      offset += layout.edges[ei].target_end_thickness;
    }
  }
  for (const Superedge& e : sg.cycle_edges) {
    layout.cycle_edges.push_back({e.source, e.target, e.max_flow, 0.0, 0.0, 0.0, 0.0});
  }
  return layout;
}

// ---------------------------------------------------------------------------

namespace {

struct Grouping {
  std::vector<std::uint32_t> group_of;  // per call-graph node
  std::vector<std::string> labels;
  std::vector<std::string> modules;
};

std::optional<std::uint32_t> find_group(const Grouping& g, std::string_view label) {
  std::vector<char> used(g.labels.size(), 0);
  for (std::uint32_t grp : g.group_of) used[grp] = 1;
  for (std::uint32_t i = 0; i < g.labels.size(); ++i) {
    if (used[i] && g.labels[i] == label) return i;
  }
  return std::nullopt;
}

bool label_taken(const Grouping& g, std::string_view label) { return find_group(g, label).has_value(); }

struct Claim {
  std::vector<std::uint32_t> owner;   // entry position per node, UINT32_MAX outside the group
  std::vector<std::uint32_t> parent;  // BFS parent, UINT32_MAX at entries
  std::vector<std::uint32_t> entries; // sorted by name
};

// Simultaneous breadth-first search inside one group from all of its
// entries; each call site goes to the entry that reaches it first, ties to
// the entry earlier by name.
Claim claim_from_entries(const EnsembleCallGraph& cg, const Grouping& g, std::uint32_t grp) {
  const std::size_t n = cg.nodes.size();
  Claim c{std::vector<std::uint32_t>(n, UINT32_MAX), std::vector<std::uint32_t>(n, UINT32_MAX), {}};
  std::vector<std::vector<std::uint32_t>> out(n);
  std::vector<char> entry(n, 0);
  if (g.group_of[cg.root] == grp) entry[cg.root] = 1;
  for (const CallGraphEdge& e : cg.edges) {
    if (g.group_of[e.target] != grp) continue;
    if (g.group_of[e.source] == grp) {
      out[e.source].push_back(e.target);
    } else {
      entry[e.target] = 1;
    }
  }
  for (auto& list : out) {
    std::sort(list.begin(), list.end(),
              [&](std::uint32_t a, std::uint32_t b) { return cg.nodes[a].name < cg.nodes[b].name; });
  }
  for (std::uint32_t v = 0; v < n; ++v) {
    if (entry[v]) c.entries.push_back(v);
  }
  std::sort(c.entries.begin(), c.entries.end(),
            [&](std::uint32_t a, std::uint32_t b) { return cg.nodes[a].name < cg.nodes[b].name; });
  std::deque<std::uint32_t> queue;
  for (std::uint32_t i = 0; i < c.entries.size(); ++i) {
    c.owner[c.entries[i]] = i;
    queue.push_back(c.entries[i]);
  }
  while (!queue.empty()) {
    const std::uint32_t v = queue.front();
    queue.pop_front();
    for (std::uint32_t w : out[v]) {
      if (c.owner[w] != UINT32_MAX) continue;
      c.owner[w] = c.owner[v];
      c.parent[w] = v;
      queue.push_back(w);
    }
  }
  return c;
}

std::string command_text(const SplitCommand& c) {
  return c.kind == SplitCommand::Kind::split_by_entry_functions ? "split '" + c.group + "'"
                                                                 : "reveal '" + c.callsite + "' in '" + c.group + "'";
}

}  // namespace

EnsembleSuperGraph apply_splits(const EnsembleGraphFrame& frame, const SplitState& state) {
  const EnsembleCallGraph& cg = frame.callgraph;
  if (state.commands.empty()) return frame.supergraph;

  Grouping g;
  std::map<std::string, std::uint32_t> ids;
  for (const CallGraphNode& node : cg.nodes) {
    auto [it, inserted] = ids.try_emplace(node.module, static_cast<std::uint32_t>(g.labels.size()));
    if (inserted) {
      g.labels.push_back(node.module);
      g.modules.push_back(node.module);
    }
    g.group_of.push_back(it->second);
  }

  std::vector<SplitCommand> applied;
  for (const SplitCommand& cmd : state.commands) {
    if (std::find(applied.begin(), applied.end(), cmd) != applied.end()) continue;
    const auto grp = find_group(g, cmd.group);
    if (!grp) fail(Errc::not_found, "cannot " + command_text(cmd) + ": no such supernode");
    const std::string module = g.modules[*grp];
    const Claim claim = claim_from_entries(cg, g, *grp);

    if (cmd.kind == SplitCommand::Kind::split_by_entry_functions) {
      std::vector<std::uint32_t> new_group(claim.entries.size());
      for (std::uint32_t i = 0; i < claim.entries.size(); ++i) {
        new_group[i] = static_cast<std::uint32_t>(g.labels.size());
        g.labels.push_back(module + ":" + cg.nodes[claim.entries[i]].name);
        g.modules.push_back(module);
      }
      for (std::uint32_t v = 0; v < cg.nodes.size(); ++v) {
        if (g.group_of[v] == *grp) g.group_of[v] = new_group[claim.owner[v]];
      }
    } else {
      const auto target = cg.find(cmd.callsite);
      if (!target || g.group_of[*target] != *grp) {
        fail(Errc::not_found, "cannot " + command_text(cmd) + ": no such call site in that supernode");
      }
      std::vector<std::uint32_t> chain;
      for (std::uint32_t v = *target; v != UINT32_MAX; v = claim.parent[v]) chain.push_back(v);
      std::set<std::string> revealed;
      for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
        const std::string label = module + ":" + cg.nodes[*it].name;
        revealed.insert(label);
        g.group_of[*it] = static_cast<std::uint32_t>(g.labels.size());
        g.labels.push_back(label);
        g.modules.push_back(module);
      }
      // The remainder keeps its label unless a revealed call site took it.
      if (revealed.count(g.labels[*grp]) != 0) {
        std::string label = g.labels[*grp] + "/rest";
        while (label_taken(g, label)) label += "/rest";
        g.labels[*grp] = label;
      }
    }
    applied.push_back(cmd);
  }
  return build_supergraph(cg, g.group_of, g.labels, g.modules);
}

// ---------------------------------------------------------------------------

IcicleTree supernode_hierarchy(const EnsembleGraphFrame& frame, const EnsembleSuperGraph& sg, std::string_view label,
                               std::optional<std::string_view> target, std::uint32_t bins, Metric metric) {
  const auto sid = sg.find(label);
  if (!sid) fail(Errc::not_found, "unknown supernode '" + std::string(label) + "'");
  std::optional<std::uint32_t> target_slot;
  if (target) {
    target_slot = frame.run_index(*target);
    if (!target_slot) fail(Errc::not_found, "unknown run '" + std::string(*target) + "'");
  }
  const Supernode& super = sg.nodes[*sid];
  const EnsembleCallGraph full = cct_to_callgraph(frame.cct);

  // Member set: the whole module for an unsplit group, else the listed members.
  const bool whole_module = std::count_if(sg.nodes.begin(), sg.nodes.end(), [&](const Supernode& s) {
                              return s.module == super.module;
                            }) == 1 && super.label == super.module;
  std::vector<char> member(full.nodes.size(), 0);
  for (std::uint32_t v = 0; v < full.nodes.size(); ++v) {
    member[v] = whole_module ? full.nodes[v].module == super.module
                             : std::binary_search(super.members.begin(), super.members.end(), full.nodes[v].name);
  }

  std::vector<std::vector<std::uint32_t>> out(full.nodes.size());
  std::vector<char> entry(full.nodes.size(), 0);
  if (member[full.root]) entry[full.root] = 1;
  for (const CallGraphEdge& e : full.edges) {
    if (!member[e.target]) continue;
    if (member[e.source]) {
      out[e.source].push_back(e.target);
    } else {
      entry[e.target] = 1;
    }
  }
  auto by_name = [&](std::uint32_t a, std::uint32_t b) { return full.nodes[a].name < full.nodes[b].name; };
  for (auto& list : out) std::sort(list.begin(), list.end(), by_name);

  IcicleTree tree;
  tree.label = super.label;
  if (target) tree.target = std::string(*target);

  std::vector<std::uint32_t> roots;
  for (std::uint32_t v = 0; v < full.nodes.size(); ++v) {
    if (entry[v]) roots.push_back(v);
  }
  std::sort(roots.begin(), roots.end(), by_name);

  auto extents = [&](const std::vector<std::uint32_t>& kids, double x0, double x1) {
    std::vector<std::pair<double, double>> spans;
    double total = 0.0;
    for (std::uint32_t k : kids) total += full.nodes[k].metrics.max(Metric::inclusive);
    double cursor = x0;
    for (std::size_t i = 0; i < kids.size(); ++i) {
      const double share = total > 0.0 ? full.nodes[kids[i]].metrics.max(Metric::inclusive) / total
                                       : 1.0 / static_cast<double>(kids.size());
      const double end = i + 1 == kids.size() ? x1 : cursor + (x1 - x0) * share;
      spans.emplace_back(cursor, end);
      cursor = end;
    }
    return spans;
  };

  std::vector<char> visited(full.nodes.size(), 0);
  std::vector<std::uint32_t> source;  // call-graph node per tree node
  auto place = [&](std::uint32_t v, std::optional<std::uint32_t> parent, std::uint32_t depth, double x0, double x1) {
    visited[v] = 1;
    const CallGraphNode& cn = full.nodes[v];
    IcicleNode node;
    node.callsite = cn.name;
    node.parent = parent;
    node.depth = depth;
    node.x0 = x0;
    node.x1 = x1;
    node.max_inclusive = cn.metrics.max(Metric::inclusive);
    node.border_value = cn.metrics.max(Metric::exclusive);
    for (std::size_t r = 0; r < full.run_names.size(); ++r) {
      if (cn.metrics.present(r)) node.present_in.push_back(full.run_names[r]);
    }
    node.absent = target_slot && !cn.metrics.present(*target_slot);
    if (!node.absent) node.gradient = ensemble_gradient(cn.metrics, full.run_names, metric, bins);
    tree.nodes.push_back(std::move(node));
    source.push_back(v);
  };

  for (std::uint32_t r : roots) visited[r] = 1;
  const auto root_spans = extents(roots, 0.0, 1.0);
  for (std::size_t i = 0; i < roots.size(); ++i) {
    place(roots[i], std::nullopt, 0, root_spans[i].first, root_spans[i].second);
  }
  for (std::size_t t = 0; t < tree.nodes.size(); ++t) {
    std::vector<std::uint32_t> kids;
    for (std::uint32_t w : out[source[t]]) {
      if (!visited[w]) {
        visited[w] = 1;
        kids.push_back(w);
      }
    }
    const auto spans = extents(kids, tree.nodes[t].x0, tree.nodes[t].x1);
    const std::uint32_t depth = tree.nodes[t].depth + 1;
    for (std::size_t i = 0; i < kids.size(); ++i) {
      place(kids[i], static_cast<std::uint32_t>(t), depth, spans[i].first, spans[i].second);
    }
  }
  return tree;
}

}  // namespace grove
