#include "grove/ensemble.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <deque>
#include <set>
#include <unordered_map>

#include "grove/error.hpp"

namespace grove {

// ---------------------------------------------------------------------------
// MetricVector

bool MetricVector::present(std::size_t run) const {
  return !std::isnan(inclusive_.at(run)) || !std::isnan(exclusive_.at(run));
}

std::optional<MetricSample> MetricVector::at(std::size_t run) const {
  if (!present(run)) return std::nullopt;
  const double incl = inclusive_[run];
  const double excl = exclusive_[run];
  return MetricSample{std::isnan(incl) ? 0.0 : incl, std::isnan(excl) ? 0.0 : excl};
}

std::optional<double> MetricVector::value(std::size_t run, Metric m) const {
  const double v = values(m)[run];
  if (std::isnan(v)) return std::nullopt;
  return v;
}

void MetricVector::set(std::size_t run, MetricSample s) {
  inclusive_.at(run) = s.inclusive;
  exclusive_.at(run) = s.exclusive;
}

double MetricVector::max(Metric m) const { return max_present(values(m)); }

std::size_t MetricVector::present_count() const {
  std::size_t n = 0;
  for (std::size_t r = 0; r < size(); ++r) n += present(r) ? 1 : 0;
  return n;
}

MetricVector& MetricVector::operator+=(const MetricVector& other) {
  if (other.size() != size()) fail(Errc::precondition, "metric vector length mismatch");
  const auto& k = kernels::active();
  k.accumulate_present(inclusive_, other.inclusive_);
  k.accumulate_present(exclusive_, other.exclusive_);
  return *this;
}

MetricVector MetricVector::select(std::span<const std::uint32_t> runs) const {
  MetricVector out(runs.size());
  for (std::size_t i = 0; i < runs.size(); ++i) {
    out.inclusive_[i] = inclusive_.at(runs[i]);
    out.exclusive_[i] = exclusive_.at(runs[i]);
  }
  return out;
}

bool same_values(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::isnan(a[i]) != std::isnan(b[i])) return false;
    if (!std::isnan(a[i]) && std::bit_cast<std::uint64_t>(a[i]) != std::bit_cast<std::uint64_t>(b[i])) return false;
  }
  return true;
}

bool operator==(const MetricVector& a, const MetricVector& b) {
  return same_values(a.inclusive_, b.inclusive_) && same_values(a.exclusive_, b.exclusive_);
}

double max_present(std::span<const double> v) {
  const kernels::Extent e = kernels::active().extent(v);
  return e.count == 0 ? 0.0 : e.max;
}

void accumulate(FlowVector& dst, std::span<const double> src) {
  if (src.size() != dst.size()) fail(Errc::precondition, "flow vector length mismatch");
  kernels::active().accumulate_present(dst, src);
}

// ---------------------------------------------------------------------------
// EnsembleCCT

namespace {

std::string frame_key(const Frame& f) { return f.module + '\x1f' + f.name; }

}  // namespace

EnsembleCCT::EnsembleCCT(std::vector<std::string> run_names, std::vector<EnsembleNode> nodes)
    : run_names_(std::move(run_names)), nodes_(std::move(nodes)) {
  std::vector<std::string> keys(nodes_.size());
  std::vector<std::string> name_keys(nodes_.size());
  for (std::uint32_t i = 0; i < nodes_.size(); ++i) {
    const EnsembleNode& n = nodes_[i];
    if (n.metrics.size() != run_names_.size()) fail(Errc::schema_violation, "metric vector length mismatch");
    if (n.parent) {
      if (*n.parent >= i) fail(Errc::schema_violation, "ensemble CCT parent must precede child");
      keys[i] = keys[*n.parent] + '\x1e' + frame_key(n.frame);
      name_keys[i] = name_keys[*n.parent] + '\x1e' + n.frame.name;
    } else {
      if (i != 0) fail(Errc::schema_violation, "ensemble CCT has more than one root");
      keys[i] = frame_key(n.frame);
      name_keys[i] = n.frame.name;
    }
    if (!path_index_.emplace(keys[i], i).second) fail(Errc::schema_violation, "duplicate ensemble context");
    name_index_.emplace(name_keys[i], i);
  }
}

std::optional<std::uint32_t> EnsembleCCT::find(std::span<const Frame> path) const {
  std::string key;
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (i) key += '\x1e';
    key += frame_key(path[i]);
  }
  if (auto it = path_index_.find(key); it != path_index_.end()) return it->second;
  return std::nullopt;
}

std::optional<std::uint32_t> EnsembleCCT::find_by_names(std::span<const std::string> names) const {
  std::string key;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i) key += '\x1e';
    key += names[i];
  }
  if (auto it = name_index_.find(key); it != name_index_.end()) return it->second;
  return std::nullopt;
}

std::vector<Frame> EnsembleCCT::path_of(std::uint32_t id) const {
  std::vector<Frame> path;
  for (std::optional<std::uint32_t> v = id; v; v = nodes_.at(*v).parent) path.push_back(nodes_[*v].frame);
  std::reverse(path.begin(), path.end());
  return path;
}

std::optional<std::uint32_t> EnsembleCallGraph::find(std::string_view name) const {
  for (std::uint32_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].name == name) return i;
  }
  return std::nullopt;
}

std::optional<std::uint32_t> EnsembleSuperGraph::find(std::string_view label) const {
  for (std::uint32_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].label == label) return i;
  }
  return std::nullopt;
}

std::optional<std::uint32_t> EnsembleSuperGraph::group_of(std::string_view callsite) const {
  for (std::uint32_t i = 0; i < nodes.size(); ++i) {
    if (std::binary_search(nodes[i].members.begin(), nodes[i].members.end(), callsite)) return i;
  }
  return std::nullopt;
}

std::optional<std::uint32_t> EnsembleGraphFrame::run_index(std::string_view run) const {
  const auto& names = run_names();
  for (std::uint32_t i = 0; i < names.size(); ++i) {
    if (names[i] == run) return i;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Pipeline stages

namespace {

void require_distinct_runs(std::span<const Profile> profiles) {
  if (profiles.empty()) fail(Errc::invalid_argument, "ensemble needs at least one profile");
  std::set<std::string_view> names;
  for (const Profile& p : profiles) {
    if (!names.insert(p.run_name).second) fail(Errc::conflict, "duplicate run name '" + p.run_name + "'");
  }
}

}  // namespace

MetricTable unify_metric_tables(std::span<const Profile> profiles) {
  require_distinct_runs(profiles);
  std::vector<MetricTable> parts;
  parts.reserve(profiles.size());
  for (const Profile& p : profiles) parts.push_back(MetricTable::from_profile(p));
  return MetricTable::concatenate(parts);
}

EnsembleCCT union_ccts(std::span<const Profile> profiles) {
  require_distinct_runs(profiles);
  const std::size_t n = profiles.size();
  const std::string& root_name = profiles.front().root().frame.name;
  for (const Profile& p : profiles) {
    if (p.nodes.empty()) fail(Errc::invalid_argument, "profile '" + p.run_name + "' is empty");
    if (p.root().frame.name != root_name) {
      fail(Errc::incompatible_ensemble, "run '" + p.run_name + "' has root '" + p.root().frame.name +
                                            "', expected '" + root_name + "'");
    }
  }

  std::vector<EnsembleNode> nodes;
  std::vector<std::unordered_map<std::string, std::uint32_t>> child_index;
  nodes.push_back({profiles.front().root().frame, std::nullopt, {}, MetricVector(n)});
  child_index.emplace_back();

  std::vector<std::string> run_names;
  for (std::size_t run = 0; run < n; ++run) {
    const Profile& p = profiles[run];
    run_names.push_back(p.run_name);
    std::vector<std::uint32_t> mapped(p.nodes.size(), 0);
    // Profile ids are preorder, so parents are mapped before children.
    for (const CCTNode& node : p.nodes) {
      std::uint32_t eid = 0;
      if (node.id != 0) {
        eid = mapped[node.id];
      }
      nodes[eid].metrics.set(run, aggregate_run_representative(p, node.id));
      for (NodeId c : node.children) {
        const Frame& f = p.nodes[c].frame;
        auto [it, inserted] = child_index[eid].try_emplace(frame_key(f), static_cast<std::uint32_t>(nodes.size()));
        if (inserted) {
          nodes.push_back({f, eid, {}, MetricVector(n)});
          nodes[eid].children.push_back(it->second);
          child_index.emplace_back();
        }
        mapped[c] = it->second;
      }
    }
  }
  return EnsembleCCT(std::move(run_names), std::move(nodes));
}

EnsembleCallGraph cct_to_callgraph(const EnsembleCCT& cct) {
  EnsembleCallGraph g;
  g.run_names = cct.run_names();
  const std::size_t n = cct.run_count();
  std::map<std::string, std::uint32_t> by_name;
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> edge_index;

  std::vector<std::uint32_t> node_of(cct.nodes().size());
  for (std::uint32_t i = 0; i < cct.nodes().size(); ++i) {
    const EnsembleNode& en = cct.node(i);
    auto [it, inserted] = by_name.try_emplace(en.frame.name, static_cast<std::uint32_t>(g.nodes.size()));
    if (inserted) g.nodes.push_back({en.frame.name, en.frame.module, MetricVector(n)});
    node_of[i] = it->second;
    g.nodes[it->second].metrics += en.metrics;
    if (en.parent) {
      const std::pair key{node_of[*en.parent], it->second};
      auto [eit, fresh] = edge_index.try_emplace(key, static_cast<std::uint32_t>(g.edges.size()));
      if (fresh) g.edges.push_back({key.first, key.second, FlowVector(n, kernels::kAbsent)});
      accumulate(g.edges[eit->second].flow, en.metrics.values(Metric::inclusive));
    }
  }
  g.root = 0;
  return g;
}

EnsembleCallGraph filter_graph(const EnsembleCallGraph& g, Metric metric, double fraction) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) fail(Errc::invalid_argument, "filter fraction must be in [0, 1]");
  if (g.nodes.empty()) return g;
  const double threshold = fraction * g.nodes[g.root].metrics.max(Metric::inclusive);
  std::vector<char> keep(g.nodes.size(), 0);
  for (std::uint32_t i = 0; i < g.nodes.size(); ++i) {
    keep[i] = i == g.root || g.nodes[i].metrics.max(metric) >= threshold;
  }

  std::vector<std::vector<std::uint32_t>> out(g.nodes.size());
  for (std::uint32_t e = 0; e < g.edges.size(); ++e) {
    const CallGraphEdge& edge = g.edges[e];
    if (keep[edge.source] && keep[edge.target]) out[edge.source].push_back(edge.target);
  }
  std::vector<char> reached(g.nodes.size(), 0);
  std::deque<std::uint32_t> queue{g.root};
  reached[g.root] = 1;
  while (!queue.empty()) {
    const std::uint32_t v = queue.front();
    queue.pop_front();
    for (std::uint32_t w : out[v]) {
      if (!reached[w]) {
        reached[w] = 1;
        queue.push_back(w);
      }
    }
  }

  EnsembleCallGraph f;
  f.run_names = g.run_names;
  std::vector<std::uint32_t> remap(g.nodes.size(), UINT32_MAX);
  for (std::uint32_t i = 0; i < g.nodes.size(); ++i) {
    if (!reached[i]) continue;
    remap[i] = static_cast<std::uint32_t>(f.nodes.size());
    f.nodes.push_back(g.nodes[i]);
  }
  for (const CallGraphEdge& e : g.edges) {
    if (reached[e.source] && reached[e.target]) f.edges.push_back({remap[e.source], remap[e.target], e.flow});
  }
  f.root = remap[g.root];
  return f;
}

EnsembleSuperGraph build_supergraph(const EnsembleCallGraph& g, std::span<const std::uint32_t> group_of_node,
                                    std::span<const std::string> labels, std::span<const std::string> modules) {
  if (g.nodes.empty()) fail(Errc::invalid_argument, "cannot group an empty call graph");
  if (group_of_node.size() != g.nodes.size() || labels.size() != modules.size()) {
    fail(Errc::precondition, "group assignment does not cover the call graph");
  }
  const std::size_t n = g.run_names.size();
  const std::size_t groups = labels.size();

  std::vector<char> is_entry(g.nodes.size(), 0);
  is_entry[g.root] = 1;
  for (const CallGraphEdge& e : g.edges) {
    if (group_of_node[e.source] != group_of_node[e.target]) is_entry[e.target] = 1;
  }

  // Supernodes ordered by first appearance in call-graph order (root first).
  std::vector<std::uint32_t> order_of(groups, UINT32_MAX);
  EnsembleSuperGraph sg;
  sg.run_names = g.run_names;
  for (std::uint32_t i = 0; i < g.nodes.size(); ++i) {
    const std::uint32_t grp = group_of_node[i];
    if (grp >= groups) fail(Errc::precondition, "call site assigned to unknown group");
    if (order_of[grp] == UINT32_MAX) {
      order_of[grp] = static_cast<std::uint32_t>(sg.nodes.size());
      Supernode s;
      s.label = labels[grp];
      s.module = modules[grp];
      s.metrics = MetricVector(n);
      sg.nodes.push_back(std::move(s));
    }
  }
  // Sum exclusive over members and inclusive over entry functions.
  std::vector<FlowVector> incl(sg.nodes.size(), FlowVector(n, kernels::kAbsent));
  std::vector<FlowVector> excl(sg.nodes.size(), FlowVector(n, kernels::kAbsent));
  for (std::uint32_t i = 0; i < g.nodes.size(); ++i) {
    const std::uint32_t s = order_of[group_of_node[i]];
    sg.nodes[s].members.push_back(g.nodes[i].name);
    accumulate(excl[s], g.nodes[i].metrics.values(Metric::exclusive));
    if (is_entry[i]) {
      sg.nodes[s].entry_functions.push_back(g.nodes[i].name);
      accumulate(incl[s], g.nodes[i].metrics.values(Metric::inclusive));
    }
  }
  for (std::uint32_t s = 0; s < sg.nodes.size(); ++s) {
    Supernode& node = sg.nodes[s];
    std::sort(node.members.begin(), node.members.end());
    std::sort(node.entry_functions.begin(), node.entry_functions.end());
    std::copy(incl[s].begin(), incl[s].end(), node.metrics.values(Metric::inclusive).begin());
    std::copy(excl[s].begin(), excl[s].end(), node.metrics.values(Metric::exclusive).begin());
    node.max_inclusive = node.metrics.max(Metric::inclusive);
    node.max_exclusive = node.metrics.max(Metric::exclusive);
  }
  sg.root = order_of[group_of_node[g.root]];

  std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> edge_index;
  std::vector<Superedge> all_edges;
  for (const CallGraphEdge& e : g.edges) {
    const std::uint32_t a = order_of[group_of_node[e.source]];
    const std::uint32_t b = order_of[group_of_node[e.target]];
    if (a == b) continue;
    auto [it, fresh] = edge_index.try_emplace({a, b}, static_cast<std::uint32_t>(all_edges.size()));
    if (fresh) all_edges.push_back({a, b, FlowVector(n, kernels::kAbsent), 0.0});
    accumulate(all_edges[it->second].flow, e.flow);
  }
  for (Superedge& e : all_edges) e.max_flow = max_present(e.flow);

  // Break cycles: depth-first from the root, heaviest edges first; an edge
  // reaching a node still on the stack closes a cycle and is set aside.
  std::vector<std::vector<std::uint32_t>> out(sg.nodes.size());
  for (std::uint32_t i = 0; i < all_edges.size(); ++i) out[all_edges[i].source].push_back(i);
  for (auto& list : out) {
    std::sort(list.begin(), list.end(), [&](std::uint32_t x, std::uint32_t y) {
      const Superedge& ex = all_edges[x];
      const Superedge& ey = all_edges[y];
      if (ex.max_flow != ey.max_flow) return ex.max_flow > ey.max_flow;
      return sg.nodes[ex.target].label < sg.nodes[ey.target].label;
    });
  }
  enum : char { white, gray, black };
  std::vector<char> color(sg.nodes.size(), white);
  std::vector<char> back_edge(all_edges.size(), 0);
  auto dfs_from = [&](std::uint32_t start) {
    std::vector<std::pair<std::uint32_t, std::size_t>> stack{{start, 0}};
    color[start] = gray;
    while (!stack.empty()) {
      auto& [v, next] = stack.back();
      if (next == out[v].size()) {
        color[v] = black;
        stack.pop_back();
        continue;
      }
      const std::uint32_t ei = out[v][next++];
      const std::uint32_t w = all_edges[ei].target;
      if (color[w] == gray) {
        back_edge[ei] = 1;
      } else if (color[w] == white) {
        color[w] = gray;
        stack.emplace_back(w, 0);
      }
    }
  };
  dfs_from(sg.root);
  for (std::uint32_t s = 0; s < sg.nodes.size(); ++s) {
    if (color[s] == white) dfs_from(s);
  }
  for (std::uint32_t i = 0; i < all_edges.size(); ++i) {
    (back_edge[i] ? sg.cycle_edges : sg.edges).push_back(std::move(all_edges[i]));
  }
  return sg;
}

EnsembleSuperGraph group_by_module(const EnsembleCallGraph& g) {
  if (g.nodes.empty()) fail(Errc::invalid_argument, "cannot group an empty call graph");
  std::map<std::string, std::uint32_t> ids;
  std::vector<std::string> labels;
  std::vector<std::uint32_t> group(g.nodes.size());
  for (std::uint32_t i = 0; i < g.nodes.size(); ++i) {
    const std::string& m = g.nodes[i].module;
    if (m.empty()) fail(Errc::precondition, "call site '" + g.nodes[i].name + "' has no module");
    auto [it, inserted] = ids.try_emplace(m, static_cast<std::uint32_t>(labels.size()));
    if (inserted) labels.push_back(m);
    group[i] = it->second;
  }
  return build_supergraph(g, group, labels, labels);
}

EnsembleGraphFrame build_ensemble(std::span<const Profile> profiles, const BuildOptions& options) {
  EnsembleGraphFrame f;
  f.options = options;
  f.table = unify_metric_tables(profiles);
  f.cct = union_ccts(profiles);
  f.callgraph = filter_graph(cct_to_callgraph(f.cct), options.filter_metric, options.filter_fraction);
  f.supergraph = group_by_module(f.callgraph);
  return f;
}

EnsembleGraphFrame subset_ensemble(const EnsembleGraphFrame& frame, std::span<const std::string> runs) {
  if (runs.empty()) fail(Errc::invalid_argument, "subset must name at least one run");
  std::vector<std::uint32_t> idx;
  std::set<std::string_view> seen;
  for (const std::string& r : runs) {
    const auto i = frame.run_index(r);
    if (!i) fail(Errc::not_found, "unknown run '" + r + "'");
    if (!seen.insert(r).second) fail(Errc::invalid_argument, "run '" + r + "' listed twice");
    idx.push_back(*i);
  }

  std::vector<EnsembleNode> nodes;
  std::vector<std::uint32_t> remap(frame.cct.nodes().size(), UINT32_MAX);
  for (std::uint32_t i = 0; i < frame.cct.nodes().size(); ++i) {
    const EnsembleNode& src = frame.cct.node(i);
    MetricVector mv = src.metrics.select(idx);
    if (mv.present_count() == 0 && i != 0) continue;
    if (src.parent && remap[*src.parent] == UINT32_MAX) continue;
    remap[i] = static_cast<std::uint32_t>(nodes.size());
    EnsembleNode node{src.frame, std::nullopt, {}, std::move(mv)};
    if (src.parent) {
      node.parent = remap[*src.parent];
      nodes[*node.parent].children.push_back(remap[i]);
    }
    nodes.push_back(std::move(node));
  }

  EnsembleGraphFrame f;
  f.options = frame.options;
  f.table = frame.table.select_runs(idx);
  f.cct = EnsembleCCT(std::vector<std::string>(runs.begin(), runs.end()), std::move(nodes));
  f.callgraph = filter_graph(cct_to_callgraph(f.cct), f.options.filter_metric, f.options.filter_fraction);
  f.supergraph = group_by_module(f.callgraph);
  return f;
}

}  // namespace grove
