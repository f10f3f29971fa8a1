#include "grove/profile.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

#include "grove/error.hpp"
#include "grove/kernels.hpp"

namespace grove {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::parse_error: return "parse-error";
    case Errc::schema_violation: return "schema-violation";
    case Errc::invalid_argument: return "invalid-argument";
    case Errc::not_found: return "not-found";
    case Errc::conflict: return "conflict";
    case Errc::incompatible_ensemble: return "incompatible-ensemble";
    case Errc::duplicate_context: return "duplicate-context";
    case Errc::precondition: return "precondition-violation";
    case Errc::io_error: return "io-error";
  }
  return "unknown";
}

std::string_view to_string(Metric m) { return m == Metric::inclusive ? "inclusive" : "exclusive"; }

Metric metric_from_string(std::string_view s) {
  if (s == "inclusive") return Metric::inclusive;
  if (s == "exclusive") return Metric::exclusive;
  fail(Errc::invalid_argument, "unknown metric '" + std::string(s) + "'");
}

std::vector<Violation> validate_profile(const Profile& p) {
  std::vector<Violation> out;
  auto report = [&out](NodeId node, std::optional<Rank> rank, std::string rule, std::string msg) {
    out.push_back({node, rank, std::move(rule), std::move(msg)});
  };

  if (p.run_name.empty()) report(0, std::nullopt, "empty run name", "run_name must be non-empty");
  if (p.rank_count == 0) report(0, std::nullopt, "zero ranks", "rank_count must be positive");
  if (p.nodes.empty()) {
    report(0, std::nullopt, "no root", "profile has no nodes");
    return out;
  }

  const std::size_t n = p.nodes.size();
  std::vector<std::uint32_t> parents(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const CCTNode& node = p.nodes[i];
    if (node.id != i) {
      report(static_cast<NodeId>(i), std::nullopt, "id mismatch",
             "node at position " + std::to_string(i) + " carries id " + std::to_string(node.id));
    }
    if (node.frame.name.empty()) report(node.id, std::nullopt, "empty name", "frame name is empty");
    if (node.frame.module.empty()) report(node.id, std::nullopt, "empty module", "frame module is empty");

    if (node.metrics.size() != p.rank_count) {
      report(node.id, std::nullopt, "rank count mismatch",
             "node has " + std::to_string(node.metrics.size()) + " rank samples, expected " +
                 std::to_string(p.rank_count));
    }
    for (Rank r = 0; r < node.metrics.size(); ++r) {
      const MetricSample& s = node.metrics[r];
      if (!std::isfinite(s.inclusive) || !std::isfinite(s.exclusive) || s.inclusive < 0.0 ||
          s.exclusive < 0.0) {
        report(node.id, r, "negative or non-finite time", "times must be finite and non-negative");
      } else if (s.exclusive > s.inclusive) {
        report(node.id, r, "exclusive>inclusive",
               "exclusive " + std::to_string(s.exclusive) + " exceeds inclusive " +
                   std::to_string(s.inclusive));
      }
    }

    for (std::size_t a = 0; a < node.children.size(); ++a) {
      const NodeId c = node.children[a];
      if (c >= n) {
        report(node.id, std::nullopt, "dangling child", "child id " + std::to_string(c) + " out of range");
        continue;
      }
      if (c == 0) report(node.id, std::nullopt, "root as child", "root must not have a parent");
      ++parents[c];
      for (std::size_t b = 0; b < a; ++b) {
        const NodeId d = node.children[b];
        if (d < n && p.nodes[d].frame.same_context(p.nodes[c].frame)) {
          report(node.id, std::nullopt, "duplicate sibling context",
                 "children " + std::to_string(d) + " and " + std::to_string(c) + " share frame " +
                     p.nodes[c].frame.module + ":" + p.nodes[c].frame.name);
        }
      }
    }
  }

  for (std::size_t i = 1; i < n; ++i) {
    if (parents[i] != 1) {
      report(static_cast<NodeId>(i), std::nullopt, "not a tree",
             "node has " + std::to_string(parents[i]) + " parents");
    }
  }

  // Reachability from the root catches cycles that bypass the parent count.
  std::vector<char> seen(n, 0);
  std::vector<NodeId> stack{0};
  seen[0] = 1;
  while (!stack.empty()) {
    const NodeId id = stack.back();
    stack.pop_back();
    for (NodeId c : p.nodes[id].children) {
      if (c < n && !seen[c]) {
        seen[c] = 1;
        stack.push_back(c);
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!seen[i]) report(static_cast<NodeId>(i), std::nullopt, "unreachable", "node not reachable from root");
  }
  return out;
}

std::vector<ConsistencyWarning> consistency_report(const Profile& p, double tol) {
  if (!(tol >= 0.0)) fail(Errc::invalid_argument, "tolerance must be non-negative");
  std::vector<ConsistencyWarning> out;
  for (const CCTNode& node : p.nodes) {
    for (Rank r = 0; r < node.metrics.size(); ++r) {
      // Same accumulation order as the synthetic generator, so balanced
      // input yields an exactly zero residual.
      double expected = node.metrics[r].exclusive;
      for (NodeId c : node.children) expected += p.nodes.at(c).metrics.at(r).inclusive;
      const double residual = node.metrics[r].inclusive - expected;
      if (std::abs(residual) > tol * node.metrics[r].inclusive) {
        out.push_back({node.id, r, residual});
      }
    }
  }
  return out;
}

MetricSample aggregate_run_representative(const Profile& p, NodeId id) {
  const CCTNode& node = p.node(id);
  std::vector<double> incl(node.metrics.size());
  std::vector<double> excl(node.metrics.size());
  for (std::size_t r = 0; r < node.metrics.size(); ++r) {
    incl[r] = node.metrics[r].inclusive;
    excl[r] = node.metrics[r].exclusive;
  }
  const auto& k = kernels::active();
  const double ranks = static_cast<double>(p.rank_count);
  return {k.sum(incl) / ranks, k.sum(excl) / ranks};
}

// ---------------------------------------------------------------------------

std::uint32_t StringPool::intern(std::string_view s) {
  if (auto it = ids_.find(s); it != ids_.end()) return it->second;
  const auto id = static_cast<std::uint32_t>(strings_.size());
  strings_.emplace_back(s);
  ids_.emplace(strings_.back(), id);
  return id;
}

std::optional<std::uint32_t> StringPool::find(std::string_view s) const {
  if (auto it = ids_.find(s); it != ids_.end()) return it->second;
  return std::nullopt;
}

MetricTable MetricTable::from_profile(const Profile& p) {
  MetricTable t;
  t.runs_.push_back({p.run_name, p.params, p.rank_count});

  // (callsite, module, rank) -> summed sample
  std::map<std::tuple<std::string, std::string, Rank>, MetricSample> acc;
  for (const CCTNode& node : p.nodes) {
    for (Rank r = 0; r < node.metrics.size(); ++r) {
      MetricSample& s = acc[{node.frame.name, node.frame.module, r}];
      s.inclusive += node.metrics[r].inclusive;
      s.exclusive += node.metrics[r].exclusive;
    }
  }
  t.rows_.reserve(acc.size());
  for (const auto& [key, s] : acc) {
    const auto& [name, module, rank] = key;
    const std::uint32_t m = t.symbols_.intern(module);
    const std::uint32_t c = t.symbols_.intern(name);
    t.rows_.push_back({0, m, c, rank, s.inclusive, s.exclusive});
  }
  t.rebuild_index();
  return t;
}

MetricTable MetricTable::concatenate(std::span<const MetricTable> parts) {
  MetricTable t;
  std::size_t total = 0;
  for (const MetricTable& part : parts) total += part.rows_.size();
  t.rows_.reserve(total);
  for (const MetricTable& part : parts) {
    const auto run_offset = static_cast<std::uint32_t>(t.runs_.size());
    for (const RunInfo& run : part.runs_) {
      if (t.run_index(run.name)) fail(Errc::conflict, "duplicate run name '" + run.name + "'");
      t.runs_.push_back(run);
    }
    std::vector<std::uint32_t> remap(part.symbols_.size());
    for (std::uint32_t i = 0; i < remap.size(); ++i) remap[i] = t.symbols_.intern(part.symbols_.at(i));
    for (MetricRow row : part.rows_) {
      row.run += run_offset;
      row.module = remap[row.module];
      row.callsite = remap[row.callsite];
      t.rows_.push_back(row);
    }
  }
  t.rebuild_index();
  return t;
}

MetricTable MetricTable::from_rows(std::vector<RunInfo> runs, StringPool symbols, std::vector<MetricRow> rows) {
  MetricTable t;
  t.runs_ = std::move(runs);
  t.symbols_ = std::move(symbols);
  t.rows_ = std::move(rows);
  for (const MetricRow& row : t.rows_) {
    if (row.run >= t.runs_.size() || row.module >= t.symbols_.size() || row.callsite >= t.symbols_.size()) {
      fail(Errc::schema_violation, "metric row references unknown run or symbol");
    }
  }
  t.rebuild_index();
  return t;
}

MetricTable MetricTable::select_runs(std::span<const std::uint32_t> runs) const {
  MetricTable t;
  t.symbols_ = symbols_;
  for (std::uint32_t i = 0; i < runs.size(); ++i) {
    t.runs_.push_back(runs_.at(runs[i]));
    for (MetricRow row : rows_for_run(runs[i])) {
      row.run = i;
      t.rows_.push_back(row);
    }
  }
  t.rebuild_index();
  return t;
}

void MetricTable::rebuild_index() {
  run_ranges_.assign(runs_.size(), {0, 0});
  site_ranges_.clear();
  callsites_.clear();
  std::size_t i = 0;
  while (i < rows_.size()) {
    const std::uint32_t run = rows_[i].run;
    std::size_t j = i;
    while (j < rows_.size() && rows_[j].run == run) ++j;
    if (run_ranges_[run].second != 0) fail(Errc::schema_violation, "metric rows of a run are not contiguous");
    run_ranges_[run] = {i, j - i};
    std::size_t k = i;
    while (k < j) {
      const std::uint32_t site = rows_[k].callsite;
      callsites_.insert(site);
      std::size_t e = k;
      while (e < j && rows_[e].callsite == site) ++e;
      if (!site_ranges_.emplace(std::pair{run, site}, std::pair{k, e - k}).second) {
        fail(Errc::schema_violation, "metric rows of a call site are not contiguous");
      }
      k = e;
    }
    i = j;
  }
}

std::optional<std::uint32_t> MetricTable::run_index(std::string_view run) const {
  for (std::uint32_t i = 0; i < runs_.size(); ++i) {
    if (runs_[i].name == run) return i;
  }
  return std::nullopt;
}

std::span<const MetricRow> MetricTable::rows_for_run(std::uint32_t run) const {
  const auto [offset, count] = run_ranges_.at(run);
  return std::span<const MetricRow>(rows_).subspan(offset, count);
}

std::span<const MetricRow> MetricTable::rows_for(std::uint32_t run, std::string_view callsite) const {
  const auto id = symbols_.find(callsite);
  if (!id) return {};
  const auto it = site_ranges_.find({run, *id});
  if (it == site_ranges_.end()) return {};
  return std::span<const MetricRow>(rows_).subspan(it->second.first, it->second.second);
}

bool MetricTable::has_callsite(std::string_view callsite) const {
  const auto id = symbols_.find(callsite);
  if (!id) return false;
  return callsites_.contains(*id);
}

std::map<std::string, MetricTotals> MetricTable::module_totals(std::uint32_t run) const {
  std::map<std::string, MetricTotals> out;
  for (const MetricRow& row : rows_for_run(run)) {
    MetricTotals& t = out[symbols_.at(row.module)];
    t.inclusive += row.inclusive;
    t.exclusive += row.exclusive;
  }
  return out;
}

std::map<std::string, MetricTotals> MetricTable::callsite_totals(std::uint32_t run) const {
  std::map<std::string, MetricTotals> out;
  for (const MetricRow& row : rows_for_run(run)) {
    MetricTotals& t = out[symbols_.at(row.callsite)];
    t.inclusive += row.inclusive;
    t.exclusive += row.exclusive;
  }
  return out;
}

GraphFrame make_graph_frame(Profile p) {
  MetricTable table = MetricTable::from_profile(p);
  return {std::move(p), std::move(table)};
}

}  // namespace grove
