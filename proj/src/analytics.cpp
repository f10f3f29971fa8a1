#include "grove/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "grove/error.hpp"
#include "grove/kernels.hpp"

namespace grove {

namespace {

std::uint32_t settle_bin(const std::vector<double>& edges, std::uint32_t i, double v) {
  const auto bins = static_cast<std::uint32_t>(edges.size() - 1);
  while (i > 0 && v < edges[i]) --i;
  while (i + 1 < bins && v >= edges[i + 1]) ++i;
  return i;
}

}  // namespace

std::size_t Histogram::total() const { return std::accumulate(counts.begin(), counts.end(), std::size_t{0}); }

std::vector<double> Histogram::normalized_heights() const {
  std::vector<double> out(counts.size(), 0.0);
  const std::uint32_t top = counts.empty() ? 0 : *std::max_element(counts.begin(), counts.end());
  if (top == 0) return out;
  for (std::size_t i = 0; i < counts.size(); ++i) out[i] = static_cast<double>(counts[i]) / top;
  return out;
}

std::optional<std::uint32_t> Histogram::bin_of(double v) const {
  if (counts.empty() || std::isnan(v) || v < bin_edges.front() || v > bin_edges.back()) return std::nullopt;
  if (counts.size() == 1) return 0;
  const double width = (bin_edges.back() - bin_edges.front()) / static_cast<double>(counts.size());
  std::uint32_t i = 0;
  kernels::active().bin_index(std::span<const double>(&v, 1), bin_edges.front(), width,
                              static_cast<std::uint32_t>(counts.size()), std::span<std::uint32_t>(&i, 1));
  return settle_bin(bin_edges, i, v);
}

Histogram make_histogram(std::span<const double> values, std::span<const std::string> labels, std::uint32_t bins) {
  if (bins < 1) fail(Errc::invalid_argument, "bin count must be at least 1");
  if (labels.size() != values.size()) fail(Errc::precondition, "histogram labels do not match values");
  Histogram h;
  if (values.empty()) return h;

  const auto& k = kernels::active();
  const kernels::Extent ext = k.extent(values);
  if (ext.count != values.size()) fail(Errc::precondition, "histogram input contains absent values");

  if (ext.min == ext.max) {
    h.bin_edges = {ext.min, ext.max};
    h.counts = {static_cast<std::uint32_t>(values.size())};
    h.members = {std::vector<std::string>(labels.begin(), labels.end())};
    return h;
  }

  const double width = (ext.max - ext.min) / static_cast<double>(bins);
  h.bin_edges.resize(bins + 1);
  for (std::uint32_t i = 0; i < bins; ++i) h.bin_edges[i] = ext.min + static_cast<double>(i) * width;
  h.bin_edges[bins] = ext.max;
  h.counts.assign(bins, 0);
  h.members.assign(bins, {});

  std::vector<std::uint32_t> idx(values.size());
  k.bin_index(values, ext.min, width, bins, idx);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::uint32_t b = settle_bin(h.bin_edges, idx[i], values[i]);
    ++h.counts[b];
    h.members[b].push_back(labels[i]);
  }
  return h;
}

Histogram ensemble_gradient(const MetricVector& metrics, std::span<const std::string> run_names, Metric metric,
                            std::uint32_t bins) {
  if (bins < 1) fail(Errc::invalid_argument, "bin count must be at least 1");
  std::vector<double> values;
  std::vector<std::string> labels;
  const auto slots = metrics.values(metric);
  for (std::size_t r = 0; r < slots.size(); ++r) {
    if (std::isnan(slots[r])) continue;
    values.push_back(slots[r]);
    labels.push_back(run_names[r]);
  }
  return make_histogram(values, labels, bins);
}

Histogram supernode_gradient(const EnsembleSuperGraph& sg, std::string_view label, Metric metric, std::uint32_t bins) {
  const auto id = sg.find(label);
  if (!id) fail(Errc::not_found, "unknown supernode '" + std::string(label) + "'");
  return ensemble_gradient(sg.nodes[*id].metrics, sg.run_names, metric, bins);
}

Histogram callsite_gradient(const EnsembleCallGraph& g, std::string_view callsite, Metric metric, std::uint32_t bins) {
  const auto id = g.find(callsite);
  if (!id) fail(Errc::not_found, "unknown call site '" + std::string(callsite) + "'");
  return ensemble_gradient(g.nodes[*id].metrics, g.run_names, metric, bins);
}

// ---------------------------------------------------------------------------

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) fail(Errc::invalid_argument, "quantile of an empty sample");
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

BoxplotStats boxplot(std::vector<LabeledValue> obs) {
  if (obs.empty()) fail(Errc::invalid_argument, "boxplot needs at least one observation");
  std::sort(obs.begin(), obs.end(), [](const LabeledValue& a, const LabeledValue& b) {
    return a.value != b.value ? a.value < b.value : a.label < b.label;
  });
  std::vector<double> sorted(obs.size());
  for (std::size_t i = 0; i < obs.size(); ++i) sorted[i] = obs[i].value;

  BoxplotStats s;
  s.count = sorted.size();
  s.min = sorted.front();
  s.max = sorted.back();
  s.q1 = quantile_sorted(sorted, 0.25);
  s.median = quantile_sorted(sorted, 0.5);
  s.q3 = quantile_sorted(sorted, 0.75);
  const double iqr = s.q3 - s.q1;
  s.lower_fence = s.q1 - 1.5 * iqr;
  s.upper_fence = s.q3 + 1.5 * iqr;
  for (LabeledValue& o : obs) {
    if (o.value < s.lower_fence || o.value > s.upper_fence) s.outliers.push_back(std::move(o));
  }
  return s;
}

BoxplotStats rank_boxplot(const MetricTable& table, std::string_view callsite, std::optional<std::string_view> scope_run,
                          Metric metric) {
  if (!table.has_callsite(callsite)) fail(Errc::not_found, "unknown call site '" + std::string(callsite) + "'");
  std::vector<std::uint32_t> runs;
  if (scope_run) {
    const auto r = table.run_index(*scope_run);
    if (!r) fail(Errc::not_found, "unknown run '" + std::string(*scope_run) + "'");
    runs.push_back(*r);
  } else {
    runs.resize(table.runs().size());
    std::iota(runs.begin(), runs.end(), 0u);
  }
  std::vector<LabeledValue> obs;
  for (std::uint32_t r : runs) {
    const std::string& run = table.runs()[r].name;
    // A call site listed under several modules contributes one row per
    // module and rank; fold them per rank.
    std::map<Rank, double> per_rank;
    for (const MetricRow& row : table.rows_for(r, callsite)) {
      per_rank[row.rank] += metric == Metric::inclusive ? row.inclusive : row.exclusive;
    }
    for (const auto& [rank, v] : per_rank) obs.push_back({run + ":" + std::to_string(rank), v});
  }
  if (obs.empty()) {
    fail(Errc::not_found, "call site '" + std::string(callsite) + "' is absent from run '" +
                              std::string(scope_run.value_or("")) + "'");
  }
  return boxplot(std::move(obs));
}

// ---------------------------------------------------------------------------

DistributionMode distribution_mode_from_string(std::string_view s) {
  if (s == "callsite") return DistributionMode::callsite;
  if (s == "callgraph") return DistributionMode::callgraph;
  if (s == "rank") return DistributionMode::rank;
  fail(Errc::invalid_argument, "unknown distribution mode '" + std::string(s) + "'");
}

std::string_view to_string(DistributionMode m) {
  switch (m) {
    case DistributionMode::callsite: return "callsite";
    case DistributionMode::callgraph: return "callgraph";
    case DistributionMode::rank: return "rank";
  }
  return "unknown";
}

namespace {

const Supernode& require_supernode(const EnsembleSuperGraph& sg, std::string_view label) {
  const auto id = sg.find(label);
  if (!id) fail(Errc::not_found, "unknown supernode '" + std::string(label) + "'");
  return sg.nodes[*id];
}

}  // namespace

Histogram distribution(const EnsembleGraphFrame& frame, const EnsembleSuperGraph& sg, std::string_view label,
                       Metric metric, DistributionMode mode, std::uint32_t bins) {
  if (bins < 1) fail(Errc::invalid_argument, "bin count must be at least 1");
  const Supernode& node = require_supernode(sg, label);
  std::vector<double> values;
  std::vector<std::string> labels;

  switch (mode) {
    case DistributionMode::callsite: {
      const auto& k = kernels::active();
      for (const std::string& member : node.members) {
        const auto id = frame.callgraph.find(member);
        if (!id) continue;
        std::vector<double> present;
        for (double v : frame.callgraph.nodes[*id].metrics.values(metric)) {
          if (!std::isnan(v)) present.push_back(v);
        }
        if (present.empty()) continue;
        values.push_back(k.sum(present) / static_cast<double>(present.size()));
        labels.push_back(member);
      }
      break;
    }
    case DistributionMode::callgraph: {
      const auto slots = node.metrics.values(metric);
      for (std::size_t r = 0; r < slots.size(); ++r) {
        if (std::isnan(slots[r])) continue;
        values.push_back(slots[r]);
        labels.push_back(sg.run_names[r]);
      }
      break;
    }
    case DistributionMode::rank: {
      const auto& sources = metric == Metric::inclusive ? node.entry_functions : node.members;
      const auto slots = node.metrics.values(metric);
      for (std::size_t r = 0; r < slots.size(); ++r) {
        if (std::isnan(slots[r])) continue;
        const auto t = frame.table.run_index(sg.run_names[r]);
        if (!t) fail(Errc::precondition, "run missing from metric table");
        std::vector<double> per_rank(frame.table.runs()[*t].rank_count, 0.0);
        for (const std::string& member : sources) {
          for (const MetricRow& row : frame.table.rows_for(*t, member)) {
            per_rank[row.rank] += metric == Metric::inclusive ? row.inclusive : row.exclusive;
          }
        }
        for (std::size_t rank = 0; rank < per_rank.size(); ++rank) {
          values.push_back(per_rank[rank]);
          labels.push_back(sg.run_names[r] + ":" + std::to_string(rank));
        }
      }
      break;
    }
  }
  return make_histogram(values, labels, bins);
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) fail(Errc::precondition, "pearson inputs differ in length");
  if (x.size() < 2) return std::nullopt;
  const auto& k = kernels::active();
  const double n = static_cast<double>(x.size());
  const double mx = k.sum(x) / n;
  const double my = k.sum(y) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

Scatter correlation_scatter(const EnsembleGraphFrame& frame, const EnsembleSuperGraph& sg, std::string_view label,
                            std::optional<std::string_view> scope_run) {
  const Supernode& node = require_supernode(sg, label);
  std::optional<std::size_t> only;
  if (scope_run) {
    const auto r = frame.run_index(*scope_run);
    if (!r) fail(Errc::not_found, "unknown run '" + std::string(*scope_run) + "'");
    only = *r;
  }
  Scatter out;
  for (const std::string& member : node.members) {
    const auto id = frame.callgraph.find(member);
    if (!id) continue;
    const MetricVector& mv = frame.callgraph.nodes[*id].metrics;
    for (std::size_t r = 0; r < mv.size(); ++r) {
      if (only && r != *only) continue;
      const auto s = mv.at(r);
      if (!s) continue;
      out.points.push_back({member, frame.run_names()[r], s->exclusive, s->inclusive});
    }
  }
  std::vector<double> x;
  std::vector<double> y;
  for (const ScatterPoint& p : out.points) {
    x.push_back(p.exclusive);
    y.push_back(p.inclusive);
  }
  out.pearson_r = pearson(x, y);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

std::size_t require_run(const std::vector<std::string>& runs, std::string_view run) {
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (runs[i] == run) return i;
  }
  fail(Errc::not_found, "unknown run '" + std::string(run) + "'");
}

double absent_as_zero(double v) { return std::isnan(v) ? 0.0 : v; }

}  // namespace

TargetOverlay target_overlay(const EnsembleSuperGraph& sg, std::string_view run, Metric metric, std::uint32_t bins) {
  if (bins < 1) fail(Errc::invalid_argument, "bin count must be at least 1");
  const std::size_t r = require_run(sg.run_names, run);
  TargetOverlay out{std::string(run), metric, bins, {}, {}};
  for (const Supernode& node : sg.nodes) {
    NodeOverlay o;
    o.label = node.label;
    if (const auto s = node.metrics.at(r)) {
      o.present = true;
      o.inclusive = s->inclusive;
      o.exclusive = s->exclusive;
      if (const auto v = node.metrics.value(r, metric)) {
        o.bin = ensemble_gradient(node.metrics, sg.run_names, metric, bins).bin_of(*v);
      }
    }
    out.nodes.push_back(std::move(o));
  }
  for (const Superedge& e : sg.edges) {
    EdgeOverlay o{sg.nodes[e.source].label, sg.nodes[e.target].label, std::nullopt};
    if (!std::isnan(e.flow[r])) o.flow = e.flow[r];
    out.edges.push_back(std::move(o));
  }
  return out;
}

DiffGraph diff_supergraphs(const EnsembleSuperGraph& sg, std::string_view run_a, std::string_view run_b) {
  const std::size_t a = require_run(sg.run_names, run_a);
  const std::size_t b = require_run(sg.run_names, run_b);
  DiffGraph out{std::string(run_a), std::string(run_b), {}, {}};

  double max_incl = 0.0;
  double max_excl = 0.0;
  for (const Supernode& node : sg.nodes) {
    if (!node.metrics.present(a) && !node.metrics.present(b)) continue;
    const auto incl = node.metrics.values(Metric::inclusive);
    const auto excl = node.metrics.values(Metric::exclusive);
    NodeDelta d;
    d.label = node.label;
    d.delta_inclusive = absent_as_zero(incl[b]) - absent_as_zero(incl[a]);
    d.delta_exclusive = absent_as_zero(excl[b]) - absent_as_zero(excl[a]);
    d.partial = !node.metrics.present(a) || !node.metrics.present(b);
    max_incl = std::max(max_incl, std::abs(d.delta_inclusive));
    max_excl = std::max(max_excl, std::abs(d.delta_exclusive));
    out.nodes.push_back(std::move(d));
  }
  for (NodeDelta& d : out.nodes) {
    d.normalized_inclusive = max_incl > 0.0 ? d.delta_inclusive / max_incl : 0.0;
    d.normalized_exclusive = max_excl > 0.0 ? d.delta_exclusive / max_excl : 0.0;
  }
  for (const Superedge& e : sg.edges) {
    const bool pa = !std::isnan(e.flow[a]);
    const bool pb = !std::isnan(e.flow[b]);
    if (!pa && !pb) continue;
    out.edges.push_back({sg.nodes[e.source].label, sg.nodes[e.target].label,
                         absent_as_zero(e.flow[b]) - absent_as_zero(e.flow[a]), !(pa && pb)});
  }
  return out;
}

}  // namespace grove
