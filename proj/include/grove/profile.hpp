#pragma once

// Core domain model: one execution's calling-context tree with per-rank
// metrics, its flat metric table, and the pairing of the two.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace grove {

using NodeId = std::uint32_t;
using Rank = std::uint32_t;

struct Frame {
  std::string name;
  std::string module;
  std::optional<std::string> file;
  std::optional<std::uint32_t> line;

  /// Calling-context identity. file/line are display metadata only.
  bool same_context(const Frame& other) const {
    return name == other.name && module == other.module;
  }

  friend bool operator==(const Frame&, const Frame&) = default;
};

struct MetricSample {
  double inclusive = 0.0;
  double exclusive = 0.0;

  friend bool operator==(const MetricSample&, const MetricSample&) = default;
};

enum class Metric { inclusive, exclusive };

std::string_view to_string(Metric m);
Metric metric_from_string(std::string_view s);

inline double value_of(const MetricSample& s, Metric m) {
  return m == Metric::inclusive ? s.inclusive : s.exclusive;
}

struct CCTNode {
  NodeId id = 0;
  Frame frame;
  std::vector<NodeId> children;
  std::vector<MetricSample> metrics;  // indexed by rank, dense 0..rank_count-1

  friend bool operator==(const CCTNode&, const CCTNode&) = default;
};

/// Execution parameter. Numeric strings are stored as numbers.
using ParamValue = std::variant<double, std::string>;
using ParamMap = std::map<std::string, ParamValue>;

/// One execution. Node ids are dense and assigned in document (preorder)
/// order, so nodes[0] is the root.
struct Profile {
  std::string run_name;
  ParamMap params;
  std::uint32_t rank_count = 1;
  std::vector<CCTNode> nodes;

  const CCTNode& root() const { return nodes.front(); }
  const CCTNode& node(NodeId id) const { return nodes.at(id); }

  friend bool operator==(const Profile&, const Profile&) = default;
};

struct Violation {
  NodeId node;
  std::optional<Rank> rank;
  std::string rule;
  std::string message;
};

/// Checks every structural and metric invariant of a profile. An empty
/// result means the profile is well formed.
std::vector<Violation> validate_profile(const Profile& p);

struct ConsistencyWarning {
  NodeId node;
  Rank rank;
  double residual;  // inclusive - (exclusive + sum of children inclusive)
};

/// Reports node/rank pairs whose inclusive time does not balance against
/// exclusive plus callees beyond tol * inclusive. Sampled data may
/// legitimately be unbalanced, so this only warns.
std::vector<ConsistencyWarning> consistency_report(const Profile& p, double tol);

/// Mean over all ranks of a node's inclusive and exclusive time.
MetricSample aggregate_run_representative(const Profile& p, NodeId node);

// ---------------------------------------------------------------------------
// Metric table

/// Interned string table; ids are stable in insertion order.
class StringPool {
 public:
  std::uint32_t intern(std::string_view s);
  std::optional<std::uint32_t> find(std::string_view s) const;
  const std::string& at(std::uint32_t id) const { return strings_.at(id); }
  std::size_t size() const { return strings_.size(); }
  const std::vector<std::string>& strings() const { return strings_; }

  friend bool operator==(const StringPool& a, const StringPool& b) { return a.strings_ == b.strings_; }

 private:
  std::vector<std::string> strings_;
  std::map<std::string, std::uint32_t, std::less<>> ids_;
};

struct MetricRow {
  std::uint32_t run;       // index into MetricTable::runs()
  std::uint32_t module;    // id in MetricTable::symbols()
  std::uint32_t callsite;  // id in MetricTable::symbols()
  Rank rank;
  double inclusive;
  double exclusive;

  friend bool operator==(const MetricRow&, const MetricRow&) = default;
};

struct RunInfo {
  std::string name;
  ParamMap params;
  std::uint32_t rank_count;

  friend bool operator==(const RunInfo&, const RunInfo&) = default;
};

struct MetricTotals {
  double inclusive = 0.0;
  double exclusive = 0.0;
};

/// Rank-level metric store keyed by (run, module, call site, rank).
///
/// Rows are kept grouped by run (the primary index), then module, call site
/// and rank, so each run and each (run, call site) pair is a contiguous
/// slice. Call sites reached through several calling contexts of one run
/// are summed into a single row per rank.
class MetricTable {
 public:
  MetricTable() = default;

  /// Builds the table of a single profile.
  static MetricTable from_profile(const Profile& p);

  /// Concatenates tables of distinct runs, keeping input run order.
  static MetricTable concatenate(std::span<const MetricTable> parts);

  /// Assembles a table from already-sorted rows; used by the cache reader.
  static MetricTable from_rows(std::vector<RunInfo> runs, StringPool symbols, std::vector<MetricRow> rows);

  /// Rows of the selected runs only, renumbered in the given order.
  MetricTable select_runs(std::span<const std::uint32_t> runs) const;

  const std::vector<RunInfo>& runs() const { return runs_; }
  const StringPool& symbols() const { return symbols_; }
  std::span<const MetricRow> rows() const { return rows_; }
  std::size_t size() const { return rows_.size(); }

  std::optional<std::uint32_t> run_index(std::string_view run) const;
  const std::string& symbol(std::uint32_t id) const { return symbols_.at(id); }

  std::span<const MetricRow> rows_for_run(std::uint32_t run) const;
  /// Per-rank rows for one call site in one run; empty if it never ran there.
  std::span<const MetricRow> rows_for(std::uint32_t run, std::string_view callsite) const;
  bool has_callsite(std::string_view callsite) const;

  /// Module-level granularity: totals summed over call sites and ranks.
  std::map<std::string, MetricTotals> module_totals(std::uint32_t run) const;
  /// Name-level granularity: totals per call site summed over ranks.
  std::map<std::string, MetricTotals> callsite_totals(std::uint32_t run) const;

  friend bool operator==(const MetricTable& a, const MetricTable& b) {
    return a.runs_ == b.runs_ && a.symbols_ == b.symbols_ && a.rows_ == b.rows_;
  }

 private:
  void rebuild_index();

  std::vector<RunInfo> runs_;
  StringPool symbols_;
  std::vector<MetricRow> rows_;
  std::vector<std::pair<std::size_t, std::size_t>> run_ranges_;
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::pair<std::size_t, std::size_t>> site_ranges_;
  std::set<std::uint32_t> callsites_;
};

/// A single-profile graph paired with its metric table.
struct GraphFrame {
  Profile cct;
  MetricTable table;
};

GraphFrame make_graph_frame(Profile p);

}  // namespace grove
