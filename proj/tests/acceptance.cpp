// Acceptance gate: one PASS/FAIL line per primary criterion. Pass criterion
// names as arguments to run a subset. GROVE_UPDATE_GOLDEN=1 rewrites the
// API golden files instead of comparing against them.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "grove/cache.hpp"
#include "grove/documents.hpp"
#include "grove/error.hpp"
#include "grove/projection.hpp"
#include "grove/service.hpp"
#include "grove/synthetic.hpp"
#include "support.hpp"

using namespace grove;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

// Tolerances and budgets.
constexpr double kRollupBudgetSeconds = 1.0;
constexpr int kRandomEnsembles = 200;
constexpr std::uint32_t kMaxRuns = 8;
constexpr std::uint32_t kMaxCallsites = 50;
constexpr double kUnionBudgetSeconds = 30.0;
constexpr double kConservationTolerance = 1e-9;
constexpr int kBoxplotSamples = 1000;
constexpr std::uint32_t kDiffRuns = 6;
constexpr int kLayoutGraphs = 100;
constexpr double kMdsTolerance = 1e-6;
constexpr std::uint32_t kScaleRuns = 100;
constexpr std::uint32_t kScaleCallsites = 500;
constexpr std::uint32_t kScaleRanks = 16;
constexpr double kPreprocessBudgetSeconds = 30.0;
constexpr double kEndpointBudgetMs = 200.0;

struct Outcome {
  bool pass = true;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

// ---------------------------------------------------------------------------

Outcome module_rollup() {
  const auto t0 = Clock::now();
  const EnsembleGraphFrame f = build_ensemble(test::three_run_fixture());
  const EnsembleSuperGraph& sg = f.supergraph;
  Outcome o;
  const std::map<std::string, double> want{{"LIB1", 40}, {"LIB2", 20}, {"LIB3", 30}, {"LIB4", 35}};
  if (sg.nodes.size() != want.size()) o = {false, "expected 4 supernodes"};
  for (const auto& [label, value] : want) {
    const auto id = sg.find(label);
    if (!id || sg.nodes[*id].max_inclusive != value) o = {false, label + " max inclusive mismatch"};
  }
  const std::map<std::string, double> flows{{"LIB2", 20}, {"LIB3", 10}, {"LIB4", 35}};
  double total = 0.0;
  std::size_t seen = 0;
  for (const Superedge& e : sg.edges) {
    if (sg.nodes[e.source].label != "LIB1") continue;
    ++seen;
    total += e.max_flow;
    const auto it = flows.find(sg.nodes[e.target].label);
    if (it == flows.end() || it->second != e.max_flow) o = {false, "LIB1 edge flow mismatch"};
  }
  if (seen != 3 || total != 65.0) o = {false, "LIB1 outgoing flows do not sum to 65"};
  const double secs = seconds_since(t0);
  if (secs >= kRollupBudgetSeconds) o = {false, "took " + fmt(secs) + " s"};
  if (o.pass) o.detail = "maxima 40/20/30/35, flows 20+10+35=65, " + fmt(secs * 1000) + " ms";
  return o;
}

SyntheticSpec random_spec(std::uint64_t i) {
  std::mt19937_64 rng(1000 + i);
  SyntheticSpec spec;
  spec.seed = 7000 + i;
  spec.run_count = std::uniform_int_distribution<std::uint32_t>(1, kMaxRuns)(rng);
  spec.callsite_count = std::uniform_int_distribution<std::uint32_t>(1, kMaxCallsites)(rng);
  spec.module_count = std::uniform_int_distribution<std::uint32_t>(1, std::min<std::uint32_t>(6, spec.callsite_count))(rng);
  spec.rank_counts = {std::uniform_int_distribution<std::uint32_t>(1, 4)(rng)};
  spec.depth_max = std::uniform_int_distribution<std::uint32_t>(1, 8)(rng);
  spec.noise = std::uniform_real_distribution<double>(0.0, 0.5)(rng);
  spec.dropout = std::uniform_real_distribution<double>(0.0, 0.4)(rng);
  spec.plant_outlier = i % 3 == 0;
  return spec;
}

Outcome union_superset() {
  const auto t0 = Clock::now();
  std::size_t paths = 0;
  std::size_t slots = 0;
  for (int i = 0; i < kRandomEnsembles; ++i) {
    const SyntheticEnsemble ens = generate_synthetic_ensemble(random_spec(static_cast<std::uint64_t>(i)));
    const EnsembleCCT cct = union_ccts(ens.profiles);
    // Every input context path is present.
    for (const Profile& p : ens.profiles) {
      std::vector<std::vector<Frame>> path_of(p.nodes.size());
      path_of[0] = {p.nodes[0].frame};
      for (const CCTNode& n : p.nodes) {
        for (NodeId c : n.children) {
          path_of[c] = path_of[n.id];
          path_of[c].push_back(p.nodes[c].frame);
        }
        if (!cct.find(path_of[n.id])) return {false, "ensemble " + std::to_string(i) + " lost a context of " + p.run_name};
        ++paths;
      }
    }
    // Absent slots match the dropout log exactly. A base path dropped from
    // every run cannot appear; nothing outside the base tree may appear.
    std::vector<std::set<NamePath>> dropped;
    for (const auto& d : ens.dropped) dropped.emplace_back(d.begin(), d.end());
    std::size_t expected = 0;
    for (const NamePath& base : ens.base_paths) {
      bool anywhere = false;
      for (const auto& d : dropped) anywhere = anywhere || d.count(base) == 0;
      const auto id = cct.find_by_names(base);
      if (!anywhere) {
        if (id) return {false, "ensemble " + std::to_string(i) + " holds a path no run has"};
        continue;
      }
      ++expected;
      if (!id) return {false, "ensemble " + std::to_string(i) + " lost a base path"};
      for (std::size_t r = 0; r < dropped.size(); ++r) {
        if (cct.node(*id).metrics.present(r) == (dropped[r].count(base) == 1)) {
          return {false, "ensemble " + std::to_string(i) + " run " + std::to_string(r) + " absent slot mismatch"};
        }
        ++slots;
      }
    }
    if (cct.nodes().size() != expected) return {false, "ensemble " + std::to_string(i) + " has unexpected contexts"};
  }
  const double secs = seconds_since(t0);
  if (secs >= kUnionBudgetSeconds) return {false, "took " + fmt(secs) + " s"};
  return {true, std::to_string(kRandomEnsembles) + " ensembles, " + std::to_string(paths) + " paths, " +
                    std::to_string(slots) + " slots, " + fmt(secs) + " s"};
}

Outcome conservation() {
  double worst = 0.0;
  std::size_t split_graphs = 0;
  for (int i = 0; i < kRandomEnsembles; ++i) {
    const SyntheticEnsemble ens = generate_synthetic_ensemble(random_spec(static_cast<std::uint64_t>(i)));
    const EnsembleGraphFrame f = build_ensemble(ens.profiles);
    const std::size_t n = f.run_names().size();
    std::vector<double> truth(n, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
      for (const CCTNode& node : ens.profiles[r].nodes) {
        truth[r] += aggregate_run_representative(ens.profiles[r], node.id).exclusive;
      }
    }
    auto metrics = [](const auto& x) -> const MetricVector& { return x.metrics; };
    auto check = [&](const std::vector<double>& got, const char* stage) -> std::optional<Outcome> {
      for (std::size_t r = 0; r < n; ++r) {
        const double err = test::relative_error(truth[r], got[r]);
        worst = std::max(worst, err);
        if (!(err < kConservationTolerance)) {
          return Outcome{false, std::string(stage) + " drifted by " + fmt(err) + " in ensemble " + std::to_string(i)};
        }
      }
      return std::nullopt;
    };
    if (auto bad = check(test::exclusive_totals(f.cct.nodes(), n, metrics), "tree")) return *bad;
    if (auto bad = check(test::exclusive_totals(f.callgraph.nodes, n, metrics), "call graph")) return *bad;
    if (auto bad = check(test::exclusive_totals(f.supergraph.nodes, n, metrics), "super graph")) return *bad;

    // A random split sequence over whatever supernodes currently exist.
    std::mt19937_64 rng(static_cast<std::uint64_t>(i));
    SplitState state;
    EnsembleSuperGraph sg = f.supergraph;
    const int steps = std::uniform_int_distribution<int>(1, 5)(rng);
    for (int s = 0; s < steps; ++s) {
      const Supernode& pick = sg.nodes[std::uniform_int_distribution<std::size_t>(0, sg.nodes.size() - 1)(rng)];
      SplitCommand cmd{SplitCommand::Kind::split_by_entry_functions, pick.label, ""};
      if (rng() % 2 == 0) {
        cmd.kind = SplitCommand::Kind::reveal_callsite;
        cmd.callsite = pick.members[std::uniform_int_distribution<std::size_t>(0, pick.members.size() - 1)(rng)];
      }
      state.commands.push_back(cmd);
      sg = apply_splits(f, state);
      ++split_graphs;
      if (auto bad = check(test::exclusive_totals(sg.nodes, n, metrics), "split graph")) return *bad;
    }
  }
  return {true, "worst relative error " + fmt(worst) + " over " + std::to_string(split_graphs) + " split graphs"};
}

Outcome boxplot_oracle() {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> size(1, 120);
  std::lognormal_distribution<double> heavy(0.0, 1.2);
  std::uniform_int_distribution<int> small(0, 9);
  for (int t = 0; t < kBoxplotSamples; ++t) {
    std::vector<double> v(static_cast<std::size_t>(size(rng)));
    for (double& x : v) x = t % 3 == 0 ? static_cast<double>(small(rng)) : heavy(rng);
    std::vector<LabeledValue> obs;
    for (std::size_t i = 0; i < v.size(); ++i) obs.push_back({"o" + std::to_string(i), v[i]});
    const BoxplotStats b = boxplot(obs);
    const auto want = test::brute_boxplot(v);
    bool same = b.q1 == want.q1 && b.median == want.median && b.q3 == want.q3 && b.lower_fence == want.lower &&
                b.upper_fence == want.upper && b.outliers.size() == want.outliers.size();
    for (std::size_t i = 0; same && i < want.outliers.size(); ++i) same = b.outliers[i].value == want.outliers[i];
    if (!same) return {false, "sample " + std::to_string(t) + " differs from the oracle"};
  }
  return {true, std::to_string(kBoxplotSamples) + " samples exact"};
}

Outcome diff_properties() {
  SyntheticSpec spec;
  spec.run_count = kDiffRuns;
  spec.dropout = 0.15;
  spec.callsite_count = 40;
  const EnsembleGraphFrame f = build_ensemble(generate_synthetic_ensemble(spec).profiles);
  const auto& runs = f.run_names();
  std::size_t pairs = 0;
  for (const std::string& a : runs) {
    for (const std::string& b : runs) {
      const DiffGraph ab = diff_supergraphs(f.supergraph, a, b);
      const DiffGraph ba = diff_supergraphs(f.supergraph, b, a);
      if (ab.nodes.size() != ba.nodes.size() || ab.edges.size() != ba.edges.size()) return {false, "shape differs"};
      for (std::size_t i = 0; i < ab.nodes.size(); ++i) {
        const NodeDelta& x = ab.nodes[i];
        const NodeDelta& y = ba.nodes[i];
        if (x.label != y.label || x.delta_inclusive != -y.delta_inclusive || x.delta_exclusive != -y.delta_exclusive ||
            x.normalized_inclusive != -y.normalized_inclusive || x.normalized_exclusive != -y.normalized_exclusive) {
          return {false, "diff(" + a + "," + b + ") is not antisymmetric at " + x.label};
        }
        if (a == b && (x.delta_inclusive != 0.0 || x.delta_exclusive != 0.0)) return {false, "diff(A,A) nonzero"};
      }
      for (std::size_t i = 0; i < ab.edges.size(); ++i) {
        if (ab.edges[i].delta_flow != -ba.edges[i].delta_flow) return {false, "edge diff not antisymmetric"};
        if (a == b && ab.edges[i].delta_flow != 0.0) return {false, "diff(A,A) edge nonzero"};
      }
      ++pairs;
    }
  }
  return {true, std::to_string(pairs) + " ordered run pairs"};
}

Outcome layout_invariants() {
  std::mt19937_64 rng(4242);
  const SankeyOptions opts;
  std::size_t edges = 0;
  for (int t = 0; t < kLayoutGraphs; ++t) {
    const EnsembleSuperGraph sg = test::random_dag_supergraph(rng, 40);
    const SankeyLayout l = compute_sankey_layout(sg, opts);
    for (const SankeyEdge& e : l.edges) {
      ++edges;
      if (!(l.nodes[e.source].level < l.nodes[e.target].level)) return {false, "edge against level order"};
      if (e.source_end_thickness > l.nodes[e.source].height || e.target_end_thickness > l.nodes[e.target].height) {
        return {false, "edge end thicker than its node"};
      }
    }
    for (const SankeyNode& a : l.nodes) {
      for (const SankeyNode& b : l.nodes) {
        if (a.id == b.id || a.level != b.level) continue;
        const bool disjoint = a.y + a.height <= b.y || b.y + b.height <= a.y;
        if (!disjoint) return {false, "vertical overlap in graph " + std::to_string(t)};
      }
    }
    if (to_document(compute_sankey_layout(sg, opts)).dump() != to_document(l).dump()) {
      return {false, "geometry differs on repeat"};
    }
  }
  return {true, std::to_string(kLayoutGraphs) + " graphs, " + std::to_string(edges) + " edges"};
}

Outcome mds_kmeans() {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(-5, 5);
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 3 + static_cast<std::size_t>(t % 14);
    // Planar points placed in 4-D by a fixed rotation plus offset.
    const double c = std::cos(0.3 * t);
    const double s = std::sin(0.3 * t);
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < n; ++i) {
      const double x = u(rng);
      const double y = u(rng);
      rows.push_back({c * x - s * y + 2, 0.5, s * x + c * y - 1, 0.5});
    }
    const DistanceMatrix d = pairwise_distances(rows);
    const Embedding e = classical_mds(d);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const double got = std::hypot(e.points[i][0] - e.points[j][0], e.points[i][1] - e.points[j][1]);
        worst = std::max(worst, test::relative_error(got, d.at(i, j)));
      }
    }
    const KMeansResult km = kmeans(rows, static_cast<std::uint32_t>(n));
    if (km.cost != 0.0) return {false, "k = n left nonzero cost"};
    const Embedding again = classical_mds(pairwise_distances(rows));
    if (again.points != e.points || kmeans(rows, 2).assignment != kmeans(rows, 2).assignment) {
      return {false, "repeat run differs"};
    }
  }
  if (!(worst < kMdsTolerance)) return {false, "distance error " + fmt(worst)};

  SyntheticSpec spec;
  spec.run_count = 12;
  const EnsembleGraphFrame f = build_ensemble(generate_synthetic_ensemble(spec).profiles);
  if (to_document(project_parameters(f, 3)).dump() != to_document(project_parameters(f, 3)).dump()) {
    return {false, "projection differs on repeat"};
  }
  if (project_parameters(f, 12).within_cluster_cost != 0.0) return {false, "projection k = n left nonzero cost"};
  return {true, "worst distance error " + fmt(worst)};
}

std::vector<Request> endpoint_requests(const EnsembleGraphFrame& f) {
  const Supernode& big = f.supergraph.nodes[std::min<std::size_t>(1, f.supergraph.nodes.size() - 1)];
  const std::string module = big.label;
  const std::string callsite = big.members.front();
  const std::string a = f.run_names().front();
  const std::string b = f.run_names().back();
  const std::string splits = R"([{"op":"split","group":")" + module + R"("}])";
  nlohmann::json subset = nlohmann::json::array();
  for (std::size_t i = 0; i < f.run_names().size(); i += 2) subset.push_back(f.run_names()[i]);
  return {
      {"GET", "/api/meta", {}, ""},
      {"GET", "/api/supergraph", {}, ""},
      {"GET", "/api/supergraph", {{"splits", splits}, {"bins", "20"}}, ""},
      {"GET", "/api/module/" + module + "/hierarchy", {{"target", b}}, ""},
      {"GET", "/api/callsite/" + callsite + "/boxplot", {{"scope", b}}, ""},
      {"GET", "/api/module/" + module + "/distribution", {{"mode", "callsite"}}, ""},
      {"GET", "/api/module/" + module + "/distribution", {{"mode", "callgraph"}}, ""},
      {"GET", "/api/module/" + module + "/distribution", {{"mode", "rank"}}, ""},
      {"GET", "/api/module/" + module + "/scatter", {}, ""},
      {"GET", "/api/target/" + b, {}, ""},
      {"GET", "/api/diff", {{"a", a}, {"b", b}}, ""},
      {"GET", "/api/projection", {{"k", "3"}}, ""},
      {"POST", "/api/subselect", {}, subset.dump()},
  };
}

Outcome scalability() {
  SyntheticSpec spec;
  spec.run_count = kScaleRuns;
  spec.callsite_count = kScaleCallsites;
  spec.module_count = 20;
  spec.rank_counts = {kScaleRanks};
  spec.depth_max = 10;
  spec.dropout = 0.02;
  const SyntheticEnsemble ens = generate_synthetic_ensemble(spec);
  const fs::path dir = fs::temp_directory_path() / "grove_acceptance_scale";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::vector<fs::path> paths;
  for (const Profile& p : ens.profiles) {
    paths.push_back(dir / (p.run_name + ".json"));
    write_text_file(paths.back(), serialize_profile(p));
  }

  const auto t0 = Clock::now();
  EnsembleGraphFrame frame = preprocess(paths, {});
  const std::string cache = serialize_cache(frame);
  const double pre = seconds_since(t0);
  fs::remove_all(dir);
  if (parse_cache(cache) != frame) return {false, "cache reload differs from the in-memory build"};
  if (pre >= kPreprocessBudgetSeconds) return {false, "preprocess took " + fmt(pre) + " s"};

  const Service service(std::move(frame));
  const auto requests = endpoint_requests(service.frame());
  double worst = 0.0;
  std::string slowest;
  for (const Request& r : requests) {
    if (service.handle(r).status != 200) return {false, "request " + r.path + " failed"};  // warm-up
    const auto t1 = Clock::now();
    const Response res = service.handle(r);
    const double ms = seconds_since(t1) * 1000;
    if (res.status != 200) return {false, "request " + r.path + " failed"};
    if (ms > worst) {
      worst = ms;
      slowest = r.path;
    }
  }
  if (worst >= kEndpointBudgetMs) return {false, slowest + " took " + fmt(worst) + " ms"};
  return {true, "preprocess " + fmt(pre) + " s, slowest endpoint " + slowest + " " + fmt(worst) + " ms"};
}

// ---------------------------------------------------------------------------

struct GoldenCase {
  std::string name;
  Request request;
};

std::vector<GoldenCase> golden_cases() {
  return {
      {"meta", {"GET", "/api/meta", {}, ""}},
      {"supergraph", {"GET", "/api/supergraph", {}, ""}},
      {"supergraph_split", {"GET", "/api/supergraph",
                            {{"splits", R"([{"op":"split","group":"lib1"},{"op":"reveal","group":"lib2","callsite":"fn_13"}])"},
                             {"bins", "4"}}, ""}},
      {"hierarchy", {"GET", "/api/module/lib1/hierarchy", {{"target", "run-003"}}, ""}},
      {"boxplot", {"GET", "/api/callsite/fn_04/boxplot", {{"scope", "run-003"}}, ""}},
      {"distribution_rank", {"GET", "/api/module/lib0/distribution", {{"mode", "rank"}, {"bins", "5"}}, ""}},
      {"scatter", {"GET", "/api/module/lib2/scatter", {}, ""}},
      {"target", {"GET", "/api/target/run-003", {}, ""}},
      {"diff", {"GET", "/api/diff", {{"a", "run-000"}, {"b", "run-003"}}, ""}},
      {"projection", {"GET", "/api/projection", {{"k", "2"}}, ""}},
      {"subselect", {"POST", "/api/subselect", {}, R"(["run-000","run-002"])"}},
      {"error_unknown_module", {"GET", "/api/module/nope/hierarchy", {}, ""}},
  };
}

Outcome api_golden() {
  SyntheticSpec spec;  // seed 42
  spec.dropout = 0.1;
  spec.plant_outlier = true;
  const Service service(build_ensemble(generate_synthetic_ensemble(spec).profiles));
  const fs::path dir = GROVE_GOLDEN_DIR;
  const bool update = std::getenv("GROVE_UPDATE_GOLDEN") != nullptr;
  std::size_t checked = 0;
  for (const GoldenCase& c : golden_cases()) {
    const std::string body = service.handle(c.request).body + "\n";
    if (service.handle(c.request).body + "\n" != body) return {false, c.name + " differs between calls"};
    const fs::path file = dir / (c.name + ".json");
    if (update) {
      write_text_file(file, body);
    } else {
      if (!fs::exists(file)) return {false, "missing golden file " + file.filename().string()};
      if (read_text_file(file) != body) return {false, c.name + " differs from its golden file"};
    }
    ++checked;
  }
  return {true, std::to_string(checked) + (update ? " golden files written" : " responses byte-identical") +
                    " (kernels: " + std::string(kernels::active().isa) + ")"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"module-rollup", module_rollup},   {"union-superset", union_superset},
      {"conservation", conservation},         {"boxplot-oracle", boxplot_oracle},
      {"diff-properties", diff_properties},   {"layout-invariants", layout_invariants},
      {"mds-kmeans", mds_kmeans},             {"scalability", scalability},
      {"api-golden", api_golden},
  };
  const std::set<std::string> only(argv + 1, argv + argc);
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    if (!only.empty() && only.count(name) == 0) continue;
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    std::cout << (o.pass ? "PASS  " : "FAIL  ") << name << "  " << o.detail << std::endl;
    failures += o.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
