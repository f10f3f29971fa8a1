#pragma once

// Shared fixtures and brute-force oracles for the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "grove/analytics.hpp"
#include "grove/ensemble.hpp"
#include "grove/ingest.hpp"

namespace grove::test {

// Three runs over LIB1..LIB4: main -> foo -> baz, main -> bar, main -> qux.
// bar is missing from run B and qux from run C.
inline std::vector<Profile> three_run_fixture() {
  const char* a =
      "# run: A\n"
      "main | LIB1 | incl=40 | excl=0\n"
      "main/foo | LIB2 | incl=20 | excl=0\n"
      "main/foo/baz | LIB3 | incl=20 | excl=20\n"
      "main/bar | LIB3 | incl=10 | excl=10\n"
      "main/qux | LIB4 | incl=10 | excl=10\n";
  const char* b =
      "# run: B\n"
      "main | LIB1 | incl=40 | excl=0\n"
      "main/foo | LIB2 | incl=5 | excl=0\n"
      "main/foo/baz | LIB3 | incl=5 | excl=5\n"
      "main/qux | LIB4 | incl=35 | excl=35\n";
  const char* c =
      "# run: C\n"
      "main | LIB1 | incl=30 | excl=15\n"
      "main/foo | LIB2 | incl=10 | excl=2\n"
      "main/foo/baz | LIB3 | incl=8 | excl=8\n"
      "main/bar | LIB3 | incl=5 | excl=5\n";
  return {parse_flat_profile(a), parse_flat_profile(b), parse_flat_profile(c)};
}

/// Random DAG super graph: node 0 is the root; every other node gets at
/// least one parent with a smaller index, plus a few extra forward edges.
inline EnsembleSuperGraph random_dag_supergraph(std::mt19937_64& rng, std::uint32_t max_nodes = 30,
                                                std::uint32_t runs = 4) {
  std::uniform_int_distribution<std::uint32_t> count(1, max_nodes);
  std::uniform_real_distribution<double> value(0.0, 100.0);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  const std::uint32_t n = count(rng);
  EnsembleSuperGraph sg;
  for (std::uint32_t r = 0; r < runs; ++r) sg.run_names.push_back("r" + std::to_string(r));
  for (std::uint32_t i = 0; i < n; ++i) {
    Supernode s;
    s.label = "M" + std::to_string(i);
    s.module = s.label;
    s.members = {s.label + ".f"};
    s.entry_functions = s.members;
    s.metrics = MetricVector(runs);
    const double scale = coin(rng) < 0.2 ? 0.01 : 1.0;  // some tiny nodes to hit the height floor
    for (std::uint32_t r = 0; r < runs; ++r) {
      if (i != 0 && coin(rng) < 0.15) continue;
      const double incl = value(rng) * scale;
      s.metrics.set(r, {incl, incl * coin(rng)});
    }
    s.max_inclusive = s.metrics.max(Metric::inclusive);
    s.max_exclusive = s.metrics.max(Metric::exclusive);
    sg.nodes.push_back(std::move(s));
  }
  std::vector<std::vector<char>> has(n, std::vector<char>(n, 0));
  auto add = [&](std::uint32_t a, std::uint32_t b) {
    if (has[a][b]) return;
    has[a][b] = 1;
    Superedge e{a, b, FlowVector(runs), 0.0};
    for (std::uint32_t r = 0; r < runs; ++r) e.flow[r] = coin(rng) < 0.1 ? NAN : value(rng);
    e.max_flow = max_present(e.flow);
    sg.edges.push_back(std::move(e));
  };
  for (std::uint32_t j = 1; j < n; ++j) {
    add(std::uniform_int_distribution<std::uint32_t>(0, j - 1)(rng), j);
    const std::uint32_t extra = std::uniform_int_distribution<std::uint32_t>(0, 2)(rng);
    for (std::uint32_t k = 0; k < extra; ++k) add(std::uniform_int_distribution<std::uint32_t>(0, j - 1)(rng), j);
  }
  return sg;
}

struct BruteBoxplot {
  double q1, median, q3, lower, upper;
  std::vector<double> outliers;  // ascending
};

/// Quartiles from the sorted sample: value at rank p * (m - 1), linearly
/// interpolated between the neighbouring order statistics.
inline BruteBoxplot brute_boxplot(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  auto q = [&](double p) {
    const double pos = p * static_cast<double>(v.size() - 1);
    std::size_t lo = 0;
    while (static_cast<double>(lo + 1) <= pos) ++lo;
    const double frac = pos - static_cast<double>(lo);
    const double next = lo + 1 < v.size() ? v[lo + 1] : v[lo];
    return v[lo] + (next - v[lo]) * frac;
  };
  BruteBoxplot b{q(0.25), q(0.5), q(0.75), 0, 0, {}};
  b.lower = b.q1 - 1.5 * (b.q3 - b.q1);
  b.upper = b.q3 + 1.5 * (b.q3 - b.q1);
  for (double x : v) {
    if (x < b.lower || x > b.upper) b.outliers.push_back(x);
  }
  return b;
}

/// Per-run sum of exclusive time over the present slots of a metric vector list.
template <class Nodes, class Get>
std::vector<double> exclusive_totals(const Nodes& nodes, std::size_t runs, Get metrics_of) {
  std::vector<double> out(runs, 0.0);
  for (const auto& n : nodes) {
    const auto v = metrics_of(n).values(Metric::exclusive);
    for (std::size_t r = 0; r < runs; ++r) {
      if (!std::isnan(v[r])) out[r] += v[r];
    }
  }
  return out;
}

inline double relative_error(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

}  // namespace grove::test
