#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "grove/profile.hpp"

namespace grove {

struct SyntheticSpec {
  std::uint64_t seed = 42;
  std::uint32_t run_count = 4;
  std::uint32_t callsite_count = 24;  // distinct function names
  std::uint32_t module_count = 4;
  std::vector<std::uint32_t> rank_counts{4};  // one per run, or a single value for all
  std::uint32_t depth_max = 6;
  double noise = 0.1;     // multiplicative jitter in [1-noise, 1+noise]
  double dropout = 0.0;   // per non-root subtree, per run
  bool plant_outlier = false;  // last run gets 2x exclusive time on one call site
};

using NamePath = std::vector<std::string>;

struct SyntheticEnsemble {
  std::vector<Profile> profiles;
  /// Every calling-context path of the shared base tree, in preorder.
  std::vector<NamePath> base_paths;
  /// Per run: every base path omitted from that run by subtree dropout.
  std::vector<std::vector<NamePath>> dropped;
  std::optional<std::string> outlier_run;
  std::optional<std::string> outlier_callsite;
};

/// Deterministic ensemble sharing one base tree. Functions are assigned to
/// modules in contiguous blocks; a few functions gain a second calling
/// context so call-graph merging and recursion are exercised. Inclusive
/// time is built bottom-up as exclusive plus children, in child order.
/// Throws Error(invalid_argument) when the spec is inconsistent.
SyntheticEnsemble generate_synthetic_ensemble(const SyntheticSpec& spec);

}  // namespace grove
