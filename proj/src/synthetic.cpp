#include "grove/synthetic.hpp"

#include <random>

#include "grove/error.hpp"

namespace grove {
namespace {

// mt19937_64 output is fixed by the standard; the distributions in <random>
// are not, so draws are derived from raw output directly.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  std::uint64_t index(std::uint64_t n) { return engine_() % n; }

 private:
  std::mt19937_64 engine_;
};

std::string padded(const char* prefix, std::uint32_t value, std::uint32_t max_value) {
  const std::size_t width = std::to_string(max_value).size();
  std::string digits = std::to_string(value);
  if (digits.size() < width) digits.insert(0, width - digits.size(), '0');
  return prefix + digits;
}

struct BaseNode {
  std::uint32_t function;  // index into names
  std::int64_t parent;     // -1 for root
  std::uint32_t depth;
  std::vector<std::uint32_t> children;
  double base_exclusive;
};

}  // namespace

SyntheticEnsemble generate_synthetic_ensemble(const SyntheticSpec& spec) {
  if (spec.run_count == 0) fail(Errc::invalid_argument, "run_count must be positive");
  if (spec.callsite_count == 0) fail(Errc::invalid_argument, "callsite_count must be positive");
  if (spec.module_count == 0 || spec.module_count > spec.callsite_count) {
    fail(Errc::invalid_argument, "module_count must be in [1, callsite_count]");
  }
  if (spec.depth_max == 0) fail(Errc::invalid_argument, "depth_max must be at least 1");
  if (!(spec.noise >= 0.0 && spec.noise < 1.0)) fail(Errc::invalid_argument, "noise must be in [0, 1)");
  if (!(spec.dropout >= 0.0 && spec.dropout < 1.0)) fail(Errc::invalid_argument, "dropout must be in [0, 1)");
  if (spec.rank_counts.size() != 1 && spec.rank_counts.size() != spec.run_count) {
    fail(Errc::invalid_argument, "rank_counts must have one entry or one per run");
  }
  for (std::uint32_t r : spec.rank_counts) {
    if (r == 0) fail(Errc::invalid_argument, "rank counts must be positive");
  }

  Rng rng(spec.seed);
  const std::uint32_t n_funcs = spec.callsite_count;

  std::vector<std::string> names(n_funcs);
  std::vector<std::string> modules(n_funcs);
  for (std::uint32_t i = 0; i < n_funcs; ++i) {
    names[i] = i == 0 ? "main" : padded("fn_", i, n_funcs - 1);
    const auto block = static_cast<std::uint32_t>(static_cast<std::uint64_t>(i) * spec.module_count / n_funcs);
    modules[i] = padded("lib", block, spec.module_count - 1);
  }

  // Base tree: one node per function, parent drawn among shallow-enough
  // earlier nodes, preferring the same module.
  std::vector<BaseNode> base;
  base.push_back({0, -1, 0, {}, 0.0});
  for (std::uint32_t i = 1; i < n_funcs; ++i) {
    std::vector<std::uint32_t> same;
    std::vector<std::uint32_t> any;
    for (std::uint32_t j = 0; j < base.size(); ++j) {
      if (base[j].depth >= spec.depth_max) continue;
      any.push_back(j);
      if (modules[base[j].function] == modules[i]) same.push_back(j);
    }
    const bool prefer_same = rng.uniform() < 0.7 && !same.empty();
    const auto& pool = prefer_same ? same : any;
    const std::uint32_t parent = pool[rng.index(pool.size())];
    base.push_back({i, parent, base[parent].depth + 1, {}, 0.0});
    base[parent].children.push_back(static_cast<std::uint32_t>(base.size() - 1));
  }
  // Secondary contexts: existing functions called again from elsewhere,
  // as leaves.
  if (n_funcs > 1) {
    const std::uint32_t extra = n_funcs / 8;
    for (std::uint32_t k = 0; k < extra; ++k) {
      const auto fn = static_cast<std::uint32_t>(1 + rng.index(n_funcs - 1));
      const auto parent = static_cast<std::uint32_t>(rng.index(base.size()));
      if (base[parent].depth >= spec.depth_max || base[parent].function == fn) continue;
      bool clash = false;
      for (std::uint32_t c : base[parent].children) clash = clash || base[c].function == fn;
      if (clash) continue;
      base.push_back({fn, parent, base[parent].depth + 1, {}, 0.0});
      base[parent].children.push_back(static_cast<std::uint32_t>(base.size() - 1));
    }
  }
  for (BaseNode& node : base) node.base_exclusive = 0.5 + 9.5 * rng.uniform();

  // Preorder over the base tree.
  std::vector<std::uint32_t> order;
  std::vector<NamePath> paths(base.size());
  {
    std::vector<std::uint32_t> stack{0};
    while (!stack.empty()) {
      const std::uint32_t id = stack.back();
      stack.pop_back();
      order.push_back(id);
      paths[id] = base[id].parent < 0 ? NamePath{} : paths[static_cast<std::size_t>(base[id].parent)];
      paths[id].push_back(names[base[id].function]);
      for (auto it = base[id].children.rbegin(); it != base[id].children.rend(); ++it) stack.push_back(*it);
    }
  }

  std::optional<std::uint32_t> outlier_node;
  if (spec.plant_outlier && base.size() > 1) {
    std::uint32_t best = order[1];
    for (std::size_t i = 1; i < order.size(); ++i) {
      if (base[order[i]].base_exclusive > base[best].base_exclusive) best = order[i];
    }
    outlier_node = best;
  }
  std::vector<char> protect(base.size(), 0);
  if (outlier_node) {
    for (std::int64_t v = *outlier_node; v >= 0; v = base[static_cast<std::size_t>(v)].parent) {
      protect[static_cast<std::size_t>(v)] = 1;
    }
  }

  SyntheticEnsemble out;
  for (std::uint32_t id : order) out.base_paths.push_back(paths[id]);
  out.dropped.resize(spec.run_count);

  for (std::uint32_t run = 0; run < spec.run_count; ++run) {
    const std::uint32_t ranks = spec.rank_counts.size() == 1 ? spec.rank_counts[0] : spec.rank_counts[run];
    const bool is_outlier_run = outlier_node && run + 1 == spec.run_count;

    std::vector<char> dropped(base.size(), 0);
    for (std::uint32_t id : order) {
      const double u = rng.uniform();
      if (base[id].parent < 0) continue;
      const auto parent = static_cast<std::size_t>(base[id].parent);
      const bool shielded = is_outlier_run && protect[id];
      dropped[id] = dropped[parent] || (!shielded && u < spec.dropout);
      if (dropped[id]) out.dropped[run].push_back(paths[id]);
    }

    std::vector<std::vector<double>> exclusive(base.size(), std::vector<double>(ranks));
    for (std::uint32_t id : order) {
      for (std::uint32_t r = 0; r < ranks; ++r) {
        const double jitter = 1.0 + spec.noise * (2.0 * rng.uniform() - 1.0);
        double v = base[id].base_exclusive * jitter;
        if (is_outlier_run && outlier_node && id == *outlier_node) v *= 2.0;
        exclusive[id][r] = v;
      }
    }

    Profile p;
    p.run_name = padded("run-", run, std::max<std::uint32_t>(spec.run_count - 1, 100));
    p.rank_count = ranks;
    p.params["ranks"] = static_cast<double>(ranks);
    p.params["problem_size"] = static_cast<double>(16 << (run % 4));
    static const char* const kVariants[] = {"baseline", "tuned", "debug"};
    p.params["variant"] = std::string(kVariants[run % 3]);

    // Emit present nodes in preorder, then fill inclusive bottom-up.
    std::vector<NodeId> emitted(base.size(), 0);
    for (std::uint32_t id : order) {
      if (dropped[id]) continue;
      const auto nid = static_cast<NodeId>(p.nodes.size());
      emitted[id] = nid;
      CCTNode node;
      node.id = nid;
      node.frame.name = names[base[id].function];
      node.frame.module = modules[base[id].function];
      node.metrics.resize(ranks);
      for (std::uint32_t r = 0; r < ranks; ++r) node.metrics[r].exclusive = exclusive[id][r];
      p.nodes.push_back(std::move(node));
      if (base[id].parent >= 0) p.nodes[emitted[static_cast<std::size_t>(base[id].parent)]].children.push_back(nid);
    }
    for (auto it = p.nodes.rbegin(); it != p.nodes.rend(); ++it) {
      for (std::uint32_t r = 0; r < ranks; ++r) {
        double incl = it->metrics[r].exclusive;
        for (NodeId c : it->children) incl += p.nodes[c].metrics[r].inclusive;
        it->metrics[r].inclusive = incl;
      }
    }
    if (is_outlier_run) {
      out.outlier_run = p.run_name;
      out.outlier_callsite = names[base[*outlier_node].function];
    }
    out.profiles.push_back(std::move(p));
  }
  return out;
}

}  // namespace grove
