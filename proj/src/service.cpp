#include "grove/service.hpp"

#include <charconv>
#include <set>

#include <json.hpp>

#include "grove/analytics.hpp"
#include "grove/documents.hpp"
#include "grove/error.hpp"
#include "grove/ingest.hpp"
#include "grove/projection.hpp"

namespace grove {

using json = nlohmann::json;

EnsembleGraphFrame preprocess(std::span<const std::filesystem::path> inputs, const BuildOptions& options) {
  if (inputs.empty()) fail(Errc::invalid_argument, "no input profiles");
  std::vector<Profile> profiles;
  std::map<std::string, std::filesystem::path> seen;
  for (const auto& path : inputs) {
    Profile p = load_profile_file(path);
    const auto violations = validate_profile(p);
    if (!violations.empty()) fail(Errc::schema_violation, path.string() + ": " + violations.front().message);
    auto [it, fresh] = seen.try_emplace(p.run_name, path);
    if (!fresh) {
      fail(Errc::conflict, path.string() + ": run '" + p.run_name + "' already defined by " + it->second.string());
    }
    if (!profiles.empty() && p.nodes.front().frame.name != profiles.front().nodes.front().frame.name) {
      fail(Errc::incompatible_ensemble, path.string() + ": root '" + p.nodes.front().frame.name +
                                            "' differs from '" + profiles.front().nodes.front().frame.name + "' in " +
                                            inputs.front().string());
    }
    profiles.push_back(std::move(p));
  }
  return build_ensemble(profiles, options);
}

// ---------------------------------------------------------------------------

namespace {

struct HttpError {
  int status;
  std::string code;
  std::string message;
};

[[noreturn]] void reject(int status, std::string code, std::string message) {
  throw HttpError{status, std::move(code), std::move(message)};
}

std::optional<std::string> param(const Request& r, const std::string& key) {
  const auto it = r.query.find(key);
  if (it == r.query.end()) return std::nullopt;
  return it->second;
}

std::uint32_t int_param(const Request& r, const std::string& key, std::uint32_t fallback, std::uint32_t lo,
                        std::uint32_t hi) {
  const auto text = param(r, key);
  if (!text) return fallback;
  std::uint32_t v = 0;
  const auto [end, ec] = std::from_chars(text->data(), text->data() + text->size(), v);
  if (ec != std::errc{} || end != text->data() + text->size() || v < lo || v > hi) {
    reject(400, "invalid-argument",
           "'" + key + "' must be an integer in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  return v;
}

Metric metric_param(const Request& r, Metric fallback) {
  const auto text = param(r, "metric");
  return text ? metric_from_string(*text) : fallback;
}

std::vector<std::string> split_path(std::string_view path) {
  std::vector<std::string> parts;
  std::size_t i = 0;
  while (i <= path.size()) {
    const std::size_t j = std::min(path.find('/', i), path.size());
    if (j > i) parts.emplace_back(path.substr(i, j - i));
    i = j + 1;
  }
  return parts;
}

int status_for(Errc code) {
  switch (code) {
    case Errc::not_found:
      return 404;
    case Errc::parse_error:
    case Errc::schema_violation:
    case Errc::invalid_argument:
    case Errc::conflict:
    case Errc::incompatible_ensemble:
    case Errc::duplicate_context:
      return 400;
    default:
      return 500;
  }
}

json envelope(const EnsembleGraphFrame& frame) {
  return {{"schema", kApiSchema}, {"runs", frame.run_names()}};
}

}  // namespace

Service::Service(EnsembleGraphFrame frame, ServiceConfig config) : frame_(std::move(frame)), config_(config) {}

Response Service::handle(const Request& request) const {
  try {
    const std::vector<std::string> parts = split_path(request.path);
    if (parts.size() < 2 || parts[0] != "api") reject(404, "not-found", "no such endpoint '" + request.path + "'");
    const std::string& what = parts[1];
    const bool is_post = request.method == "POST";
    if (request.method != "GET" && !is_post) reject(405, "method-not-allowed", request.method + " not supported");
    if (is_post != (what == "subselect")) {
      reject(405, "method-not-allowed", request.method + " not supported on '" + request.path + "'");
    }

    const std::uint32_t bins = int_param(request, "bins", config_.default_bins, 1, 1000);
    SplitState splits;
    if (const auto text = param(request, "splits")) splits = parse_split_state(*text);
    auto supergraph = [&] { return apply_splits(frame_, splits); };

    json body = envelope(frame_);
    if (what == "meta" && parts.size() == 2) {
      json runs = json::array();
      for (const RunInfo& r : frame_.table.runs()) {
        json params = json::object();
        for (const auto& [k, v] : r.params) {
          if (const double* d = std::get_if<double>(&v)) {
            params[k] = *d;
          } else {
            params[k] = std::get<std::string>(v);
          }
        }
        runs.push_back({{"name", r.name}, {"ranks", r.rank_count}, {"params", std::move(params)}});
      }
      std::set<std::string> modules;
      for (const Supernode& s : frame_.supergraph.nodes) modules.insert(s.module);
      body["meta"] = {{"runs", std::move(runs)},
                      {"modules", modules},
                      {"callsites", frame_.callgraph.nodes.size()},
                      {"default_bins", config_.default_bins},
                      {"filter", {{"metric", to_string(frame_.options.filter_metric)},
                                  {"fraction", frame_.options.filter_fraction}}}};
    } else if (what == "supergraph" && parts.size() == 2) {
      SankeyOptions opts = config_.layout;
      opts.bins = bins;
      opts.gradient_metric = metric_param(request, opts.gradient_metric);
      const EnsembleSuperGraph sg = supergraph();
      body["splits"] = to_document(splits);
      body["layout"] = to_document(compute_sankey_layout(sg, opts));
      json members = json::array();
      for (const Supernode& s : sg.nodes) members.push_back(s.members);
      body["members"] = std::move(members);
    } else if (what == "module" && parts.size() == 4) {
      const std::string& label = parts[2];
      const EnsembleSuperGraph sg = supergraph();
      if (parts[3] == "hierarchy") {
        const auto target = param(request, "target");
        body["hierarchy"] = to_document(supernode_hierarchy(
            frame_, sg, label, target ? std::optional<std::string_view>(*target) : std::nullopt, bins,
            metric_param(request, Metric::inclusive)));
      } else if (parts[3] == "distribution") {
        const auto mode = distribution_mode_from_string(param(request, "mode").value_or("callsite"));
        const Metric metric = metric_param(request, Metric::exclusive);
        body["distribution"] = {{"label", label},
                                {"mode", to_string(mode)},
                                {"metric", to_string(metric)},
                                {"histogram", to_document(distribution(frame_, sg, label, metric, mode, bins))}};
      } else if (parts[3] == "scatter") {
        const auto scope = param(request, "scope");
        body["scatter"] = to_document(correlation_scatter(
            frame_, sg, label, scope ? std::optional<std::string_view>(*scope) : std::nullopt));
        body["scatter"]["label"] = label;
      } else {
        reject(404, "not-found", "no such endpoint '" + request.path + "'");
      }
    } else if (what == "callsite" && parts.size() == 4 && parts[3] == "boxplot") {
      const std::string& callsite = parts[2];
      const Metric metric = metric_param(request, Metric::exclusive);
      json doc{{"callsite", callsite}, {"metric", to_string(metric)}};
      doc["ensemble"] = to_document(rank_boxplot(frame_.table, callsite, std::nullopt, metric));
      doc["target"] = nullptr;
      doc["scope"] = nullptr;
      if (const auto scope = param(request, "scope")) {
        if (!frame_.table.run_index(*scope)) reject(404, "not-found", "unknown run '" + *scope + "'");
        doc["scope"] = *scope;
        try {
          doc["target"] = to_document(rank_boxplot(frame_.table, callsite, *scope, metric));
        } catch (const Error& e) {
          if (e.code() != Errc::not_found) throw;
        }
      }
      body["boxplot"] = std::move(doc);
    } else if (what == "target" && parts.size() == 3) {
      body["target"] = to_document(target_overlay(supergraph(), parts[2], metric_param(request, Metric::inclusive), bins));
    } else if (what == "diff" && parts.size() == 2) {
      const auto a = param(request, "a");
      const auto b = param(request, "b");
      if (!a || !b) reject(400, "invalid-argument", "diff needs runs 'a' and 'b'");
      body["diff"] = to_document(diff_supergraphs(supergraph(), *a, *b));
    } else if (what == "projection" && parts.size() == 2) {
      const auto runs = static_cast<std::uint32_t>(frame_.run_names().size());
      const std::uint32_t k = int_param(request, "k", std::min<std::uint32_t>(3, runs), 1, runs);
      body["projection"] = to_document(project_parameters(frame_, k));
    } else if (what == "subselect" && parts.size() == 2) {
      json doc = json::parse(request.body, nullptr, false);
      if (doc.is_object() && doc.contains("runs")) doc = doc["runs"];
      if (!doc.is_array() || doc.empty()) reject(400, "invalid-argument", "body must be a non-empty list of run names");
      std::vector<std::string> runs;
      for (const json& r : doc) {
        if (!r.is_string()) reject(400, "invalid-argument", "run names must be strings");
        runs.push_back(r.get<std::string>());
      }
      const EnsembleGraphFrame subset = subset_ensemble(frame_, runs);
      SankeyOptions opts = config_.layout;
      opts.bins = bins;
      opts.gradient_metric = metric_param(request, opts.gradient_metric);
      body["subset"] = runs;
      body["splits"] = to_document(splits);
      body["layout"] = to_document(compute_sankey_layout(apply_splits(subset, splits), opts));
    } else {
      reject(404, "not-found", "no such endpoint '" + request.path + "'");
    }
    return {200, body.dump()};
  } catch (const HttpError& e) {
    json body = envelope(frame_);
    body["error"] = {{"code", e.code}, {"message", e.message}};
    return {e.status, body.dump()};
  } catch (const Error& e) {
    json body = envelope(frame_);
    body["error"] = {{"code", std::string(to_string(e.code()))}, {"message", e.what()}};
    return {status_for(e.code()), body.dump()};
  }
}

}  // namespace grove
