// grove: command-line front end for ingesting profiles, generating
// synthetic ensembles, exporting layouts and serving the HTTP API.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <iostream>

#include "grove/cache.hpp"
#include "grove/documents.hpp"
#include "grove/error.hpp"
#include "grove/ingest.hpp"
#include "grove/service.hpp"
#include "grove/synthetic.hpp"

namespace fs = std::filesystem;
using namespace grove;

namespace {

struct Globals {
  std::string filter_metric = "inclusive";
  double filter_fraction = 0.0;
  std::uint32_t bins = 10;
  bool filter_given = false;
};

BuildOptions build_options(const Globals& g) { return {metric_from_string(g.filter_metric), g.filter_fraction}; }

// Loads a cache; explicit filter flags re-filter from the stored tree.
EnsembleGraphFrame load_frame(const fs::path& cache, const Globals& g) {
  EnsembleGraphFrame frame = read_cache(cache);
  if (g.filter_given) {
    frame.options = build_options(g);
    frame.callgraph = filter_graph(cct_to_callgraph(frame.cct), frame.options.filter_metric, frame.options.filter_fraction);
    frame.supergraph = group_by_module(frame.callgraph);
  }
  return frame;
}

ServiceConfig service_config(const Globals& g) {
  ServiceConfig config;
  config.default_bins = g.bins;
  config.layout.bins = g.bins;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ensemble call-graph analytics"};
  app.require_subcommand(1);
  Globals g;
  auto* fm = app.add_option("--filter-metric", g.filter_metric, "Metric used by the node filter")
                 ->check(CLI::IsMember({"inclusive", "exclusive"}));
  auto* ff = app.add_option("--filter-fraction", g.filter_fraction, "Drop call sites below this fraction of the root")
                 ->check(CLI::Range(0.0, 1.0));
  app.add_option("--bins", g.bins, "Histogram bin count")->check(CLI::Range(1, 1000));

  auto* ingest = app.add_subcommand("ingest", "Build a cache from profile files");
  std::vector<fs::path> inputs;
  fs::path out;
  ingest->add_option("files", inputs, "Profile files (canonical JSON or flat text)")->required();
  ingest->add_option("--out", out, "Cache file to write")->required();

  auto* synth = app.add_subcommand("synth", "Write a synthetic ensemble of profiles");
  SyntheticSpec spec;
  std::uint32_t ranks = 4;
  synth->add_option("--seed", spec.seed, "Random seed");
  synth->add_option("--runs", spec.run_count, "Number of runs");
  synth->add_option("--callsites", spec.callsite_count, "Distinct function names");
  synth->add_option("--modules", spec.module_count, "Number of modules");
  synth->add_option("--ranks", ranks, "Ranks per run");
  synth->add_option("--noise", spec.noise, "Multiplicative jitter")->check(CLI::Range(0.0, 1.0));
  synth->add_option("--dropout", spec.dropout, "Per-run subtree dropout probability")->check(CLI::Range(0.0, 1.0));
  synth->add_option("--depth", spec.depth_max, "Maximum tree depth");
  synth->add_flag("--outlier", spec.plant_outlier, "Double one call site's time in the last run");
  synth->add_option("--out", out, "Output directory")->required();

  auto* serve = app.add_subcommand("serve", "Serve the HTTP API from a cache");
  fs::path cache;
  int port = 8080;
  std::string host = "127.0.0.1";
  serve->add_option("--cache", cache, "Cache file")->required();
  serve->add_option("--port", port, "Port")->check(CLI::Range(1, 65535));
  serve->add_option("--host", host, "Bind address");

  auto* export_layout = app.add_subcommand("export-layout", "Write the Sankey layout for a cache");
  fs::path splits_file;
  export_layout->add_option("--cache", cache, "Cache file")->required();
  export_layout->add_option("--splits", splits_file, "JSON split-command list");
  export_layout->add_option("--out", out, "Geometry file to write")->required();

  auto* get = app.add_subcommand("get", "Answer one API request offline and print the response");
  std::string path;
  std::vector<std::string> query;
  get->add_option("path", path, "Endpoint path, e.g. /api/meta")->required();
  get->add_option("--cache", cache, "Cache file")->required();
  get->add_option("-q,--query", query, "Query parameter key=value (repeatable)");

  CLI11_PARSE(app, argc, argv);
  g.filter_given = fm->count() > 0 || ff->count() > 0;

  try {
    if (*ingest) {
      write_cache(out, preprocess(inputs, build_options(g)));
      std::cerr << "wrote " << out.string() << " (" << inputs.size() << " profiles)\n";
    } else if (*synth) {
      spec.rank_counts = {ranks};
      const SyntheticEnsemble ens = generate_synthetic_ensemble(spec);
      fs::create_directories(out);
      for (const Profile& p : ens.profiles) write_text_file(out / (p.run_name + ".json"), serialize_profile(p));
      std::cerr << "wrote " << ens.profiles.size() << " profiles to " << out.string() << "\n";
      if (ens.outlier_callsite) {
        std::cerr << "outlier: " << *ens.outlier_callsite << " in " << *ens.outlier_run << "\n";
      }
    } else if (*serve) {
      const Service service(load_frame(cache, g), service_config(g));
      std::cerr << "serving " << cache.string() << " on http://" << host << ":" << port << "\n";
      serve_http(service, host, port);
    } else if (*export_layout) {
      const EnsembleGraphFrame frame = load_frame(cache, g);
      SplitState splits;
      if (!splits_file.empty()) splits = parse_split_state(read_text_file(splits_file));
      SankeyOptions opts;
      opts.bins = g.bins;
      nlohmann::json doc = to_document(compute_sankey_layout(apply_splits(frame, splits), opts));
      doc["splits"] = to_document(splits);
      write_text_file(out, doc.dump(1) + "\n");
    } else if (*get) {
      const Service service(load_frame(cache, g), service_config(g));
      Request r;
      r.path = path;
      for (const std::string& kv : query) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw CLI::ValidationError("--query", "expected key=value, got '" + kv + "'");
        r.query[kv.substr(0, eq)] = kv.substr(eq + 1);
      }
      const Response res = service.handle(r);
      std::cout << res.body << "\n";
      return res.status == 200 ? 0 : 1;
    }
  } catch (const Error& e) {
    std::cerr << "grove: " << e.what() << "\n";
    return 1;
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "grove: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
