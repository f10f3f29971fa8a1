#include "grove/cache.hpp"

#include <cmath>

#include <json.hpp>

#include "grove/error.hpp"
#include "grove/ingest.hpp"

namespace grove {

using json = nlohmann::json;

namespace {

json values_to_json(std::span<const double> values) {
  json out = json::array();
  for (double v : values) {
    if (std::isnan(v)) {
      out.push_back(nullptr);
    } else {
      out.push_back(v);
    }
  }
  return out;
}

std::vector<double> values_from_json(const json& j, std::size_t expected) {
  if (!j.is_array() || j.size() != expected) fail(Errc::schema_violation, "cache vector has wrong length");
  std::vector<double> out;
  out.reserve(expected);
  for (const json& v : j) {
    if (v.is_null()) {
      out.push_back(kernels::kAbsent);
    } else if (v.is_number()) {
      out.push_back(v.get<double>());
    } else {
      fail(Errc::schema_violation, "cache vector entries must be numbers or null");
    }
  }
  return out;
}

MetricVector metrics_from_json(const json& j, std::size_t runs) {
  MetricVector mv(runs);
  const auto incl = values_from_json(j.at("inclusive"), runs);
  const auto excl = values_from_json(j.at("exclusive"), runs);
  std::copy(incl.begin(), incl.end(), mv.values(Metric::inclusive).begin());
  std::copy(excl.begin(), excl.end(), mv.values(Metric::exclusive).begin());
  return mv;
}

void metrics_to_json(json& j, const MetricVector& mv) {
  j["inclusive"] = values_to_json(mv.values(Metric::inclusive));
  j["exclusive"] = values_to_json(mv.values(Metric::exclusive));
}

json params_to_json(const ParamMap& params) {
  json out = json::object();
  for (const auto& [k, v] : params) {
    if (const double* d = std::get_if<double>(&v)) {
      out[k] = *d;
    } else {
      out[k] = std::get<std::string>(v);
    }
  }
  return out;
}

ParamMap params_from_json(const json& j) {
  ParamMap out;
  for (const auto& [k, v] : j.items()) {
    if (v.is_number()) {
      out[k] = v.get<double>();
    } else {
      out[k] = v.get<std::string>();
    }
  }
  return out;
}

json superedge_to_json(const Superedge& e) {
  return json{{"source", e.source}, {"target", e.target}, {"flow", values_to_json(e.flow)}, {"max_flow", e.max_flow}};
}

Superedge superedge_from_json(const json& j, std::size_t runs) {
  return {j.at("source").get<std::uint32_t>(), j.at("target").get<std::uint32_t>(),
          values_from_json(j.at("flow"), runs), j.at("max_flow").get<double>()};
}

}  // namespace

std::string serialize_cache(const EnsembleGraphFrame& f) {
  json doc = json::object();
  doc["format"] = kCacheFormat;
  doc["options"] = {{"filter_metric", to_string(f.options.filter_metric)},
                    {"filter_fraction", f.options.filter_fraction}};

  json runs = json::array();
  for (const RunInfo& r : f.table.runs()) {
    runs.push_back({{"name", r.name}, {"params", params_to_json(r.params)}, {"ranks", r.rank_count}});
  }
  doc["runs"] = std::move(runs);

  json cct = json::array();
  for (const EnsembleNode& n : f.cct.nodes()) {
    json j = {{"name", n.frame.name}, {"module", n.frame.module}};
    if (n.frame.file) j["file"] = *n.frame.file;
    if (n.frame.line) j["line"] = *n.frame.line;
    j["parent"] = n.parent ? json(*n.parent) : json(nullptr);
    metrics_to_json(j, n.metrics);
    cct.push_back(std::move(j));
  }
  doc["cct"] = std::move(cct);

  json cg_nodes = json::array();
  for (const CallGraphNode& n : f.callgraph.nodes) {
    json j = {{"name", n.name}, {"module", n.module}};
    metrics_to_json(j, n.metrics);
    cg_nodes.push_back(std::move(j));
  }
  json cg_edges = json::array();
  for (const CallGraphEdge& e : f.callgraph.edges) {
    cg_edges.push_back({{"source", e.source}, {"target", e.target}, {"flow", values_to_json(e.flow)}});
  }
  doc["callgraph"] = {{"root", f.callgraph.root}, {"nodes", std::move(cg_nodes)}, {"edges", std::move(cg_edges)}};

  json sg_nodes = json::array();
  for (const Supernode& s : f.supergraph.nodes) {
    json j = {{"label", s.label},
              {"module", s.module},
              {"members", s.members},
              {"entry_functions", s.entry_functions},
              {"max_inclusive", s.max_inclusive},
              {"max_exclusive", s.max_exclusive}};
    metrics_to_json(j, s.metrics);
    sg_nodes.push_back(std::move(j));
  }
  json sg_edges = json::array();
  for (const Superedge& e : f.supergraph.edges) sg_edges.push_back(superedge_to_json(e));
  json sg_cycle = json::array();
  for (const Superedge& e : f.supergraph.cycle_edges) sg_cycle.push_back(superedge_to_json(e));
  doc["supergraph"] = {{"root", f.supergraph.root},
                       {"nodes", std::move(sg_nodes)},
                       {"edges", std::move(sg_edges)},
                       {"cycle_edges", std::move(sg_cycle)}};

  // Table rows grouped into per-rank runs: [run, module, callsite, first_rank, [incl], [excl]].
  json groups = json::array();
  const auto rows = f.table.rows();
  std::size_t i = 0;
  while (i < rows.size()) {
    std::size_t j = i + 1;
    while (j < rows.size() && rows[j].run == rows[i].run && rows[j].module == rows[i].module &&
           rows[j].callsite == rows[i].callsite && rows[j].rank == rows[j - 1].rank + 1) {
      ++j;
    }
    json incl = json::array();
    json excl = json::array();
    for (std::size_t k = i; k < j; ++k) {
      incl.push_back(rows[k].inclusive);
      excl.push_back(rows[k].exclusive);
    }
    groups.push_back(json::array({rows[i].run, rows[i].module, rows[i].callsite, rows[i].rank, std::move(incl),
                                  std::move(excl)}));
    i = j;
  }
  doc["table"] = {{"symbols", f.table.symbols().strings()}, {"rows", std::move(groups)}};
  return doc.dump() + "\n";
}

EnsembleGraphFrame parse_cache(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document.begin(), document.end());
  } catch (const json::parse_error& e) {
    throw ParseError(1, e.byte, std::string("cache: ") + e.what());
  }
  try {
    if (doc.at("format").get<std::string>() != kCacheFormat) {
      fail(Errc::schema_violation, "unsupported cache format");
    }
    EnsembleGraphFrame f;
    f.options.filter_metric = metric_from_string(doc.at("options").at("filter_metric").get<std::string>());
    f.options.filter_fraction = doc.at("options").at("filter_fraction").get<double>();

    std::vector<RunInfo> runs;
    std::vector<std::string> run_names;
    for (const json& r : doc.at("runs")) {
      runs.push_back({r.at("name").get<std::string>(), params_from_json(r.at("params")), r.at("ranks").get<std::uint32_t>()});
      run_names.push_back(runs.back().name);
    }
    const std::size_t n = runs.size();

    std::vector<EnsembleNode> nodes;
    for (const json& j : doc.at("cct")) {
      EnsembleNode node;
      node.frame.name = j.at("name").get<std::string>();
      node.frame.module = j.at("module").get<std::string>();
      if (j.contains("file")) node.frame.file = j.at("file").get<std::string>();
      if (j.contains("line")) node.frame.line = j.at("line").get<std::uint32_t>();
      if (!j.at("parent").is_null()) {
        node.parent = j.at("parent").get<std::uint32_t>();
        if (*node.parent >= nodes.size()) fail(Errc::schema_violation, "cache CCT parent out of order");
        nodes[*node.parent].children.push_back(static_cast<std::uint32_t>(nodes.size()));
      }
      node.metrics = metrics_from_json(j, n);
      nodes.push_back(std::move(node));
    }
    f.cct = EnsembleCCT(run_names, std::move(nodes));

    const json& cg = doc.at("callgraph");
    f.callgraph.run_names = run_names;
    f.callgraph.root = cg.at("root").get<std::uint32_t>();
    for (const json& j : cg.at("nodes")) {
      f.callgraph.nodes.push_back({j.at("name").get<std::string>(), j.at("module").get<std::string>(), metrics_from_json(j, n)});
    }
    for (const json& j : cg.at("edges")) {
      f.callgraph.edges.push_back({j.at("source").get<std::uint32_t>(), j.at("target").get<std::uint32_t>(),
                                   values_from_json(j.at("flow"), n)});
    }

    const json& sg = doc.at("supergraph");
    f.supergraph.run_names = run_names;
    f.supergraph.root = sg.at("root").get<std::uint32_t>();
    for (const json& j : sg.at("nodes")) {
      Supernode s;
      s.label = j.at("label").get<std::string>();
      s.module = j.at("module").get<std::string>();
      s.members = j.at("members").get<std::vector<std::string>>();
      s.entry_functions = j.at("entry_functions").get<std::vector<std::string>>();
      s.max_inclusive = j.at("max_inclusive").get<double>();
      s.max_exclusive = j.at("max_exclusive").get<double>();
      s.metrics = metrics_from_json(j, n);
      f.supergraph.nodes.push_back(std::move(s));
    }
    for (const json& j : sg.at("edges")) f.supergraph.edges.push_back(superedge_from_json(j, n));
    for (const json& j : sg.at("cycle_edges")) f.supergraph.cycle_edges.push_back(superedge_from_json(j, n));

    const json& table = doc.at("table");
    StringPool symbols;
    for (const json& s : table.at("symbols")) symbols.intern(s.get<std::string>());
    std::vector<MetricRow> rows;
    for (const json& g : table.at("rows")) {
      const auto run = g.at(0).get<std::uint32_t>();
      const auto module = g.at(1).get<std::uint32_t>();
      const auto callsite = g.at(2).get<std::uint32_t>();
      const auto first = g.at(3).get<Rank>();
      const json& incl = g.at(4);
      const json& excl = g.at(5);
      if (incl.size() != excl.size()) fail(Errc::schema_violation, "cache table row group is ragged");
      for (std::size_t k = 0; k < incl.size(); ++k) {
        rows.push_back({run, module, callsite, first + static_cast<Rank>(k), incl.at(k).get<double>(),
                        excl.at(k).get<double>()});
      }
    }
    f.table = MetricTable::from_rows(std::move(runs), std::move(symbols), std::move(rows));
    return f;
  } catch (const json::exception& e) {
    fail(Errc::schema_violation, std::string("malformed cache: ") + e.what());
  }
}

void write_cache(const std::filesystem::path& path, const EnsembleGraphFrame& frame) {
  write_text_file(path, serialize_cache(frame));
}

EnsembleGraphFrame read_cache(const std::filesystem::path& path) { return parse_cache(read_text_file(path)); }

}  // namespace grove
