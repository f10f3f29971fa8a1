#include "grove/ingest.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "grove/error.hpp"

namespace grove {

using json = nlohmann::json;

namespace {

std::pair<std::size_t, std::size_t> line_column(std::string_view doc, std::size_t offset) {
  std::size_t line = 1;
  std::size_t column = 1;
  offset = std::min(offset, doc.size());
  for (std::size_t i = 0; i < offset; ++i) {
    if (doc[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

/// Parses JSON rejecting duplicate object keys at any depth.
json parse_strict_json(std::string_view doc) {
  std::vector<std::set<std::string>> keys;
  json::parser_callback_t cb = [&keys](int /*depth*/, json::parse_event_t event, json& parsed) {
    switch (event) {
      case json::parse_event_t::object_start:
        keys.emplace_back();
        break;
      case json::parse_event_t::object_end:
        keys.pop_back();
        break;
      case json::parse_event_t::key: {
        const auto& k = parsed.get_ref<const std::string&>();
        if (!keys.back().insert(k).second) fail(Errc::schema_violation, "duplicate field '" + k + "'");
        break;
      }
      default:
        break;
    }
    return true;
  };
  try {
    return json::parse(doc.begin(), doc.end(), cb);
  } catch (const json::parse_error& e) {
    // e.byte is the 1-based index of the character that failed.
    const std::size_t at = e.byte == 0 ? 0 : e.byte - 1;
    const auto [line, column] = line_column(doc, at);
    std::string msg = e.what();
    if (auto pos = msg.find("syntax error"); pos != std::string::npos) msg = msg.substr(pos);
    throw ParseError(line, column, msg);
  }
}

double unit_scale(std::string_view units) {
  if (units == "s") return 1.0;
  if (units == "ms") return 1e-3;
  if (units == "us") return 1e-6;
  if (units == "ns") return 1e-9;
  fail(Errc::schema_violation, "unknown units '" + std::string(units) + "'");
}

std::optional<double> parse_number(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

ParamValue param_from_json(const std::string& key, const json& v) {
  if (v.is_number()) return v.get<double>();
  if (v.is_boolean()) return std::string(v.get<bool>() ? "true" : "false");
  if (v.is_string()) {
    const auto& s = v.get_ref<const std::string&>();
    if (auto num = parse_number(s)) return *num;
    return s;
  }
  fail(Errc::schema_violation, "parameter '" + key + "' must be a number or string");
}

struct DocContext {
  std::uint32_t ranks;
  double scale;
};

std::vector<double> read_metric(const json& node, const char* field, const DocContext& ctx,
                                const std::string& where) {
  const auto it = node.find(field);
  if (it == node.end()) fail(Errc::schema_violation, where + ": missing '" + field + "'");
  std::vector<double> out;
  if (it->is_number()) {
    out.assign(ctx.ranks, it->get<double>());
  } else if (it->is_array()) {
    if (it->size() != ctx.ranks) {
      fail(Errc::schema_violation, where + ": '" + field + "' has " + std::to_string(it->size()) +
                                       " entries, expected " + std::to_string(ctx.ranks));
    }
    for (const json& v : *it) {
      if (!v.is_number()) fail(Errc::schema_violation, where + ": '" + field + "' entries must be numbers");
      out.push_back(v.get<double>());
    }
  } else {
    fail(Errc::schema_violation, where + ": '" + field + "' must be a number or list");
  }
  for (double& v : out) {
    if (!std::isfinite(v)) fail(Errc::schema_violation, where + ": non-finite time in '" + field + "'");
    if (v < 0.0) fail(Errc::schema_violation, where + ": negative time in '" + field + "'");
    v *= ctx.scale;
  }
  return out;
}

std::string read_string(const json& node, const char* field, const std::string& where) {
  const auto it = node.find(field);
  if (it == node.end()) fail(Errc::schema_violation, where + ": missing '" + field + "'");
  if (!it->is_string()) fail(Errc::schema_violation, where + ": '" + field + "' must be a string");
  return it->get<std::string>();
}

void read_node(const json& j, const DocContext& ctx, Profile& p, const std::string& parent_path) {
  if (!j.is_object()) fail(Errc::schema_violation, parent_path + ": node must be an object");
  static const std::set<std::string> known{"name", "module", "file", "line", "inclusive", "exclusive", "children"};
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) fail(Errc::schema_violation, parent_path + ": unknown node field '" + key + "'");
  }

  Frame frame;
  frame.name = read_string(j, "name", parent_path);
  if (frame.name.empty()) fail(Errc::schema_violation, parent_path + ": empty node name");
  const std::string where = parent_path.empty() ? frame.name : parent_path + "/" + frame.name;
  if (j.contains("module")) {
    frame.module = read_string(j, "module", where);
  }
  if (frame.module.empty()) frame.module = "unknown";
  if (j.contains("file")) frame.file = read_string(j, "file", where);
  if (auto it = j.find("line"); it != j.end()) {
    if (!it->is_number_unsigned()) fail(Errc::schema_violation, where + ": 'line' must be a non-negative integer");
    frame.line = it->get<std::uint32_t>();
  }

  const auto incl = read_metric(j, "inclusive", ctx, where);
  const auto excl = read_metric(j, "exclusive", ctx, where);

  const auto id = static_cast<NodeId>(p.nodes.size());
  CCTNode node;
  node.id = id;
  node.frame = std::move(frame);
  node.metrics.resize(ctx.ranks);
  for (std::uint32_t r = 0; r < ctx.ranks; ++r) {
    if (excl[r] > incl[r]) {
      fail(Errc::schema_violation, where + ": exclusive>inclusive on rank " + std::to_string(r));
    }
    node.metrics[r] = {incl[r], excl[r]};
  }
  p.nodes.push_back(std::move(node));

  if (auto it = j.find("children"); it != j.end()) {
    if (!it->is_array()) fail(Errc::schema_violation, where + ": 'children' must be a list");
    for (const json& child : *it) {
      const auto child_id = static_cast<NodeId>(p.nodes.size());
      read_node(child, ctx, p, where);
      CCTNode& self = p.nodes[id];
      for (NodeId sibling : self.children) {
        if (p.nodes[sibling].frame.same_context(p.nodes[child_id].frame)) {
          fail(Errc::schema_violation, where + ": duplicate sibling context '" + p.nodes[child_id].frame.name + "'");
        }
      }
      self.children.push_back(child_id);
    }
  }
}

}  // namespace

Profile parse_profile(std::string_view document) {
  const json doc = parse_strict_json(document);
  if (!doc.is_object()) fail(Errc::schema_violation, "profile document must be an object");
  static const std::set<std::string> known{"format", "run", "ranks", "units", "params", "root"};
  for (const auto& [key, _] : doc.items()) {
    if (!known.contains(key)) fail(Errc::schema_violation, "unknown document field '" + key + "'");
  }
  const std::string format = read_string(doc, "format", "document");
  if (format != kProfileFormat) fail(Errc::schema_violation, "unsupported format '" + format + "'");

  Profile p;
  p.run_name = read_string(doc, "run", "document");
  if (p.run_name.empty()) fail(Errc::schema_violation, "empty run name");

  const auto ranks = doc.find("ranks");
  if (ranks == doc.end() || !ranks->is_number_unsigned() || ranks->get<std::uint64_t>() == 0 ||
      ranks->get<std::uint64_t>() > (1u << 24)) {
    fail(Errc::schema_violation, "'ranks' must be a positive integer");
  }
  p.rank_count = ranks->get<std::uint32_t>();

  DocContext ctx{p.rank_count, 1.0};
  if (doc.contains("units")) ctx.scale = unit_scale(read_string(doc, "units", "document"));

  if (auto it = doc.find("params"); it != doc.end()) {
    if (!it->is_object()) fail(Errc::schema_violation, "'params' must be an object");
    for (const auto& [key, value] : it->items()) p.params.emplace(key, param_from_json(key, value));
  }

  const auto root = doc.find("root");
  if (root == doc.end()) fail(Errc::schema_violation, "missing 'root'");
  read_node(*root, ctx, p, "");
  return p;
}

namespace {

json node_to_json(const Profile& p, NodeId id) {
  const CCTNode& node = p.node(id);
  json j = json::object();
  j["name"] = node.frame.name;
  j["module"] = node.frame.module;
  if (node.frame.file) j["file"] = *node.frame.file;
  if (node.frame.line) j["line"] = *node.frame.line;
  json incl = json::array();
  json excl = json::array();
  for (const MetricSample& s : node.metrics) {
    incl.push_back(s.inclusive);
    excl.push_back(s.exclusive);
  }
  j["inclusive"] = std::move(incl);
  j["exclusive"] = std::move(excl);
  if (!node.children.empty()) {
    json children = json::array();
    for (NodeId c : node.children) children.push_back(node_to_json(p, c));
    j["children"] = std::move(children);
  }
  return j;
}

}  // namespace

std::string serialize_profile(const Profile& p) {
  json doc = json::object();
  doc["format"] = kProfileFormat;
  doc["run"] = p.run_name;
  doc["ranks"] = p.rank_count;
  json params = json::object();
  for (const auto& [key, value] : p.params) {
    if (const double* d = std::get_if<double>(&value)) {
      params[key] = *d;
    } else {
      params[key] = std::get<std::string>(value);
    }
  }
  doc["params"] = std::move(params);
  if (!p.nodes.empty()) doc["root"] = node_to_json(p, 0);
  return doc.dump(1) + "\n";
}

// ---------------------------------------------------------------------------
// Flat profiles

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

struct FlatNode {
  std::string name;
  std::optional<std::string> module;
  bool explicit_line = false;
  std::map<Rank, MetricSample> samples;
  std::vector<std::size_t> children;  // indices into the builder store
  std::size_t first_line = 0;
};

struct FlatRecord {
  std::size_t line;
  std::vector<std::string> path;
  std::string module;
  std::vector<double> incl;
  std::vector<double> excl;
  std::optional<std::vector<Rank>> ranks;
};

std::vector<double> parse_value_list(std::string_view field, std::string_view key, std::size_t line) {
  field = trim(field);
  if (field.substr(0, key.size()) != key || field.substr(key.size(), 1) != "=") {
    throw ParseError(line, 1, "expected '" + std::string(key) + "=<list>'");
  }
  std::vector<double> out;
  for (std::string_view item : split(field.substr(key.size() + 1), ',')) {
    const auto v = parse_number(item);
    if (!v) throw ParseError(line, 1, "invalid number '" + std::string(trim(item)) + "' in " + std::string(key));
    out.push_back(*v);
  }
  return out;
}

std::vector<Rank> parse_rank_list(std::string_view field, std::size_t line) {
  field = trim(field);
  if (field.substr(0, 6) != "ranks=") throw ParseError(line, 1, "expected 'ranks=<list>'");
  std::vector<Rank> out;
  for (std::string_view item : split(field.substr(6), ',')) {
    item = trim(item);
    const auto dash = item.find('-');
    const auto parse_rank = [&](std::string_view s) {
      s = trim(s);
      Rank r = 0;
      const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), r);
      if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
        throw ParseError(line, 1, "invalid rank '" + std::string(s) + "'");
      }
      return r;
    };
    if (dash == std::string_view::npos) {
      out.push_back(parse_rank(item));
    } else {
      const Rank lo = parse_rank(item.substr(0, dash));
      const Rank hi = parse_rank(item.substr(dash + 1));
      if (hi < lo) throw ParseError(line, 1, "empty rank range");
      for (Rank r = lo; r <= hi; ++r) out.push_back(r);
    }
  }
  return out;
}

}  // namespace

Profile parse_flat_profile(std::string_view document, std::string_view default_run) {
  Profile p;
  p.run_name = std::string(default_run);
  std::optional<std::uint32_t> declared_ranks;
  double scale = 1.0;
  std::vector<FlatRecord> records;

  std::size_t line_no = 0;
  for (std::string_view raw : split(document, '\n')) {
    ++line_no;
    std::string_view line = trim(raw);
    if (line.empty()) continue;
    if (line.front() == '#') {
      line = trim(line.substr(1));
      const auto colon = line.find(':');
      if (colon == std::string_view::npos) continue;  // plain comment
      const std::string_view key = trim(line.substr(0, colon));
      const std::string_view value = trim(line.substr(colon + 1));
      if (key == "run") {
        if (value.empty()) throw ParseError(line_no, 1, "empty run name");
        p.run_name = std::string(value);
      } else if (key == "ranks") {
        const auto v = parse_number(value);
        if (!v || *v < 1 || *v != std::floor(*v)) throw ParseError(line_no, 1, "ranks must be a positive integer");
        declared_ranks = static_cast<std::uint32_t>(*v);
      } else if (key == "units") {
        scale = unit_scale(value);
      } else if (key == "param") {
        const auto eq = value.find('=');
        if (eq == std::string_view::npos) throw ParseError(line_no, 1, "param needs key=value");
        const std::string k(trim(value.substr(0, eq)));
        const std::string_view v = trim(value.substr(eq + 1));
        if (auto num = parse_number(v)) {
          p.params[k] = *num;
        } else {
          p.params[k] = std::string(v);
        }
      }
      continue;
    }

    const auto fields = split(line, '|');
    if (fields.size() != 4 && fields.size() != 5) {
      throw ParseError(line_no, 1, "expected '<path> | <module> | incl=... | excl=... [| ranks=...]'");
    }
    FlatRecord rec;
    rec.line = line_no;
    for (std::string_view seg : split(trim(fields[0]), '/')) {
      seg = trim(seg);
      if (seg.empty()) throw ParseError(line_no, 1, "empty path segment");
      rec.path.emplace_back(seg);
    }
    rec.module = std::string(trim(fields[1]));
    rec.incl = parse_value_list(fields[2], "incl", line_no);
    rec.excl = parse_value_list(fields[3], "excl", line_no);
    if (fields.size() == 5) rec.ranks = parse_rank_list(fields[4], line_no);
    records.push_back(std::move(rec));
  }
  if (records.empty()) throw ParseError(line_no == 0 ? 1 : line_no, 1, "no root");

  // Rank count: declared, else the widest coverage of any record.
  std::uint32_t ranks = 1;
  if (declared_ranks) {
    ranks = *declared_ranks;
  } else {
    for (const FlatRecord& rec : records) {
      if (rec.ranks) {
        for (Rank r : *rec.ranks) ranks = std::max<std::uint32_t>(ranks, r + 1);
      } else {
        ranks = std::max<std::uint32_t>(ranks, static_cast<std::uint32_t>(std::max(rec.incl.size(), rec.excl.size())));
      }
    }
  }
  p.rank_count = ranks;

  std::vector<FlatNode> store;
  std::map<std::vector<std::string>, std::size_t> by_path;
  auto ensure = [&](const std::vector<std::string>& path, std::size_t line) -> std::size_t {
    std::vector<std::string> prefix;
    std::size_t parent = SIZE_MAX;
    for (const std::string& seg : path) {
      prefix.push_back(seg);
      auto it = by_path.find(prefix);
      if (it == by_path.end()) {
        const std::size_t idx = store.size();
        store.push_back(FlatNode{seg, std::nullopt, false, {}, {}, line});
        by_path.emplace(prefix, idx);
        if (parent != SIZE_MAX) store[parent].children.push_back(idx);
        it = by_path.find(prefix);
      }
      parent = it->second;
    }
    return parent;
  };

  const std::string& root_name = records.front().path.front();
  for (const FlatRecord& rec : records) {
    if (rec.path.front() != root_name) {
      throw ParseError(rec.line, 1, "second root '" + rec.path.front() + "' (root is '" + root_name + "')");
    }
    const std::size_t idx = ensure(rec.path, rec.line);
    FlatNode& node = store[idx];
    const std::string module = rec.module.empty() ? "unknown" : rec.module;
    if (node.module && *node.module != module) {
      throw ParseError(rec.line, 1, "module '" + module + "' conflicts with earlier '" + *node.module + "'");
    }
    node.module = module;
    node.explicit_line = true;

    std::vector<Rank> covered;
    if (rec.ranks) {
      covered = *rec.ranks;
    } else {
      const std::size_t width = std::max(rec.incl.size(), rec.excl.size());
      const std::size_t count = width == 1 ? ranks : width;
      for (Rank r = 0; r < count; ++r) covered.push_back(r);
    }
    auto value_at = [&](const std::vector<double>& values, std::size_t i, const char* what) {
      if (values.size() == 1) return values[0];
      if (values.size() != covered.size()) {
        throw ParseError(rec.line, 1, std::string(what) + " list length does not match rank coverage");
      }
      return values[i];
    };
    for (std::size_t i = 0; i < covered.size(); ++i) {
      const Rank r = covered[i];
      if (r >= ranks) throw ParseError(rec.line, 1, "rank " + std::to_string(r) + " exceeds declared rank count");
      const double incl = value_at(rec.incl, i, "incl") * scale;
      const double excl = value_at(rec.excl, i, "excl") * scale;
      if (incl < 0.0 || excl < 0.0 || !std::isfinite(incl) || !std::isfinite(excl)) {
        fail(Errc::schema_violation, "line " + std::to_string(rec.line) + ": negative or non-finite time");
      }
      if (excl > incl) {
        fail(Errc::schema_violation, "line " + std::to_string(rec.line) + ": exclusive>inclusive");
      }
      if (!node.samples.emplace(r, MetricSample{incl, excl}).second) {
        fail(Errc::duplicate_context, "line " + std::to_string(rec.line) + ": duplicate context for path '" +
                                          rec.path.back() + "' on rank " + std::to_string(r));
      }
    }
  }

  // Emit in preorder; implicit nodes get inclusive = sum of children.
  p.nodes.reserve(store.size());
  auto emit = [&](auto&& self, std::size_t idx) -> NodeId {
    const auto id = static_cast<NodeId>(p.nodes.size());
    p.nodes.emplace_back();
    p.nodes[id].id = id;
    std::vector<NodeId> kids;
    for (std::size_t c : store[idx].children) kids.push_back(self(self, c));
    CCTNode& node = p.nodes[id];
    const FlatNode& src = store[idx];
    node.frame.name = src.name;
    node.frame.module = src.module.value_or("unknown");
    node.children = std::move(kids);
    node.metrics.assign(ranks, MetricSample{});
    if (src.explicit_line) {
      for (const auto& [r, s] : src.samples) node.metrics[r] = s;
    } else {
      for (Rank r = 0; r < ranks; ++r) {
        double total = 0.0;
        for (NodeId c : node.children) total += p.nodes[c].metrics[r].inclusive;
        node.metrics[r].inclusive = total;
      }
    }
    return id;
  };
  emit(emit, 0);
  return p;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io_error, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::io_error, "cannot write '" + path.string() + "'");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) fail(Errc::io_error, "write failed for '" + path.string() + "'");
}

Profile load_profile_file(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  const auto first = text.find_first_not_of(" \t\r\n");
  try {
    if (first != std::string::npos && text[first] == '{') return parse_profile(text);
    return parse_flat_profile(text, path.stem().string());
  } catch (const ParseError& e) {
    throw ParseError(e.line(), e.column(), path.string() + ": " + e.detail());
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

}  // namespace grove
