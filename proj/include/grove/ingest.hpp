#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "grove/profile.hpp"

namespace grove {

inline constexpr std::string_view kProfileFormat = "cgprof-1";

/// Parses a canonical "cgprof-1" profile document.
///
/// Layout:
///   {"format": "cgprof-1", "run": "<name>", "ranks": <int>,
///    "units": "s"|"ms"|"us"|"ns" (optional, default "s"),
///    "params": {"<key>": <number|string>, ...} (optional),
///    "root": <node>}
///   node := {"name", "module"?, "file"?, "line"?,
///            "inclusive": [per-rank] | scalar, "exclusive": [per-rank] | scalar,
///            "children": [node, ...]?}
///
/// A scalar metric applies to every rank. Missing modules become "unknown".
/// Node ids are assigned in preorder. Throws ParseError on malformed text and
/// Error(schema_violation) on well-formed text that breaks the schema.
Profile parse_profile(std::string_view document);

/// Writes the canonical form: sorted keys, per-rank lists, seconds.
/// Doubles use shortest round-trip formatting.
std::string serialize_profile(const Profile& p);

/// Parses the line-oriented flat form:
///
///   # run: <name>          (optional header directives)
///   # ranks: <int>
///   # units: ms
///   # param: <key>=<value>
///   <a/b/c> | <module> | incl=<v,v,...> | excl=<v,v,...> [| ranks=<0,2-3>]
///
/// Paths are merged into a tree. A path prefix that never appears on its own
/// becomes an intermediate node with module "unknown", zero exclusive time
/// and inclusive time equal to the sum of its children.
Profile parse_flat_profile(std::string_view document, std::string_view default_run = "flat");

/// Reads a profile file in either format (documents starting with '{' are
/// canonical). Errors are prefixed with the path.
Profile load_profile_file(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace grove
