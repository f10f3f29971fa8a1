#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "grove/ensemble.hpp"

namespace grove {

inline constexpr std::string_view kCacheFormat = "cgcache-1";

/// Serializes a built ensemble: run list, unfiltered CCT (absent slots as
/// null), filtered call graph, super graph and rank-level metric table.
/// Output is byte-stable for equal inputs.
std::string serialize_cache(const EnsembleGraphFrame& frame);

EnsembleGraphFrame parse_cache(std::string_view document);

void write_cache(const std::filesystem::path& path, const EnsembleGraphFrame& frame);
EnsembleGraphFrame read_cache(const std::filesystem::path& path);

}  // namespace grove
