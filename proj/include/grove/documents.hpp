#pragma once

// JSON documents for everything the service and CLI hand to clients. Keys
// come out sorted and doubles in shortest round-trip form; absent values
// are null.

#include <json.hpp>

#include "grove/analytics.hpp"
#include "grove/layout.hpp"
#include "grove/projection.hpp"

namespace grove {

nlohmann::json to_document(const Histogram& h);
nlohmann::json to_document(const BoxplotStats& b);
nlohmann::json to_document(const Scatter& s);
nlohmann::json to_document(const TargetOverlay& t);
nlohmann::json to_document(const DiffGraph& d);
nlohmann::json to_document(const ProjectionResult& p);
nlohmann::json to_document(const SankeyLayout& layout);
nlohmann::json to_document(const IcicleTree& tree);
nlohmann::json to_document(const SplitState& state);

/// Accepts [{"op": "split", "group": G} | {"op": "reveal", "group": G, "callsite": C}, ...].
/// Throws invalid_argument on any other shape.
SplitState split_state_from_document(const nlohmann::json& doc);
SplitState parse_split_state(std::string_view text);

}  // namespace grove
