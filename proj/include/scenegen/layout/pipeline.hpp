#pragma once

#include "scenegen/llm/gateway.hpp"
#include "scenegen/scene_model.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace scenegen::layout {

inline constexpr std::string_view kRemoved = "REMOVED";

struct Substitution {
    std::string original;
    std::string replacement;  // library name, or kRemoved
};

struct RetrievalResult {
    std::vector<ObjectInstance> objects;
    std::string rewritten_description;
    std::vector<Substitution> substitutions;
};

/// Library entry for a model-proposed object name: exact, then
/// case-insensitive, then by object phrase ("kuka robot" -> KR125).
/// Stations, workstations and scenes are never objects.
std::optional<std::string> match_library_name(std::string_view name, const ObjectLibrary& library);

/// Object retrieval stage. Throws PreconditionError on a blank description
/// and StageError("retrieval") when the answer stays unparseable after two
/// re-asks.
RetrievalResult retrieve_objects(std::string_view description, const ObjectLibrary& library, llm::Gateway& gateway);

/// Maps names in extracted positions and relations onto `objects`
/// (case-insensitive) and collects the remaining names as anchors. Throws
/// ParseError naming any name that looks like a library object but is not
/// in `objects`. Keeps the first relation of each unordered pair.
LayoutInfo resolve_layout(std::vector<PositionRecord> positions, std::vector<RelationRecord> relations,
                          const std::vector<ObjectInstance>& objects);

/// Layout extraction stage. Unparseable answers are re-asked twice; the last
/// ParseError is rethrown.
LayoutInfo extract_layout(std::string_view description, const std::vector<ObjectInstance>& objects,
                          llm::Gateway& gateway);

nlohmann::ordered_json to_json(const RetrievalResult& result);
nlohmann::ordered_json to_json(const LayoutInfo& layout);

} // namespace scenegen::layout
