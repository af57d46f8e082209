#pragma once

#include "scenegen/scene_model.hpp"

#include <string>
#include <vector>

#include "json.hpp"

// JSON shapes exchanged with the model: position lists, relation lists,
// increment lists and placement lists, in the layouts the prompts ask for.
namespace scenegen::layout {

/// [{"name", "position", "orientation"}]; positions as "[x, y, 0]" strings.
nlohmann::ordered_json positions_to_json(const std::vector<PositionRecord>& positions);
nlohmann::ordered_json placements_to_json(const std::vector<Placement>& placements);

/// [{"object 1", "relation", "object 2"}].
nlohmann::ordered_json relations_to_json(const std::vector<RelationRecord>& relations);
nlohmann::ordered_json deltas_to_json(const std::vector<DeltaRecord>& deltas);

/// Reads a position list. A position that is not a coordinate is kept as
/// location text; an orientation that is not a number is kept as text.
std::vector<PositionRecord> positions_from_json(const nlohmann::json& value);
std::vector<RelationRecord> relations_from_json(const nlohmann::json& value);
std::vector<DeltaRecord> deltas_from_json(const nlohmann::json& value);

/// Binds a placement list to `objects` by display name (case-insensitive).
/// Throws ParseError("Positions") on unknown names, duplicates or
/// malformed coordinates. Objects the list omits are left out.
std::vector<Placement> placements_from_json(const nlohmann::json& value, const std::vector<ObjectInstance>& objects);

/// Pretty form used inside prompts and scripted answers.
std::string pretty(const nlohmann::ordered_json& value);

/// JSON string array of display names, e.g. ["Turntable", "Conveyor 1"].
std::string name_list(const std::vector<ObjectInstance>& objects);

} // namespace scenegen::layout
