#include "scenegen/layout/formats.hpp"

#include "scenegen/error.hpp"
#include "scenegen/llm/structured.hpp"
#include "scenegen/text.hpp"

#include <set>

namespace scenegen::layout {

namespace {

std::string orientation_text(const PositionRecord& p) {
    if (p.dir) {
        return text::format_number(p.dir->degrees());
    }
    return p.direction_text;
}

std::string field(const nlohmann::json& item, const char* key) {
    if (!item.is_object() || !item.contains(key)) {
        return {};
    }
    return llm::json_text(item.at(key));
}

const nlohmann::json& require_array(const nlohmann::json& value, const std::string& section) {
    if (!value.is_array()) {
        throw ParseError(section, section + " must be a JSON list");
    }
    return value;
}

} // namespace

nlohmann::ordered_json positions_to_json(const std::vector<PositionRecord>& positions) {
    auto out = nlohmann::ordered_json::array();
    for (const auto& p : positions) {
        nlohmann::ordered_json item;
        item["name"] = p.name;
        item["position"] = p.coord ? format_coordinate(*p.coord) : p.location_text;
        item["orientation"] = orientation_text(p);
        out.push_back(std::move(item));
    }
    return out;
}

nlohmann::ordered_json placements_to_json(const std::vector<Placement>& placements) {
    auto out = nlohmann::ordered_json::array();
    for (const auto& p : placements) {
        nlohmann::ordered_json item;
        item["name"] = p.name();
        item["position"] = format_coordinate(p.coord);
        item["orientation"] = text::format_number(p.dir.degrees());
        out.push_back(std::move(item));
    }
    return out;
}

nlohmann::ordered_json relations_to_json(const std::vector<RelationRecord>& relations) {
    auto out = nlohmann::ordered_json::array();
    for (const auto& r : relations) {
        nlohmann::ordered_json item;
        item["object 1"] = r.subject;
        item["relation"] = r.text;
        item["object 2"] = r.object;
        out.push_back(std::move(item));
    }
    return out;
}

nlohmann::ordered_json deltas_to_json(const std::vector<DeltaRecord>& deltas) {
    auto out = nlohmann::ordered_json::array();
    for (const auto& d : deltas) {
        nlohmann::ordered_json item;
        item["object 1"] = d.subject;
        item["relation"] = format_coordinate({d.dx, d.dy});
        item["object 2"] = d.object;
        out.push_back(std::move(item));
    }
    return out;
}

std::vector<PositionRecord> positions_from_json(const nlohmann::json& value) {
    std::vector<PositionRecord> out;
    for (const auto& item : require_array(value, "Positions")) {
        PositionRecord p;
        p.name = text::trim(field(item, "name"));
        if (p.name.empty()) {
            throw ParseError("Positions", "position entry without a name");
        }
        if (item.contains("position")) {
            if (auto c = llm::coordinate_from_json(item.at("position"))) {
                p.coord = *c;
            } else {
                p.location_text = text::trim(field(item, "position"));
            }
        }
        if (item.contains("orientation")) {
            if (auto d = llm::orientation_from_json(item.at("orientation"))) {
                p.dir = Direction(*d);
            } else {
                p.direction_text = text::trim(field(item, "orientation"));
            }
        }
        if (p.has_location() || p.has_direction()) {
            out.push_back(std::move(p));
        }
    }
    return out;
}

std::vector<RelationRecord> relations_from_json(const nlohmann::json& value) {
    std::vector<RelationRecord> out;
    for (const auto& item : require_array(value, "Relative Positions")) {
        RelationRecord r{text::trim(field(item, "object 1")), text::trim(field(item, "object 2")),
                         text::trim(field(item, "relation"))};
        if (r.subject.empty() || r.object.empty()) {
            throw ParseError("Relative Positions", "relation entry without both object names");
        }
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<DeltaRecord> deltas_from_json(const nlohmann::json& value) {
    std::vector<DeltaRecord> out;
    for (const auto& item : require_array(value, "New Relative Positions")) {
        const auto c = item.contains("relation") ? llm::coordinate_from_json(item.at("relation")) : std::nullopt;
        if (!c) {
            continue;
        }
        out.push_back({text::trim(field(item, "object 1")), text::trim(field(item, "object 2")), c->x, c->y});
    }
    return out;
}

std::vector<Placement> placements_from_json(const nlohmann::json& value, const std::vector<ObjectInstance>& objects) {
    std::vector<Placement> out;
    std::set<std::string> seen;
    for (const auto& item : require_array(value, "Positions")) {
        const std::string name = text::trim(field(item, "name"));
        const ObjectInstance* obj = nullptr;
        for (const auto& o : objects) {
            if (text::iequals(o.display_name, name)) {
                obj = &o;
                break;
            }
        }
        if (!obj) {
            throw ParseError("Positions", "unknown object '" + name + "' in positions");
        }
        if (!seen.insert(obj->display_name).second) {
            throw ParseError("Positions", "object '" + obj->display_name + "' is listed twice");
        }
        const auto c = item.contains("position") ? llm::coordinate_from_json(item.at("position")) : std::nullopt;
        if (!c) {
            throw ParseError("Positions", "object '" + obj->display_name + "' has no coordinate");
        }
        const auto d = item.contains("orientation") ? llm::orientation_from_json(item.at("orientation")) : std::nullopt;
        out.push_back({*obj, *c, Direction(d.value_or(0.0))});
    }
    return out;
}

std::string pretty(const nlohmann::ordered_json& value) {
    return value.dump(4);
}

std::string name_list(const std::vector<ObjectInstance>& objects) {
    std::vector<std::string> quoted;
    for (const auto& o : objects) {
        quoted.push_back(nlohmann::json(o.display_name).dump());
    }
    return "[" + text::join(quoted, ", ") + "]";
}

} // namespace scenegen::layout
