#pragma once

#include "scenegen/llm/templates.hpp"
#include "scenegen/scene_model.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace scenegen::llm {

struct Section {
    std::string header;    // e.g. "Step 2: Calculate Coordinates", or "Error"
    std::string analysis;
    std::string label;     // list label the payload was read from
    nlohmann::json payload;  // array/object, string, or boolean
};

struct StructuredOutput {
    TemplateId template_id = TemplateId::object_retrieval;
    std::vector<Section> sections;

    const Section& at(std::size_t index) const { return sections.at(index); }
};

/// Number of sections the response skeleton of `id` declares.
std::size_t expected_sections(TemplateId id);

/// Parses a model response against the skeleton of `id`. Code fences and
/// surrounding prose are tolerated. Throws ParseError naming the section.
StructuredOutput parse_structured(std::string_view text, TemplateId id);

/// First balanced JSON array or object starting at or after `from`.
/// Returns the raw text, or nullopt when there is no opening bracket.
std::optional<std::string> find_json_block(std::string_view text, std::size_t from = 0);

/// Coordinates arrive either as "[x, y, 0]" strings or as native arrays.
std::optional<Coordinate> coordinate_from_json(const nlohmann::json& value);

/// Orientation as a number, a numeric string ("90", "90 degrees"), or nullopt.
std::optional<double> orientation_from_json(const nlohmann::json& value);

/// Text of a JSON scalar; strings are returned unquoted.
std::string json_text(const nlohmann::json& value);

} // namespace scenegen::llm
