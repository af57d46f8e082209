#pragma once

#include "scenegen/scene_model.hpp"

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Deterministic reading of scene descriptions written in a restricted
// English: object mentions with quantities, bracketed coordinates, "at the
// center", orientations, and relation phrases between consecutive mentions.
namespace scenegen::layout {

/// Library kind for an object phrase ("kuka robot", "worktable", "fence"),
/// or nullopt. Plural forms are accepted.
std::optional<std::string> kind_for_phrase(std::string_view phrase);

struct SpecPosition {
    std::vector<Coordinate> coords;  // more than one means the text contradicts itself
    bool at_center = false;
    std::optional<double> dir;
};

struct SpecRelation {
    std::size_t subject = 0;
    std::size_t object = 0;
    std::string text;                        // relation phrase, subject relative to object
    std::optional<std::size_t> between_second;  // set for "between <object> and <second>"
};

struct SceneSpec {
    std::vector<std::string> kinds;     // library name per instance, in order of introduction
    std::vector<std::string> surfaces;  // the phrase that introduced each instance
    std::map<std::size_t, SpecPosition> positions;
    std::vector<SpecRelation> relations;
    bool covered = true;                // false when the text goes beyond the grammar
    std::vector<std::string> notes;     // reasons for reduced coverage

    std::vector<ObjectInstance> instances() const { return number_instances(kinds); }
    /// Position and relation facts keyed by instance display names.
    LayoutInfo layout() const;
    /// Relation text as it appears in layout(), with between-references named.
    std::string relation_text(const SpecRelation& r) const;
};

SceneSpec parse_description(std::string_view description);

/// Rewrites object phrases to canonical library names, keeping everything
/// else, on a single line.
std::string canonicalize_description(std::string_view description);

/// Renders a spec as canonical sentences that parse back to the same facts.
/// `style` picks among equivalent phrasings.
std::string render_description(const SceneSpec& spec, unsigned style = 0);

} // namespace scenegen::layout
