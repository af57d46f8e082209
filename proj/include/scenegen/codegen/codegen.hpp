#pragma once

#include "scenegen/llm/gateway.hpp"
#include "scenegen/scene_model.hpp"

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace scenegen::codegen {

inline constexpr std::string_view kMarkerModelList = "/* create model list */";
inline constexpr std::string_view kMarkerLoadModels = "/* load models */";
inline constexpr std::string_view kMarkerAddObjects = "/* add objects into the scene */";

struct CodeTemplate {
    std::string skeleton;  // C# with the three fill markers
    std::string guidance;  // per-API usage notes for loading models

    /// Skeleton taken from the code-generation prompt.
    static const CodeTemplate& standard();
};

/// Usage notes for loading the model kinds present in `objects`.
std::string loading_guidance(const std::vector<ObjectInstance>& objects, const ObjectLibrary& library);

/// "<snake_case_kind>Models".
std::string model_list_name(std::string_view library_name);

/// Fills the template mechanically: one model list per kind, one loading
/// check per kind, one insertion block per placement.
std::string emit_csharp(const std::vector<Placement>& placements, const ObjectLibrary& library,
                        const CodeTemplate& tmpl = CodeTemplate::standard());

struct CodeReport {
    bool ok = true;
    std::vector<std::string> missing_keywords;
    std::vector<std::string> forbidden_constructs;
    std::map<std::string, bool> per_object_coverage;
    std::size_t insertions = 0;

    std::string describe() const;
};

nlohmann::json to_json(const CodeReport& report);

/// API keywords every scene program must use.
const std::vector<std::string>& required_keywords();

CodeReport validate_code(std::string_view code, const std::vector<Placement>& placements);

/// Asks the model for the program and validates it, feeding the report back
/// up to `feedback_rounds` times. Throws CodegenError with the last report.
std::string emit_csharp_llm(const Scene& scene, const ObjectLibrary& library, llm::Gateway& gateway,
                            int feedback_rounds = 2);

/// Scene JSON: {"description", "objects": [{"name", "model", "position", "orientation"}]},
/// two-space indentation, newline-terminated.
std::string emit_scene_json(const Scene& scene);

/// Inverse of emit_scene_json. Throws ParseError on malformed input and on
/// models outside `library`.
Scene parse_scene_json(std::string_view text, const ObjectLibrary& library = ObjectLibrary::standard());

/// Plan view: 1 m grid, one glyph per object with a heading tick, and a
/// legend. `scale` is pixels per millimetre.
std::string emit_svg(const std::vector<Placement>& placements, double scale = 0.05);

} // namespace scenegen::codegen
