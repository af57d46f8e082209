#include "scenegen/pipeline.hpp"

#include "scenegen/layout/formats.hpp"

namespace scenegen {

PipelineResult run_pipeline(std::string_view description, llm::Gateway& gateway, const PipelineOptions& options) {
    const ObjectLibrary& library = options.library ? *options.library : ObjectLibrary::standard();

    PipelineResult result;
    result.retrieval = layout::retrieve_objects(description, library, gateway);
    result.layout = layout::extract_layout(result.retrieval.rewritten_description, result.retrieval.objects, gateway);
    result.assignment = placement::assign_with_refinement(result.retrieval.objects, result.layout,
                                                          result.retrieval.rewritten_description, gateway,
                                                          options.refinement);
    result.ok = result.assignment.report.ok;

    result.scene.description = std::string(description);
    for (const auto& o : result.retrieval.objects) {
        for (const auto& p : result.assignment.placements) {
            if (p.object == o) {
                result.scene.placements.push_back(p);
            }
        }
    }

    switch (options.code) {
    case CodeMode::none: break;
    case CodeMode::deterministic:
        result.csharp = codegen::emit_csharp(result.scene.placements, library);
        break;
    case CodeMode::model:
        result.csharp = codegen::emit_csharp_llm(result.scene, library, gateway, options.code_feedback_rounds);
        break;
    }
    if (result.csharp) {
        result.code_report = codegen::validate_code(*result.csharp, result.scene.placements);
    }
    return result;
}

nlohmann::ordered_json stages_json(const PipelineResult& result) {
    nlohmann::ordered_json j;
    j["retrieval"] = layout::to_json(result.retrieval);
    j["layout"] = layout::to_json(result.layout);
    nlohmann::ordered_json assignment;
    assignment["iterations"] = result.assignment.iterations;
    assignment["placements"] = layout::placements_to_json(result.assignment.placements);
    assignment["verification"] = placement::to_json(result.assignment.report);
    auto transcript = nlohmann::ordered_json::array();
    for (const auto& m : result.assignment.transcript) {
        transcript.push_back({{"role", m.role}, {"content", m.content}});
    }
    assignment["transcript"] = std::move(transcript);
    j["assignment"] = std::move(assignment);
    j["ok"] = result.ok;
    if (result.code_report) {
        j["code"] = codegen::to_json(*result.code_report);
    }
    return j;
}

} // namespace scenegen
