#include "scenegen/placement/refinement.hpp"

#include "scenegen/error.hpp"
#include "scenegen/layout/formats.hpp"
#include "scenegen/llm/structured.hpp"

namespace scenegen::placement {

llm::Bindings assignment_bindings(std::string_view description, const std::vector<ObjectInstance>& objects,
                                  const LayoutInfo& layout) {
    return {
        {"prompt", std::string(description)},
        {"objects", layout::name_list(objects)},
        {"positions", layout::pretty(layout::positions_to_json(layout.positions))},
        {"relations", layout::pretty(layout::relations_to_json(layout.relations))},
    };
}

std::vector<Placement> parse_assignment(std::string_view answer, const std::vector<ObjectInstance>& objects) {
    try {
        const auto parsed = llm::parse_structured(answer, llm::TemplateId::placement_assignment);
        return layout::placements_from_json(parsed.sections.back().payload, objects);
    } catch (const ParseError& e) {
        // A corrected answer sometimes comes back as the final list alone.
        if (answer.find("Step 1") != std::string_view::npos) {
            throw;
        }
        const auto block = llm::find_json_block(answer);
        if (!block) {
            throw;
        }
        nlohmann::json value;
        try {
            value = nlohmann::json::parse(*block);
        } catch (const nlohmann::json::parse_error&) {
            throw e;
        }
        if (!value.is_array()) {
            throw;
        }
        return layout::placements_from_json(value, objects);
    }
}

RefinementResult assign_with_refinement(const std::vector<ObjectInstance>& objects, const LayoutInfo& layout,
                                        std::string_view description, llm::Gateway& gateway,
                                        const RefinementOptions& options) {
    const Facts facts = interpret(objects, layout);
    llm::PromptRequest request;
    request.template_id = llm::TemplateId::placement_assignment;
    request.bindings = assignment_bindings(description, objects, layout);

    RefinementResult result;
    std::string answer = gateway.chat(result.transcript, request);
    const int limit = std::max(1, options.max_iters);
    int reasks = 0;
    for (;;) {
        std::vector<Placement> placements;
        try {
            placements = parse_assignment(answer, objects);
        } catch (const ParseError& e) {
            if (reasks >= 2) {
                throw StageError("assignment", e.what());
            }
            ++reasks;
            answer = gateway.follow_up(result.transcript, request,
                                       std::string("Your response could not be parsed (") + e.what() +
                                           "). Answer again in the required format.");
            continue;
        }
        ++result.iterations;
        result.placements = std::move(placements);
        result.report = verify(result.placements, facts, options.rules);
        if (result.report.ok || result.iterations >= limit) {
            break;
        }
        llm::PromptRequest feedback = request;
        feedback.template_id = llm::TemplateId::placement_feedback;
        feedback.bindings["feedback"] = render_feedback(result.report, result.placements);
        answer = gateway.follow_up(result.transcript, feedback, llm::render_prompt(feedback));
    }
    return result;
}

} // namespace scenegen::placement
