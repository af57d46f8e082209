#include "scenegen/evolve/evolve.hpp"

#include "scenegen/error.hpp"
#include "scenegen/layout/formats.hpp"
#include "scenegen/layout/pipeline.hpp"
#include "scenegen/llm/structured.hpp"
#include "scenegen/placement/refinement.hpp"

#include <atomic>
#include <thread>

namespace scenegen::evolve {

std::string_view to_string(TrajectoryTask task) {
    switch (task) {
    case TrajectoryTask::assign: return "assign";
    case TrajectoryTask::verify_pos: return "verify_pos";
    case TrajectoryTask::verify_neg: return "verify_neg";
    case TrajectoryTask::reassign: return "reassign";
    }
    return "assign";
}

nlohmann::ordered_json to_json(const TrajectoryRecord& record) {
    nlohmann::ordered_json j;
    j["task"] = std::string(to_string(record.task));
    j["description_id"] = record.description_id;
    auto messages = nlohmann::ordered_json::array();
    for (const auto& m : record.messages) {
        messages.push_back({{"role", m.role}, {"content", m.content}});
    }
    j["messages"] = std::move(messages);
    j["loss_mask"] = record.loss_mask;
    j["split"] = record.split;
    return j;
}

namespace {

struct Judgement {
    llm::Conversation messages;
    bool error = false;
    std::string relations;
    std::string analysis;
};

Judgement judge(llm::Gateway& strong, const std::string& description, const std::vector<Placement>& placements) {
    llm::PromptRequest request;
    request.template_id = llm::TemplateId::placement_verification;
    request.bindings = {{"prompt", description},
                        {"placements", layout::pretty(layout::placements_to_json(placements))}};
    Judgement j;
    const auto answer = strong.chat(j.messages, request);
    const auto parsed = llm::parse_structured(answer, llm::TemplateId::placement_verification);
    j.relations = llm::json_text(parsed.at(0).payload);
    j.analysis = llm::json_text(parsed.at(1).payload);
    j.error = parsed.at(2).payload.get<bool>();
    return j;
}

std::vector<bool> final_only(std::size_t n) {
    std::vector<bool> mask(n, false);
    if (n) {
        mask.back() = true;
    }
    return mask;
}

std::vector<TrajectoryRecord> collect_one(const DescriptionRecord& record, llm::Gateway& strong, llm::Gateway& weak,
                                          const CollectOptions& options) {
    const double u = static_cast<double>(mix64(fnv1a64(record.id) ^ options.seed) >> 11) * 0x1.0p-53;
    const std::string split = u < options.validation_fraction ? "validation" : "train";

    std::vector<TrajectoryRecord> out;
    auto emit = [&](TrajectoryTask task, llm::Conversation messages) {
        TrajectoryRecord r;
        r.task = task;
        r.description_id = record.id;
        r.loss_mask = final_only(messages.size());
        r.messages = std::move(messages);
        r.split = split;
        out.push_back(std::move(r));
    };

    const auto retrieval = layout::retrieve_objects(record.text, ObjectLibrary::standard(), strong);
    const auto& s = retrieval.rewritten_description;
    const auto info = layout::extract_layout(s, retrieval.objects, strong);
    const auto facts = placement::interpret(retrieval.objects, info);

    llm::PromptRequest assign;
    assign.template_id = llm::TemplateId::placement_assignment;
    assign.bindings = placement::assignment_bindings(s, retrieval.objects, info);

    // Strong assignment and its verification.
    llm::Conversation strong_turns;
    const auto strong_answer = strong.chat(strong_turns, assign);
    const auto strong_placements = placement::parse_assignment(strong_answer, retrieval.objects);
    emit(TrajectoryTask::assign, strong_turns);
    const auto strong_check = judge(strong, s, strong_placements);
    emit(strong_check.error ? TrajectoryTask::verify_neg : TrajectoryTask::verify_pos, strong_check.messages);

    // Weak assignment, judged by the strong model and repaired on error.
    llm::Conversation weak_turns;
    const auto weak_answer = weak.chat(weak_turns, assign);
    std::vector<Placement> weak_placements;
    try {
        weak_placements = placement::parse_assignment(weak_answer, retrieval.objects);
    } catch (const ParseError&) {
        return out;
    }
    const auto weak_check = judge(strong, s, weak_placements);
    if (!weak_check.error) {
        return out;
    }
    emit(TrajectoryTask::verify_neg, weak_check.messages);

    llm::PromptRequest feedback = assign;
    feedback.template_id = llm::TemplateId::placement_feedback;
    feedback.bindings["feedback"] = "Relations: " + weak_check.relations + "\nAnalysis: " + weak_check.analysis;
    llm::Conversation repair = weak_turns;
    const auto fixed = strong.follow_up(repair, feedback, llm::render_prompt(feedback));
    const auto fixed_placements = placement::parse_assignment(fixed, retrieval.objects);
    if (placement::verify(fixed_placements, facts, options.rules).ok) {
        emit(TrajectoryTask::reassign, repair);
    }
    return out;
}

} // namespace

CollectResult collect_trajectories(const std::vector<DescriptionRecord>& pool, llm::Gateway& strong,
                                   llm::Gateway& weak, const CollectOptions& options) {
    std::vector<std::vector<TrajectoryRecord>> per(pool.size());
    std::vector<std::string> errors(pool.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < pool.size(); i = next++) {
            try {
                per[i] = collect_one(pool[i], strong, weak, options);
            } catch (const Error& e) {
                errors[i] = "skipped " + pool[i].id + ": " + e.what();
            }
        }
    };
    const std::size_t threads = std::min<std::size_t>(4, std::max<std::size_t>(1, pool.size()));
    std::vector<std::thread> workers;
    for (std::size_t t = 0; t < threads; ++t) {
        workers.emplace_back(worker);
    }
    for (auto& w : workers) {
        w.join();
    }

    CollectResult result;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        for (auto& r : per[i]) {
            result.records.push_back(std::move(r));
        }
        if (!errors[i].empty()) {
            result.log.push_back(errors[i]);
        }
    }
    return result;
}

} // namespace scenegen::evolve
