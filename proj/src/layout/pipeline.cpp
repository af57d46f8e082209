#include "scenegen/layout/pipeline.hpp"

#include "scenegen/error.hpp"
#include "scenegen/layout/formats.hpp"
#include "scenegen/layout/grammar.hpp"
#include "scenegen/llm/structured.hpp"
#include "scenegen/text.hpp"

#include <algorithm>
#include <set>

namespace scenegen::layout {

namespace {

bool is_setting_word(std::string_view name) {
    const auto n = text::lower(text::trim(name));
    for (std::string_view w : {"station", "workstation", "work station", "scene", "welding station", "cell",
                               "work cell", "workcell"}) {
        if (n == w || n == "the " + std::string(w) || n == std::string(w) + "s") {
            return true;
        }
    }
    return false;
}

template <typename Parse>
auto ask_with_reasks(llm::Gateway& gateway, const llm::PromptRequest& request, Parse parse) {
    llm::Conversation conversation;
    std::string answer = gateway.chat(conversation, request);
    for (int attempt = 0;; ++attempt) {
        try {
            return parse(answer);
        } catch (const ParseError& e) {
            if (attempt >= 2) {
                throw;
            }
            answer = gateway.follow_up(conversation, request,
                                       "Your response could not be parsed: " + std::string(e.what()) +
                                           ". Answer again in the required format.");
        }
    }
}

std::vector<std::string> string_list(const nlohmann::json& value, const std::string& section) {
    if (!value.is_array()) {
        throw ParseError(section, section + " must be a JSON list of names");
    }
    std::vector<std::string> out;
    for (const auto& v : value) {
        if (!v.is_string()) {
            throw ParseError(section, section + " must contain only names");
        }
        out.push_back(text::trim(v.get<std::string>()));
    }
    return out;
}

} // namespace

std::optional<std::string> match_library_name(std::string_view name, const ObjectLibrary& library) {
    const std::string n = text::trim(name);
    if (n.empty() || is_setting_word(n)) {
        return std::nullopt;
    }
    if (library.contains(n)) {
        return n;
    }
    for (const auto& e : library.entries()) {
        if (text::iequals(e.name, n)) {
            return e.name;
        }
    }
    const std::string base = base_kind_name(n);
    for (const auto& e : library.entries()) {
        if (text::iequals(e.name, base)) {
            return e.name;
        }
    }
    if (auto kind = kind_for_phrase(n); kind && library.contains(*kind)) {
        return kind;
    }
    return std::nullopt;
}

RetrievalResult retrieve_objects(std::string_view description, const ObjectLibrary& library, llm::Gateway& gateway) {
    if (text::trim(description).empty()) {
        throw PreconditionError("the scene description is empty");
    }
    llm::PromptRequest request;
    request.template_id = llm::TemplateId::object_retrieval;
    request.bindings = {{"prompt", std::string(description)}};

    try {
        return ask_with_reasks(gateway, request, [&](const std::string& answer) {
            const auto parsed = llm::parse_structured(answer, llm::TemplateId::object_retrieval);
            const auto found = string_list(parsed.at(0).payload, "Step 1");
            const auto names = string_list(parsed.at(1).payload, "Step 2");
            RetrievalResult result;
            std::vector<std::string> kinds;
            for (std::size_t i = 0; i < names.size(); ++i) {
                const auto& name = names[i];
                if (is_setting_word(name)) {
                    continue;
                }
                const auto kind = match_library_name(name, library);
                if (!kind) {
                    result.substitutions.push_back({name, std::string(kRemoved)});
                    continue;
                }
                // Lists of equal length pair up by position, so the original
                // phrase is the one from the first step.
                const auto& original = found.size() == names.size() ? found[i] : name;
                if (*kind != original) {
                    result.substitutions.push_back({original, *kind});
                }
                kinds.push_back(*kind);
            }
            if (found.size() != names.size()) {
                for (const auto& name : found) {
                    if (!is_setting_word(name) && !match_library_name(name, library) &&
                        std::find(names.begin(), names.end(), name) == names.end()) {
                        result.substitutions.push_back({name, std::string(kRemoved)});
                    }
                }
            }
            result.objects = number_instances(kinds);
            result.rewritten_description = text::trim(parsed.at(2).payload.get<std::string>());
            return result;
        });
    } catch (const ParseError& e) {
        throw StageError("retrieval", e.what());
    }
}

LayoutInfo resolve_layout(std::vector<PositionRecord> positions, std::vector<RelationRecord> relations,
                          const std::vector<ObjectInstance>& objects) {
    std::map<std::string, std::optional<Coordinate>> anchors;
    auto resolve = [&](const std::string& raw, const char* section) -> std::string {
        for (const auto& o : objects) {
            if (text::iequals(o.display_name, raw)) {
                return o.display_name;
            }
        }
        if (kind_for_phrase(raw) || ObjectLibrary::standard().contains(base_kind_name(raw))) {
            throw ParseError(section, "object '" + raw + "' is not in the object list");
        }
        anchors.emplace(raw, std::nullopt);
        return raw;
    };

    LayoutInfo out;
    for (auto& p : positions) {
        p.name = resolve(p.name, "Positions");
        if (anchors.contains(p.name) && p.coord && !anchors[p.name]) {
            anchors[p.name] = p.coord;
        }
        out.positions.push_back(std::move(p));
    }
    std::set<std::pair<std::string, std::string>> pairs;
    for (auto& r : relations) {
        r.subject = resolve(r.subject, "Relative Positions");
        r.object = resolve(r.object, "Relative Positions");
        const auto key = std::minmax(r.subject, r.object);
        if (!pairs.insert({key.first, key.second}).second) {
            continue;
        }
        out.relations.push_back(std::move(r));
    }
    for (const auto& [name, coord] : anchors) {
        out.anchors.push_back({name, coord});
    }
    return out;
}

LayoutInfo extract_layout(std::string_view description, const std::vector<ObjectInstance>& objects,
                          llm::Gateway& gateway) {
    llm::PromptRequest request;
    request.template_id = llm::TemplateId::layout_extraction;
    request.bindings = {{"prompt", std::string(description)}, {"objects", name_list(objects)}};
    return ask_with_reasks(gateway, request, [&](const std::string& answer) {
        const auto parsed = llm::parse_structured(answer, llm::TemplateId::layout_extraction);
        return resolve_layout(positions_from_json(parsed.at(1).payload), relations_from_json(parsed.at(2).payload),
                              objects);
    });
}

nlohmann::ordered_json to_json(const RetrievalResult& result) {
    nlohmann::ordered_json j;
    auto objects = nlohmann::ordered_json::array();
    for (const auto& o : result.objects) {
        objects.push_back({{"id", o.id}, {"name", o.display_name}, {"model", o.library_name}});
    }
    j["objects"] = std::move(objects);
    j["rewritten_description"] = result.rewritten_description;
    auto subs = nlohmann::ordered_json::array();
    for (const auto& s : result.substitutions) {
        subs.push_back({{"original", s.original}, {"replacement", s.replacement}});
    }
    j["substitutions"] = std::move(subs);
    return j;
}

nlohmann::ordered_json to_json(const LayoutInfo& layout) {
    nlohmann::ordered_json j;
    j["positions"] = positions_to_json(layout.positions);
    j["relations"] = relations_to_json(layout.relations);
    auto anchors = nlohmann::ordered_json::array();
    for (const auto& a : layout.anchors) {
        anchors.push_back({{"name", a.name}, {"position", a.coord ? nlohmann::ordered_json(format_coordinate(*a.coord))
                                                                  : nlohmann::ordered_json()}});
    }
    j["anchors"] = std::move(anchors);
    return j;
}

} // namespace scenegen::layout
