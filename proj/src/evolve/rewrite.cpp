#include "scenegen/evolve/evolve.hpp"

#include "scenegen/error.hpp"
#include "scenegen/layout/grammar.hpp"
#include "scenegen/llm/structured.hpp"
#include "scenegen/text.hpp"

#include <regex>
#include <set>

namespace scenegen::evolve {

const std::vector<RewriteMethod>& all_methods() {
    static const std::vector<RewriteMethod> methods{
        RewriteMethod::object_addition,       RewriteMethod::location_specification,
        RewriteMethod::relation_specification, RewriteMethod::quantity_modification,
        RewriteMethod::fuzzy_expressions,     RewriteMethod::rephrasing,
    };
    return methods;
}

std::string_view to_string(RewriteMethod method) {
    switch (method) {
    case RewriteMethod::object_addition: return "object_addition";
    case RewriteMethod::location_specification: return "location_specification";
    case RewriteMethod::relation_specification: return "relation_specification";
    case RewriteMethod::quantity_modification: return "quantity_modification";
    case RewriteMethod::fuzzy_expressions: return "fuzzy_expressions";
    case RewriteMethod::rephrasing: return "rephrasing";
    }
    return "rephrasing";
}

RewriteMethod method_from_string(std::string_view name) {
    for (auto m : all_methods()) {
        if (text::iequals(to_string(m), name)) {
            return m;
        }
    }
    throw ConfigError("unknown rewrite method '" + std::string(name) + "'");
}

const std::vector<std::uint32_t>& method_weights() {
    static const std::vector<std::uint32_t> weights{5, 6, 6, 1, 5, 1};
    return weights;
}

std::string_view method_guidance(RewriteMethod method) {
    switch (method) {
    case RewriteMethod::object_addition:
        return "Add one new object to the description, or replace one object with another kind from the "
               "permission list.";
    case RewriteMethod::location_specification:
        return "Give one object explicit coordinates [x, y, 0] with x and y greater than -5000 and less than 5000.";
    case RewriteMethod::relation_specification:
        return "Add a relative position between two objects, with a distance greater than 1 meter and less than "
               "5 meters and a direction.";
    case RewriteMethod::quantity_modification:
        return "Change the number of one kind of object to a number between 3 and 10.";
    case RewriteMethod::fuzzy_expressions:
        return "Replace one precise distance or coordinate with a vaguer expression.";
    case RewriteMethod::rephrasing:
        return "Rephrase the description without changing any object, position or relation.";
    }
    return "";
}

namespace {

using layout::SceneSpec;
using layout::SpecRelation;

std::string random_kind(Rng& rng, std::string_view exclude = {}) {
    const auto names = ObjectLibrary::standard().names();
    for (;;) {
        const auto& k = names[rng.index(names.size())];
        if (k != exclude) {
            return k;
        }
    }
}

bool positioned(const SceneSpec& spec, std::size_t i) {
    auto it = spec.positions.find(i);
    return it != spec.positions.end() && (!it->second.coords.empty() || it->second.at_center);
}

bool related(const SceneSpec& spec, std::size_t a, std::size_t b) {
    for (const auto& r : spec.relations) {
        if ((r.subject == a && r.object == b) || (r.subject == b && r.object == a)) {
            return true;
        }
    }
    return false;
}

bool in_relation(const SceneSpec& spec, std::size_t i) {
    for (const auto& r : spec.relations) {
        if (r.subject == i || r.object == i || (r.between_second && *r.between_second == i)) {
            return true;
        }
    }
    return false;
}

// Inserts `count` copies of kind after position `at`, shifting indices.
void insert_instances(SceneSpec& spec, std::size_t at, std::string kind, std::size_t count) {
    auto shift = [&](std::size_t i) { return i >= at ? i + count : i; };
    spec.kinds.insert(spec.kinds.begin() + static_cast<std::ptrdiff_t>(at), count, kind);
    spec.surfaces.insert(spec.surfaces.begin() + static_cast<std::ptrdiff_t>(at), count, kind);
    std::map<std::size_t, layout::SpecPosition> moved;
    for (auto& [i, p] : spec.positions) {
        moved[shift(i)] = p;
    }
    spec.positions = std::move(moved);
    for (auto& r : spec.relations) {
        r.subject = shift(r.subject);
        r.object = shift(r.object);
        if (r.between_second) {
            r.between_second = shift(*r.between_second);
        }
    }
}

std::string distance_phrase(Rng& rng) {
    static const char* meters[] = {"1.5", "2", "2.5", "3", "3.5", "4", "4.5"};
    static const char* directions[] = {"in front", "behind", "to the left", "to the right"};
    return std::string(meters[rng.index(7)]) + " meters " + directions[rng.index(4)];
}

std::int64_t random_coordinate_value(Rng& rng) {
    return rng.uniform_int(-49, 49) * 100;
}

void add_object(SceneSpec& spec, Rng& rng) {
    const auto kind = random_kind(rng);
    spec.kinds.push_back(kind);
    spec.surfaces.push_back(kind);
}

void object_addition(SceneSpec& spec, Rng& rng) {
    if (spec.kinds.empty() || rng.bernoulli(0.5)) {
        add_object(spec, rng);
        return;
    }
    const auto i = rng.index(spec.kinds.size());
    spec.kinds[i] = random_kind(rng, spec.kinds[i]);
    spec.surfaces[i] = spec.kinds[i];
}

void location_specification(SceneSpec& spec, Rng& rng) {
    if (spec.kinds.empty()) {
        add_object(spec, rng);
    }
    std::vector<std::size_t> free;
    std::vector<std::size_t> loose;
    for (std::size_t i = 0; i < spec.kinds.size(); ++i) {
        if (!positioned(spec, i)) {
            (in_relation(spec, i) ? loose : free).push_back(i);
        }
    }
    const auto& pool = !free.empty() ? free : loose;
    const Coordinate c{random_coordinate_value(rng), random_coordinate_value(rng)};
    if (pool.empty()) {
        auto it = spec.positions.begin();
        std::advance(it, static_cast<std::ptrdiff_t>(rng.index(spec.positions.size())));
        it->second.coords = {c};
        it->second.at_center = false;
        return;
    }
    auto& pos = spec.positions[pool[rng.index(pool.size())]];
    pos.coords = {c};
}

void relation_specification(SceneSpec& spec, Rng& rng) {
    while (spec.kinds.size() < 2) {
        add_object(spec, rng);
    }
    std::vector<std::pair<std::size_t, std::size_t>> open;
    for (std::size_t s = 0; s < spec.kinds.size(); ++s) {
        if (positioned(spec, s)) {
            continue;
        }
        for (std::size_t o = 0; o < spec.kinds.size(); ++o) {
            if (o != s && !related(spec, s, o)) {
                open.emplace_back(s, o);
            }
        }
    }
    const std::string phrase = distance_phrase(rng);
    if (!open.empty()) {
        const auto [s, o] = open[rng.index(open.size())];
        spec.relations.push_back({s, o, phrase, std::nullopt});
        return;
    }
    std::vector<std::size_t> plain;
    for (std::size_t r = 0; r < spec.relations.size(); ++r) {
        if (!spec.relations[r].between_second) {
            plain.push_back(r);
        }
    }
    if (!plain.empty()) {
        spec.relations[plain[rng.index(plain.size())]].text = phrase;
        return;
    }
    add_object(spec, rng);
    spec.relations.push_back({spec.kinds.size() - 1, rng.index(spec.kinds.size() - 1), phrase, std::nullopt});
}

void quantity_modification(SceneSpec& spec, Rng& rng) {
    const auto n = static_cast<std::size_t>(rng.uniform_int(3, 10));
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < spec.kinds.size(); ++i) {
        if (!positioned(spec, i) && !in_relation(spec, i)) {
            candidates.push_back(i);
        }
    }
    if (candidates.empty()) {
        insert_instances(spec, spec.kinds.size(), random_kind(rng), n);
        return;
    }
    const auto i = candidates[rng.index(candidates.size())];
    // Keep same-kind neighbours apart so the copies read as one group.
    insert_instances(spec, i + 1, spec.kinds[i], n - 1);
}

void fuzzy_expressions(SceneSpec& spec, Rng& rng) {
    static const std::regex quantity(R"(\b\d+(?:\.\d+)?\s*(?:meters?|metres?|millimeters?|millimetres?|mm|cm|m)\b\s*)",
                                     std::regex::icase);
    std::vector<std::size_t> measured;
    for (std::size_t r = 0; r < spec.relations.size(); ++r) {
        if (std::regex_search(spec.relations[r].text, quantity)) {
            measured.push_back(r);
        }
    }
    if (!measured.empty()) {
        auto& rel = spec.relations[measured[rng.index(measured.size())]];
        const auto vague = text::trim(std::regex_replace(rel.text, quantity, ""));
        rel.text = vague.empty() || vague == "away" || vague == "apart" ? "near" : vague;
        return;
    }
    std::vector<std::size_t> pinned;
    for (const auto& [i, p] : spec.positions) {
        if (!p.coords.empty()) {
            pinned.push_back(i);
        }
    }
    if (!pinned.empty() && spec.kinds.size() >= 2) {
        const auto i = pinned[rng.index(pinned.size())];
        spec.positions[i].coords.clear();
        if (!spec.positions[i].at_center && !spec.positions[i].dir) {
            spec.positions.erase(i);
        }
        for (std::size_t o = 0; o < spec.kinds.size(); ++o) {
            if (o != i && !related(spec, i, o)) {
                spec.relations.push_back({i, o, "near", std::nullopt});
                break;
            }
        }
    }
}

} // namespace

std::string rule_rewrite(std::string_view description, RewriteMethod method, Rng& rng) {
    SceneSpec spec = layout::parse_description(description);
    const std::string before = text::trim(description);
    switch (method) {
    case RewriteMethod::object_addition: object_addition(spec, rng); break;
    case RewriteMethod::location_specification: location_specification(spec, rng); break;
    case RewriteMethod::relation_specification: relation_specification(spec, rng); break;
    case RewriteMethod::quantity_modification: quantity_modification(spec, rng); break;
    case RewriteMethod::fuzzy_expressions: fuzzy_expressions(spec, rng); break;
    case RewriteMethod::rephrasing: break;
    }
    const auto first = static_cast<unsigned>(rng.index(6));
    for (unsigned k = 0; k < 6; ++k) {
        auto out = layout::render_description(spec, first + k);
        if (out != before || method != RewriteMethod::rephrasing) {
            return out;
        }
    }
    return layout::render_description(spec, first);
}

std::string rewrite(const DescriptionRecord& record, RewriteMethod method, llm::Gateway& gateway, int variant) {
    llm::PromptRequest req;
    req.template_id = llm::TemplateId::evolve_rewrite;
    req.bindings = {
        {"prompt", record.text},
        {"method", std::string(to_string(method))},
        {"method guidance", std::string(method_guidance(method))},
        {"variant", std::to_string(variant)},
    };
    llm::Conversation conversation;
    std::string answer = gateway.chat(conversation, req);
    for (int attempt = 0;; ++attempt) {
        try {
            const auto parsed = llm::parse_structured(answer, llm::TemplateId::evolve_rewrite);
            return text::trim(parsed.at(0).payload.get<std::string>());
        } catch (const ParseError& e) {
            if (attempt >= 2) {
                throw StageError("rewrite", e.what());
            }
            answer = gateway.follow_up(conversation, req,
                                       std::string("Your response could not be parsed (") + e.what() +
                                           "). Answer again in the required format.");
        }
    }
}

} // namespace scenegen::evolve
