#include "scenegen/llm/scripted.hpp"

#include "scenegen/codegen/codegen.hpp"
#include "scenegen/error.hpp"
#include "scenegen/evolve/evolve.hpp"
#include "scenegen/layout/formats.hpp"
#include "scenegen/layout/grammar.hpp"
#include "scenegen/text.hpp"

#include <algorithm>
#include <regex>
#include <sstream>

namespace scenegen::llm {

namespace {

using nlohmann::json;

const std::string& binding(const CompletionRequest& request, const std::string& key) {
    static const std::string empty;
    auto it = request.bindings.find(key);
    return it == request.bindings.end() ? empty : it->second;
}

json parse_or(const std::string& text, json fallback) {
    try {
        return json::parse(text);
    } catch (const json::parse_error&) {
        return fallback;
    }
}

std::uint64_t bindings_hash(const CompletionRequest& request, std::initializer_list<const char*> keys) {
    std::string all;
    for (const char* k : keys) {
        all += binding(request, k);
        all += '\x1f';
    }
    return fnv1a64(all);
}

// Object instances for a list of display names; the library kind is the
// name without its instance number.
std::vector<ObjectInstance> instances_from_names(const json& names) {
    std::vector<ObjectInstance> out;
    if (!names.is_array()) {
        return out;
    }
    for (const auto& n : names) {
        if (!n.is_string()) {
            continue;
        }
        const auto name = n.get<std::string>();
        out.push_back({"obj-" + std::to_string(out.size() + 1), base_kind_name(name), name});
    }
    return out;
}

std::string compact(const std::vector<std::string>& names) {
    return json(names).dump();
}

// ---------------------------------------------------------------------------
// Object retrieval
// ---------------------------------------------------------------------------

std::string answer_retrieval(const CompletionRequest& request) {
    const auto& prompt = binding(request, "prompt");
    const auto spec = layout::parse_description(prompt);
    std::vector<std::string> found = spec.surfaces;
    std::vector<std::string> fixed = spec.kinds;
    // Equipment outside the library has no same-category entry and is removed.
    static const std::regex off_library(R"(\b(forklifts?|pallets?|shel(?:f|ves)|racks?|cranes?|agvs?|cameras?|lathes?|printers?)\b)",
                                        std::regex::icase);
    for (std::sregex_iterator it(prompt.begin(), prompt.end(), off_library), end; it != end; ++it) {
        found.push_back(it->str());
    }
    std::string description = layout::canonicalize_description(prompt);
    std::string fix_note = "Every object is mapped to its entry in the permission list.";
    if (fixed.empty()) {
        fixed = {"Welding Table", "Kuka Robot KR125"};
        fix_note = "No object is named, so a welding table with a robot is added.";
        description = text::trim(description);
        if (!description.empty() && description.back() != '.' && description.back() != '?' && description.back() != '!') {
            description += '.';
        }
        description += (description.empty() ? "" : " ") + std::string("Place a Welding Table and a Kuka Robot KR125.");
    }
    std::ostringstream os;
    os << "#Step 1: Find all objects#\n"
       << "Analysis: The description mentions " << found.size() << " object instance"
       << (found.size() == 1 ? "" : "s") << ".\n"
       << "Objects: " << compact(found) << "\n\n"
       << "#Step 2: Fix object names#\n"
       << "Analysis: " << fix_note << "\n"
       << "Objects: " << compact(fixed) << "\n\n"
       << "#Step 3: Rewrite description#\n"
       << "Analysis: Object names are replaced by library names and positional information is kept.\n"
       << "New Description: " << description << "\n";
    return os.str();
}

// ---------------------------------------------------------------------------
// Layout extraction
// ---------------------------------------------------------------------------

std::string answer_extraction(const CompletionRequest& request) {
    const auto spec = layout::parse_description(binding(request, "prompt"));
    const auto listed = instances_from_names(parse_or(binding(request, "objects"), json::array()));
    const auto found = spec.instances();

    // The j-th grammar instance of a kind takes the j-th listed name of it.
    std::map<std::string, std::string> rename;
    std::map<std::string, std::size_t> seen;
    for (const auto& inst : found) {
        const std::size_t j = seen[inst.library_name]++;
        std::size_t k = 0;
        for (const auto& l : listed) {
            if (text::iequals(l.library_name, inst.library_name) && k++ == j) {
                rename[inst.display_name] = l.display_name;
                break;
            }
        }
    }
    auto renamed = [&](const std::string& n) {
        auto it = rename.find(n);
        return it == rename.end() ? n : it->second;
    };

    auto info = spec.layout();
    for (auto& p : info.positions) {
        p.name = renamed(p.name);
    }
    for (auto& r : info.relations) {
        r.subject = renamed(r.subject);
        r.object = renamed(r.object);
        for (const auto& [from, to] : rename) {
            if (from != to && text::contains_ci(r.text, from)) {
                r.text = text::replace_all(r.text, from, to);
            }
        }
    }
    // A pinned object with no stated heading and no relation of its own
    // faces the default direction.
    for (auto& p : info.positions) {
        const bool related = std::any_of(info.relations.begin(), info.relations.end(),
                                         [&](const RelationRecord& r) { return r.subject == p.name; });
        if (p.coord && !p.has_direction() && !related) {
            p.dir = Direction(0);
        }
    }
    std::vector<std::string> names;
    for (const auto& inst : found) {
        names.push_back(renamed(inst.display_name));
    }

    std::ostringstream os;
    os << "#Step 1: Identify Objects#\n"
       << "Analysis: " << names.size() << " objects appear in the description.\n"
       << "Objects:\n" << compact(names) << "\n\n"
       << "#Step 2: Absolute Positions#\n"
       << "Analysis: " << info.positions.size() << " positions are given directly.\n"
       << "Positions:\n" << layout::pretty(layout::positions_to_json(info.positions)) << "\n\n"
       << "#Step 3: Relative Positions#\n"
       << "Analysis: " << info.relations.size() << " relative positions are given.\n"
       << "Relative Positions:\n" << layout::pretty(layout::relations_to_json(info.relations)) << "\n";
    return os.str();
}

// ---------------------------------------------------------------------------
// Placement assignment
// ---------------------------------------------------------------------------

struct Assignment {
    std::vector<DeltaRecord> deltas;
    std::map<std::string, Coordinate> derived;
    std::vector<Placement> placements;
};

// Moves one constrained object or reverses one increment.
void inject_error(Assignment& a, const placement::Facts& facts, Rng& rng) {
    std::vector<std::size_t> flippable;
    for (std::size_t i = 0; i < a.deltas.size(); ++i) {
        const auto& d = a.deltas[i];
        if (!facts.literal_pins.contains(d.subject) && (d.dx != 0 || d.dy != 0)) {
            flippable.push_back(i);
        }
    }
    auto placement_of = [&](const std::string& n) -> Placement* {
        for (auto& p : a.placements) {
            if (p.name() == n) {
                return &p;
            }
        }
        return nullptr;
    };
    if (!flippable.empty() && rng.bernoulli(0.5)) {
        auto& d = a.deltas[flippable[rng.index(flippable.size())]];
        Placement* s = placement_of(d.subject);
        Placement* o = placement_of(d.object);
        const Coordinate base = o ? o->coord : facts.anchors.count(d.object) ? facts.anchors.at(d.object) : Coordinate{};
        d.dx = -d.dx;
        d.dy = -d.dy;
        if (s) {
            s->coord = {base.x + d.dx, base.y + d.dy};
            if (a.derived.contains(d.subject)) {
                a.derived[d.subject] = s->coord;
            }
        }
        return;
    }
    std::vector<std::size_t> constrained;
    std::vector<std::size_t> movable;
    for (std::size_t i = 0; i < a.placements.size(); ++i) {
        const auto& n = a.placements[i].name();
        if (facts.literal_pins.contains(n)) {
            continue;
        }
        movable.push_back(i);
        for (const auto& r : facts.relations) {
            if (r.subject == n || r.object == n) {
                constrained.push_back(i);
                break;
            }
        }
    }
    const auto& pool = !constrained.empty() ? constrained : !movable.empty() ? movable : std::vector<std::size_t>{};
    if (pool.empty() && a.placements.empty()) {
        return;
    }
    auto& p = pool.empty() ? a.placements[rng.index(a.placements.size())] : a.placements[pool[rng.index(pool.size())]];
    const std::int64_t amount = rng.uniform_int(1100, 3000) * (rng.bernoulli(0.5) ? 1 : -1);
    if (rng.bernoulli(0.5)) {
        p.coord.x += amount;
    } else {
        p.coord.y += amount;
    }
    if (a.derived.contains(p.name())) {
        a.derived[p.name()] = p.coord;
    }
}

std::string answer_assignment(const CompletionRequest& request, const ScriptedOptions& options, bool allow_errors) {
    const auto objects = instances_from_names(parse_or(binding(request, "objects"), json::array()));
    LayoutInfo info;
    try {
        info.positions = layout::positions_from_json(parse_or(binding(request, "positions"), json::array()));
        info.relations = layout::relations_from_json(parse_or(binding(request, "relations"), json::array()));
    } catch (const ParseError&) {
        info = {};
    }
    const auto facts = placement::interpret(objects, info);
    const auto key = bindings_hash(request, {"prompt", "objects", "positions", "relations"});
    Rng rng(derive_seed(options.seed ^ key, "assign"));
    const auto solved = placement::solve_placements(facts, options.rules, rng);

    Assignment a{solved.deltas, solved.derived, solved.placements};
    if (allow_errors && options.weak) {
        Rng weak(derive_seed(options.seed ^ key, "weak"));
        if (weak.bernoulli(options.error_rate)) {
            inject_error(a, facts, weak);
        }
    }

    std::vector<Placement> derived;
    for (const auto& p : a.placements) {
        if (auto it = a.derived.find(p.name()); it != a.derived.end()) {
            derived.push_back({p.object, it->second, p.dir});
        }
    }

    std::ostringstream os;
    os << "#Step 1: Rewrite Relative Position#\nAnalysis:";
    if (a.deltas.empty()) {
        os << " There are no relative positions to rewrite.";
    }
    for (const auto& d : a.deltas) {
        os << " " << d.subject << " relative to " << d.object << " is " << format_coordinate({d.dx, d.dy}) << ".";
    }
    os << "\nNew Relative Positions:\n" << layout::pretty(layout::deltas_to_json(a.deltas)) << "\n\n";

    os << "#Step 2: Calculate Coordinates#\nAnalysis:";
    if (derived.empty()) {
        os << " No coordinates are known yet.";
    }
    for (const auto& p : derived) {
        os << " " << p.name() << " is at " << format_coordinate(p.coord) << ".";
    }
    os << "\nPositions:\n" << layout::pretty(layout::placements_to_json(derived)) << "\n\n";

    os << "#Step 3: Assign Positions#\nAnalysis: The remaining objects are placed at least 1000 mm from every other "
          "object inside the allowed area.";
    for (const auto& n : solved.notes) {
        os << " Note: " << n << ".";
    }
    os << "\nPositions:\n" << layout::pretty(layout::placements_to_json(a.placements)) << "\n";
    return os.str();
}

// ---------------------------------------------------------------------------
// Verification, validation, code, rewriting
// ---------------------------------------------------------------------------

std::string answer_verification(const CompletionRequest& request, const ScriptedOptions& options) {
    const auto spec = layout::parse_description(binding(request, "prompt"));
    const auto objects = spec.instances();
    const auto facts = placement::interpret(objects, spec.layout());
    std::vector<Placement> placements;
    placement::VerificationReport report;
    try {
        placements = layout::placements_from_json(parse_or(binding(request, "placements"), json::array()), objects);
        report = placement::verify(placements, facts, options.rules);
    } catch (const ParseError& e) {
        report.add({placement::ViolationKind::constraint, e.what(), {}, std::nullopt});
    }
    return placement::render_feedback(report, placements);
}

std::string answer_validation(const CompletionRequest& request) {
    return evolve::render_validation(evolve::validate_description(binding(request, "prompt")));
}

std::string answer_code(const CompletionRequest& request) {
    std::vector<Placement> placements;
    try {
        const auto value = parse_or(binding(request, "placements"), json::array());
        std::vector<std::string> names;
        for (const auto& item : value) {
            if (item.is_object() && item.contains("name") && item.at("name").is_string()) {
                names.push_back(item.at("name").get<std::string>());
            }
        }
        placements = layout::placements_from_json(value, instances_from_names(json(names)));
    } catch (const ParseError&) {
        placements.clear();
    }
    const auto code = codegen::emit_csharp(placements, ObjectLibrary::standard(), codegen::CodeTemplate::standard());
    return "```csharp\n" + code + (code.ends_with('\n') ? "" : "\n") + "```\n";
}

std::string answer_rewrite(const CompletionRequest& request, const ScriptedOptions& options) {
    const auto& prompt = binding(request, "prompt");
    evolve::RewriteMethod method = evolve::RewriteMethod::rephrasing;
    try {
        method = evolve::method_from_string(binding(request, "method"));
    } catch (const ConfigError&) {
    }
    Rng rng(derive_seed(options.seed ^ bindings_hash(request, {"prompt", "method", "variant"}), "rewrite"));
    const auto rewritten = evolve::rule_rewrite(prompt, method, rng);
    return "#Step 1: Rewrite description#\nAnalysis: The description is rewritten with the " +
           std::string(evolve::to_string(method)) + " method.\nNew Description: " + rewritten + "\n";
}

} // namespace

ScriptedBackend::ScriptedBackend(ScriptedOptions options) : options_(std::move(options)) {}

std::string ScriptedBackend::id() const {
    return options_.weak ? "scripted-weak" : "scripted";
}

void ScriptedBackend::prime(TemplateId stage, std::string answer) {
    std::lock_guard lock(mutex_);
    primed_[stage].push_back(std::move(answer));
}

std::string ScriptedBackend::complete(const CompletionRequest& request) {
    {
        std::lock_guard lock(mutex_);
        auto it = primed_.find(request.template_id);
        if (it != primed_.end() && !it->second.empty()) {
            auto answer = std::move(it->second.front());
            it->second.pop_front();
            return answer;
        }
    }
    // Re-asks after a parse failure carry the same stage and bindings, so
    // the stage answer is simply produced again.
    switch (request.template_id) {
    case TemplateId::object_retrieval: return answer_retrieval(request);
    case TemplateId::layout_extraction: return answer_extraction(request);
    case TemplateId::placement_assignment: return answer_assignment(request, options_, true);
    case TemplateId::placement_feedback: return answer_assignment(request, options_, false);
    case TemplateId::placement_verification: return answer_verification(request, options_);
    case TemplateId::description_validation: return answer_validation(request);
    case TemplateId::code_generation: return answer_code(request);
    case TemplateId::evolve_rewrite: return answer_rewrite(request, options_);
    }
    return "I cannot answer this request.";
}

std::shared_ptr<ScriptedBackend> make_scripted_backend(ScriptedOptions options) {
    return std::make_shared<ScriptedBackend>(std::move(options));
}

} // namespace scenegen::llm
