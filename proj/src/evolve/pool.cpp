#include "scenegen/evolve/evolve.hpp"

#include "scenegen/error.hpp"
#include "scenegen/layout/grammar.hpp"
#include "scenegen/text.hpp"

#include <sstream>

namespace scenegen::evolve {

std::string content_id(std::string_view text) {
    return text::sha256_hex(text::trim(text)).substr(0, 16);
}

DescriptionRecord make_seed(std::string text, const MinHashParams& params) {
    DescriptionRecord r;
    r.text = text::trim(text);
    r.id = content_id(r.text);
    r.signature = minhash(r.text, params);
    return r;
}

nlohmann::ordered_json to_json(const DescriptionRecord& record) {
    nlohmann::ordered_json j;
    j["id"] = record.id;
    j["text"] = record.text;
    j["parent_id"] = record.parent_id ? nlohmann::ordered_json(*record.parent_id) : nlohmann::ordered_json();
    j["method"] = record.method ? nlohmann::ordered_json(std::string(to_string(*record.method)))
                                : nlohmann::ordered_json();
    j["generation"] = record.generation;
    return j;
}

DescriptionRecord record_from_json(const nlohmann::json& value, const MinHashParams& params) {
    if (!value.is_object() || !value.contains("text") || !value.at("text").is_string()) {
        throw ParseError("description", "record needs a \"text\" string");
    }
    DescriptionRecord r = make_seed(value.at("text").get<std::string>(), params);
    if (value.contains("id") && value.at("id").is_string()) {
        r.id = value.at("id").get<std::string>();
    }
    if (value.contains("parent_id") && value.at("parent_id").is_string()) {
        r.parent_id = value.at("parent_id").get<std::string>();
    }
    if (value.contains("method") && value.at("method").is_string()) {
        try {
            r.method = method_from_string(value.at("method").get<std::string>());
        } catch (const ConfigError& e) {
            throw ParseError("description", e.what());
        }
    }
    if (value.contains("generation") && value.at("generation").is_number_integer()) {
        r.generation = value.at("generation").get<int>();
    }
    return r;
}

SampledStep sample_step(const std::vector<DescriptionRecord>& pool, Rng& rng) {
    if (pool.empty()) {
        throw PreconditionError("cannot sample from an empty description pool");
    }
    SampledStep step;
    step.index = rng.index(pool.size());
    step.method = all_methods()[rng.weighted(method_weights())];
    return step;
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

nlohmann::json to_json(const ValidationReport& report) {
    return {
        {"ok", report.ok},
        {"fully_checkable", report.fully_checkable},
        {"verification", placement::to_json(report.report)},
        {"notes", report.notes},
    };
}

ValidationReport validate_description(std::string_view text) {
    ValidationReport out;
    const auto spec = layout::parse_description(text);
    out.fully_checkable = spec.covered;
    out.notes = spec.notes;

    const auto objects = spec.instances();
    if (objects.empty()) {
        out.ok = false;
        out.notes.push_back("no object from the library is mentioned");
        return out;
    }

    placement::PlacementRules rules;
    rules.exempt_pinned_pairs = false;
    const auto facts = placement::interpret(objects, spec.layout());
    Rng rng(derive_seed(fnv1a64(text), "validate"));
    try {
        const auto solved = placement::solve_placements(facts, rules, rng);
        out.placements = solved.placements;
        out.report = placement::verify(solved.placements, facts, rules);
        for (const auto& n : solved.notes) {
            out.notes.push_back(n);
        }
    } catch (const AllocationInfeasibleError& e) {
        out.report.add({placement::ViolationKind::overlap, e.what(), {}, std::nullopt});
    }

    out.ok = out.report.ok;
    if (!spec.covered) {
        // Facts the grammar missed could explain any finding, so only
        // contradictions between explicit statements count.
        out.ok = out.report.count(placement::ViolationKind::conflict) == 0;
        out.notes.push_back("not fully checkable: the description goes beyond the supported phrasing");
    }
    return out;
}

std::string render_validation(const ValidationReport& report) {
    std::ostringstream os;
    os << "Relations: ";
    for (std::size_t i = 0; i < report.placements.size(); ++i) {
        const auto& p = report.placements[i];
        os << (i ? " " : "") << "The " << p.name() << " is at " << format_coordinate(p.coord) << ".";
    }
    if (report.placements.empty()) {
        os << "No object positions can be calculated.";
    }
    os << "\nAnalysis: ";
    if (report.report.violations.empty()) {
        os << "No collisions or contradictions were found.";
    }
    for (const auto& v : report.report.violations) {
        os << placement::to_string(v.kind) << ": " << v.detail << ". ";
    }
    for (const auto& n : report.notes) {
        os << n << ". ";
    }
    os << "\nError: " << (report.ok ? "No" : "Yes");
    return os.str();
}

// ---------------------------------------------------------------------------
// Evolution loop
// ---------------------------------------------------------------------------

EvolveResult evolve(const std::vector<DescriptionRecord>& seeds, llm::Gateway& gateway, Rng& rng,
                    const EvolveOptions& options) {
    if (seeds.empty()) {
        throw PreconditionError("evolution needs at least one seed description");
    }
    const auto validator =
        options.validator ? options.validator : [](std::string_view t) { return validate_description(t); };
    const std::size_t budget = options.max_iterations ? options.max_iterations : 20 * options.target;

    EvolveResult result;
    result.pool = seeds;
    while (result.pool.size() < options.target && result.iterations < budget) {
        ++result.iterations;
        const auto step = sample_step(result.pool, rng);
        const DescriptionRecord parent = result.pool[step.index];

        std::string text;
        try {
            text = rewrite(parent, step.method, gateway, static_cast<int>(result.iterations));
        } catch (const StageError&) {
            ++result.rewrite_failures;
            continue;
        }
        if (text.empty()) {
            ++result.rewrite_failures;
            continue;
        }
        if (!validator(text).ok) {
            ++result.rejected_invalid;
            continue;
        }
        auto signature = minhash(text, options.minhash);
        if (is_duplicate(signature, result.pool, options.dedup_threshold)) {
            ++result.rejected_duplicate;
            continue;
        }
        DescriptionRecord child;
        child.id = content_id(text);
        child.text = std::move(text);
        child.parent_id = parent.id;
        child.method = step.method;
        child.generation = parent.generation + 1;
        child.signature = std::move(signature);
        result.pool.push_back(std::move(child));
    }
    if (result.pool.size() < options.target) {
        result.warnings.push_back("iteration budget of " + std::to_string(budget) + " exhausted with " +
                                  std::to_string(result.pool.size()) + " of " + std::to_string(options.target) +
                                  " descriptions");
    }
    return result;
}

} // namespace scenegen::evolve
