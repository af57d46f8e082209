#include "scenegen/placement/refinement.hpp"

#include "scenegen/error.hpp"

#include <set>

namespace scenegen::placement {

namespace {

// Directions implied by a coordinate assignment: pins first, then facing
// targets, then parallel partners copying a known heading.
void settle_directions(std::vector<Placement>& placements, const Facts& facts) {
    std::map<std::string, Placement*> by_name;
    for (auto& p : placements) {
        by_name[p.name()] = &p;
    }
    std::set<std::string> known;
    for (auto& p : placements) {
        if (auto it = facts.pinned_dirs.find(p.name()); it != facts.pinned_dirs.end()) {
            p.dir = it->second;
            known.insert(p.name());
        } else {
            p.dir = Direction{};
        }
    }
    auto coord_of = [&](const std::string& n) -> std::optional<Coordinate> {
        if (auto it = by_name.find(n); it != by_name.end()) {
            return it->second->coord;
        }
        if (auto it = facts.anchors.find(n); it != facts.anchors.end()) {
            return it->second;
        }
        return std::nullopt;
    };
    for (const auto& rel : facts.relations) {
        if (rel.ast.kind == RelationKind::parallel || !rel.ast.constrains_direction() || known.contains(rel.subject) ||
            !by_name.contains(rel.subject)) {
            continue;
        }
        const auto target = coord_of(rel.object);
        const Coordinate here = by_name.at(rel.subject)->coord;
        if (target && *target != here) {
            by_name.at(rel.subject)->dir = compute_orientation(here, *target);
            known.insert(rel.subject);
        }
    }
    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& rel : facts.relations) {
            if (rel.ast.kind != RelationKind::parallel || !by_name.contains(rel.subject) ||
                !by_name.contains(rel.object)) {
                continue;
            }
            const bool ks = known.contains(rel.subject);
            const bool ko = known.contains(rel.object);
            if (ks != ko) {
                const auto& from = ks ? rel.subject : rel.object;
                const auto& to = ks ? rel.object : rel.subject;
                by_name.at(to)->dir = by_name.at(from)->dir;
                known.insert(to);
                changed = true;
            }
        }
    }
}

bool only_missing(const VerificationReport& report) {
    for (const auto& v : report.violations) {
        if (!v.detail.ends_with(" has no placement")) {
            return false;
        }
    }
    return true;
}

} // namespace

std::optional<std::vector<Placement>> brute_force_feasible(const std::vector<ObjectInstance>& objects,
                                                           const LayoutInfo& layout, const PlacementRules& rules) {
    if (rules.pitch <= 0) {
        throw PreconditionError("oracle grid pitch must be positive");
    }
    const Facts facts = interpret(objects, layout);

    std::vector<ObjectInstance> free;
    std::vector<Placement> fixed;
    for (const auto& o : objects) {
        if (auto it = facts.pinned.find(o.display_name); it != facts.pinned.end()) {
            fixed.push_back({o, it->second, Direction{}});
        } else {
            free.push_back(o);
        }
    }
    if (free.size() > 4) {
        throw OracleCapacityError("the oracle handles at most 4 free objects, got " + std::to_string(free.size()));
    }

    std::set<Coordinate> domain_set;
    const std::int64_t k_max = rules.bound / rules.pitch;
    for (std::int64_t i = -k_max; i <= k_max; ++i) {
        for (std::int64_t j = -k_max; j <= k_max; ++j) {
            domain_set.insert({i * rules.pitch, j * rules.pitch});
        }
    }
    std::map<std::string, Coordinate> known = facts.pinned;
    for (const auto& [name, c] : facts.anchors) {
        known.emplace(name, c);
    }
    std::vector<DeltaRecord> exact;
    for (const auto& rel : facts.relations) {
        if (rel.ast.exact_offset()) {
            exact.push_back({rel.subject, rel.object, rel.ast.dx(), rel.ast.dy()});
        }
    }
    for (const auto& [name, c] : propagate_coordinates(known, exact).coords) {
        domain_set.insert(c);
    }
    const std::vector<Coordinate> domain(domain_set.begin(), domain_set.end());

    double total = 1.0;
    for (std::size_t i = 0; i < free.size(); ++i) {
        total *= static_cast<double>(domain.size());
    }
    if (total > 1e7) {
        throw OracleCapacityError("oracle search space of " + std::to_string(static_cast<long long>(total)) +
                                  " assignments exceeds 10^7");
    }

    // Objects with more relations first so partial checks prune early.
    auto degree = [&](const ObjectInstance& o) {
        int d = 0;
        for (const auto& rel : facts.relations) {
            d += rel.subject == o.display_name || rel.object == o.display_name ? 1 : 0;
        }
        return d;
    };
    std::stable_sort(free.begin(), free.end(),
                     [&](const ObjectInstance& a, const ObjectInstance& b) { return degree(a) > degree(b); });

    std::vector<Placement> current = fixed;
    auto consistent = [&] {
        settle_directions(current, facts);
        return only_missing(verify(current, facts, rules));
    };
    if (!consistent()) {
        return std::nullopt;
    }

    std::function<bool(std::size_t)> search = [&](std::size_t depth) -> bool {
        if (depth == free.size()) {
            settle_directions(current, facts);
            return verify(current, facts, rules).ok;
        }
        for (const auto& c : domain) {
            current.push_back({free[depth], c, Direction{}});
            if (consistent() && search(depth + 1)) {
                return true;
            }
            current.pop_back();
        }
        return false;
    };
    if (!search(0)) {
        return std::nullopt;
    }

    // Report placements in the order of `objects`.
    std::vector<Placement> out;
    for (const auto& o : objects) {
        for (const auto& p : current) {
            if (p.object == o) {
                out.push_back(p);
            }
        }
    }
    return out;
}

} // namespace scenegen::placement
