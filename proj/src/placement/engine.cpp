#include "scenegen/placement/engine.hpp"

#include "scenegen/error.hpp"
#include "scenegen/text.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <numbers>
#include <sstream>

namespace scenegen::placement {

// ---------------------------------------------------------------------------
// Facts
// ---------------------------------------------------------------------------

const ObjectInstance* Facts::object(std::string_view name) const noexcept {
    for (const auto& o : objects) {
        if (o.display_name == name) {
            return &o;
        }
    }
    return nullptr;
}

namespace {

std::string strip_leading_article(std::string_view name) {
    std::string s = text::trim(name);
    for (std::string_view article : {"the ", "a ", "an "}) {
        if (text::starts_with_ci(s, article)) {
            return text::trim(s.substr(article.size()));
        }
    }
    return s;
}

class NameResolver {
public:
    NameResolver(const std::vector<ObjectInstance>& objects, const std::map<std::string, Coordinate>& anchors,
                 const std::set<std::string>& extra_anchors)
        : objects_(objects), anchors_(anchors), extra_(extra_anchors) {}

    std::optional<std::string> operator()(std::string_view raw) const {
        const std::string name = strip_leading_article(raw);
        for (const auto& o : objects_) {
            if (o.display_name == name) {
                return o.display_name;
            }
        }
        for (const auto& o : objects_) {
            if (text::iequals(o.display_name, name)) {
                return o.display_name;
            }
        }
        for (const auto& [a, _] : anchors_) {
            if (text::iequals(a, name)) {
                return a;
            }
        }
        for (const auto& a : extra_) {
            if (text::iequals(a, name)) {
                return a;
            }
        }
        return std::nullopt;
    }

private:
    const std::vector<ObjectInstance>& objects_;
    const std::map<std::string, Coordinate>& anchors_;
    const std::set<std::string>& extra_;
};

bool names_origin(std::string_view location) {
    const std::string l = text::lower(location);
    return l.find("center") != std::string::npos || l.find("centre") != std::string::npos ||
           l.find("middle") != std::string::npos || l.find("origin") != std::string::npos;
}

std::optional<Direction> direction_word(std::string_view text_dir) {
    const std::string l = text::lower(text::trim(text_dir));
    if (l == "front" || l == "forward" || l == "the front" || l == "+x") {
        return Direction(0.0);
    }
    if (l == "left" || l == "the left" || l == "+y") {
        return Direction(90.0);
    }
    if (l == "back" || l == "the back" || l == "backward" || l == "-x") {
        return Direction(180.0);
    }
    if (l == "right" || l == "the right" || l == "-y") {
        return Direction(270.0);
    }
    return std::nullopt;
}

std::string strip_towards(std::string_view s) {
    std::string t = text::trim(s);
    for (std::string_view prefix : {"facing ", "towards ", "toward ", "oriented towards ", "faces ", "face "}) {
        if (text::starts_with_ci(t, prefix)) {
            return text::trim(t.substr(prefix.size()));
        }
    }
    return t;
}

} // namespace

Facts interpret(const std::vector<ObjectInstance>& objects, const LayoutInfo& layout) {
    Facts facts;
    facts.objects = objects;

    std::set<std::string> coordless_anchors;
    for (const auto& a : layout.anchors) {
        if (a.coord) {
            facts.anchors[a.name] = *a.coord;
        } else {
            coordless_anchors.insert(a.name);
        }
    }
    NameResolver resolve(facts.objects, facts.anchors, coordless_anchors);

    // Positions naming something other than an object describe reference points.
    for (const auto& p : layout.positions) {
        if (!resolve(p.name) && p.coord) {
            facts.anchors[strip_leading_article(p.name)] = *p.coord;
        }
    }

    for (const auto& p : layout.positions) {
        const auto name = resolve(p.name);
        if (!name) {
            facts.notes.push_back("unresolved position name '" + p.name + "'");
            continue;
        }
        if (facts.anchors.contains(*name)) {
            continue;
        }
        std::optional<Coordinate> at = p.coord;
        if (!at && !p.location_text.empty() && names_origin(p.location_text)) {
            at = Coordinate{0, 0};
        }
        if (at) {
            auto [it, fresh] = facts.pinned.emplace(*name, *at);
            if (!fresh && it->second != *at) {
                facts.pin_conflicts.push_back({*name, it->second, *at});
            }
            if (p.coord) {
                facts.literal_pins.insert(*name);
            }
        }
        if (p.dir) {
            facts.pinned_dirs[*name] = *p.dir;
        } else if (!p.direction_text.empty()) {
            if (auto d = direction_word(strip_towards(p.direction_text))) {
                facts.pinned_dirs[*name] = *d;
            } else if (auto target = resolve(strip_towards(p.direction_text)); target && *target != *name) {
                Facts::Relation rel{*name, *target, "facing", parse_relation("facing")};
                facts.relations.push_back(std::move(rel));
            }
        }
    }

    for (const auto& r : layout.relations) {
        const auto subject = resolve(r.subject);
        const auto object = resolve(r.object);
        if (!subject || !object) {
            facts.notes.push_back("unresolved relation '" + r.subject + "' / '" + r.object + "'");
            continue;
        }
        facts.relations.push_back({*subject, *object, r.text, parse_relation(r.text)});
    }
    return facts;
}

// ---------------------------------------------------------------------------
// Propagation and orientation
// ---------------------------------------------------------------------------

PropagationResult propagate_coordinates(const std::map<std::string, Coordinate>& known,
                                        const std::vector<DeltaRecord>& deltas) {
    struct Edge {
        std::string to;
        std::int64_t dx;
        std::int64_t dy;
    };
    std::map<std::string, std::vector<Edge>> graph;
    for (const auto& d : deltas) {
        graph[d.object].push_back({d.subject, d.dx, d.dy});
        graph[d.subject].push_back({d.object, -d.dx, -d.dy});
    }

    PropagationResult result;
    std::deque<std::string> queue;
    for (const auto& [name, c] : known) {
        result.coords[name] = c;
        result.paths[name] = name + " given at " + format_coordinate(c);
        queue.push_back(name);
    }

    std::set<std::pair<std::string, Coordinate>> reported;
    while (!queue.empty()) {
        const std::string u = queue.front();
        queue.pop_front();
        const Coordinate cu = result.coords.at(u);
        for (const auto& e : graph[u]) {
            const Coordinate cv{cu.x + e.dx, cu.y + e.dy};
            const std::string path = result.paths[u] + "; " + e.to + " = " + u + " + [" + std::to_string(e.dx) +
                                     ", " + std::to_string(e.dy) + ", 0]";
            auto it = result.coords.find(e.to);
            if (it == result.coords.end()) {
                result.coords[e.to] = cv;
                result.paths[e.to] = path;
                queue.push_back(e.to);
            } else if (it->second != cv && reported.insert({e.to, cv}).second &&
                       !reported.contains({u, Coordinate{it->second.x - e.dx, it->second.y - e.dy}})) {
                result.discrepancies.push_back({e.to, it->second, cv, result.paths[e.to], path});
            }
        }
    }
    return result;
}

Direction compute_orientation(Coordinate subject, Coordinate target) {
    if (subject == target) {
        throw DegenerateInputError("cannot orient towards an identical coordinate " + format_coordinate(subject));
    }
    const double deg = std::atan2(static_cast<double>(target.y - subject.y), static_cast<double>(target.x - subject.x)) *
                       180.0 / std::numbers::pi;
    return normalize_direction(deg);
}

// ---------------------------------------------------------------------------
// Allocation
// ---------------------------------------------------------------------------

std::vector<Coordinate> grid_candidates(const PlacementRules& rules, Coordinate centre) {
    std::vector<Coordinate> cells;
    const std::int64_t steps = rules.bound / rules.pitch;
    for (std::int64_t j = -steps; j <= steps; ++j) {
        for (std::int64_t i = -steps; i <= steps; ++i) {
            cells.push_back({i * rules.pitch, j * rules.pitch});
        }
    }
    auto dist2 = [&](const Coordinate& c) {
        const double dx = static_cast<double>(c.x - centre.x);
        const double dy = static_cast<double>(c.y - centre.y);
        return dx * dx + dy * dy;
    };
    std::stable_sort(cells.begin(), cells.end(),
                     [&](const Coordinate& a, const Coordinate& b) { return dist2(a) < dist2(b); });
    return cells;
}

namespace {

Coordinate centroid(const std::vector<Coordinate>& pts) {
    if (pts.empty()) {
        return {0, 0};
    }
    double sx = 0.0;
    double sy = 0.0;
    for (const auto& p : pts) {
        sx += static_cast<double>(p.x);
        sy += static_cast<double>(p.y);
    }
    const double n = static_cast<double>(pts.size());
    return {round_mm(sx / n), round_mm(sy / n)};
}

} // namespace

std::vector<Placement> allocate_free(const std::vector<ObjectInstance>& objects,
                                     const std::map<std::string, Coordinate>& partial,
                                     const std::map<std::string, Direction>& directions,
                                     const PlacementRules& rules) {
    std::vector<Coordinate> placed_pts;
    std::vector<std::pair<std::string, Coordinate>> blockers;
    for (const auto& o : objects) {
        if (auto it = partial.find(o.display_name); it != partial.end()) {
            placed_pts.push_back(it->second);
            if (o.library_name != kGuarding) {
                blockers.emplace_back(o.display_name, it->second);
            }
        }
    }
    const auto cells = grid_candidates(rules, centroid(placed_pts));

    std::vector<Placement> out;
    out.reserve(objects.size());
    std::map<std::string, Coordinate> assigned;
    for (const auto& o : objects) {
        if (auto it = partial.find(o.display_name); it != partial.end()) {
            assigned[o.display_name] = it->second;
            continue;
        }
        const bool guarding = o.library_name == kGuarding;
        std::optional<Coordinate> chosen;
        for (const auto& c : cells) {
            const bool clear = guarding || std::all_of(blockers.begin(), blockers.end(), [&](const auto& b) {
                                   return euclidean_distance(c, b.second) >= rules.min_distance_mm;
                               });
            if (clear) {
                chosen = c;
                break;
            }
        }
        if (!chosen) {
            std::vector<std::string> names;
            for (const auto& b : blockers) {
                names.push_back(b.first);
            }
            throw AllocationInfeasibleError("no free grid cell for '" + o.display_name + "' within +/-" +
                                            std::to_string(rules.bound) + " mm; blockers: " + text::join(names, ", "));
        }
        assigned[o.display_name] = *chosen;
        if (!guarding) {
            blockers.emplace_back(o.display_name, *chosen);
        }
    }
    for (const auto& o : objects) {
        Placement p;
        p.object = o;
        p.coord = assigned.at(o.display_name);
        if (auto d = directions.find(o.display_name); d != directions.end()) {
            p.dir = d->second;
        }
        out.push_back(std::move(p));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Relation checks
// ---------------------------------------------------------------------------

std::string_view to_string(ViolationKind kind) {
    switch (kind) {
    case ViolationKind::constraint: return "constraint";
    case ViolationKind::conflict: return "conflict";
    case ViolationKind::overlap: return "overlap";
    }
    return "constraint";
}

std::size_t VerificationReport::count(ViolationKind kind) const {
    return static_cast<std::size_t>(
        std::count_if(violations.begin(), violations.end(), [&](const Violation& v) { return v.kind == kind; }));
}

namespace {

struct PointState {
    Coordinate coord;
    std::optional<Direction> dir;
};

using Lookup = std::function<const PointState*(const std::string&)>;

std::string fmt_mm(double v) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(1);
    os << v;
    return os.str();
}

std::optional<Violation> check_offset_axis(const AxisTerm& term, const AxisTerm& other, std::int64_t actual,
                                           std::int64_t other_actual, char axis, const Facts::Relation& rel,
                                           const PlacementRules& rules, bool exact_relation) {
    const auto kind = exact_relation ? ViolationKind::conflict : ViolationKind::constraint;
    const std::string who = rel.subject + " relative to " + rel.object;
    if (term.exact()) {
        const std::int64_t expected = term.sign * *term.magnitude_mm;
        const double err = std::fabs(static_cast<double>(actual - expected));
        if (err > rules.tolerance_mm) {
            return Violation{kind,
                             who + " should differ by " + std::to_string(expected) + " on the " + axis +
                                 "-axis (\"" + rel.text + "\") but differs by " + std::to_string(actual),
                             {rel.subject, rel.object}, err};
        }
    } else if (term.mentioned()) {
        if (static_cast<double>(term.sign * actual) <= rules.tolerance_mm) {
            return Violation{kind,
                             who + " is on the wrong side along the " + std::string(1, axis) + "-axis (\"" + rel.text +
                                 "\"), difference " + std::to_string(actual),
                             {rel.subject, rel.object}, static_cast<double>(actual)};
        }
    } else if (other.exact() || !other.mentioned()) {
        if (std::fabs(static_cast<double>(actual)) > rules.tolerance_mm) {
            return Violation{kind,
                             who + " should not be displaced along the " + std::string(1, axis) + "-axis (\"" +
                                 rel.text + "\") but differs by " + std::to_string(actual),
                             {rel.subject, rel.object}, static_cast<double>(actual)};
        }
    } else {
        // Only the other axis was named, without a distance: stay inside its 45 degree cone.
        if (std::fabs(static_cast<double>(actual)) > static_cast<double>(other.sign * other_actual)) {
            return Violation{kind,
                             who + " drifts too far along the " + std::string(1, axis) + "-axis for \"" + rel.text +
                                 "\"",
                             {rel.subject, rel.object}, static_cast<double>(actual)};
        }
    }
    return std::nullopt;
}

/// Checks one relation against the current state. Returns nothing when the
/// relation holds or cannot be evaluated (missing endpoint, unrecognized).
std::vector<Violation> check_relation(const Facts::Relation& rel, const Lookup& lookup, const Facts& facts,
                                      const PlacementRules& rules, bool coords_only) {
    std::vector<Violation> out;
    const PointState* s = lookup(rel.subject);
    const PointState* o = lookup(rel.object);
    if (!s || !o) {
        return out;
    }
    const auto& ast = rel.ast;
    const std::int64_t ax = s->coord.x - o->coord.x;
    const std::int64_t ay = s->coord.y - o->coord.y;
    const double dist = euclidean_distance(s->coord, o->coord);

    switch (ast.kind) {
    case RelationKind::offset: {
        const bool exact = ast.exact_offset();
        if (auto v = check_offset_axis(ast.x, ast.y, ax, ay, 'x', rel, rules, exact)) {
            out.push_back(std::move(*v));
        }
        if (auto v = check_offset_axis(ast.y, ast.x, ay, ax, 'y', rel, rules, exact)) {
            out.push_back(std::move(*v));
        }
        break;
    }
    case RelationKind::distance_only:
        if (std::fabs(dist - ast.distance_mm) > rules.tolerance_mm) {
            out.push_back({ViolationKind::conflict,
                           rel.subject + " should be " + fmt_mm(ast.distance_mm) + " mm from " + rel.object +
                               " (\"" + rel.text + "\") but is " + fmt_mm(dist) + " mm away",
                           {rel.subject, rel.object},
                           dist});
        }
        break;
    case RelationKind::adjacency:
        if (dist > rules.adjacency_max_mm + rules.tolerance_mm) {
            out.push_back({ViolationKind::constraint,
                           rel.subject + " should be next to " + rel.object + " (\"" + rel.text + "\") but is " +
                               fmt_mm(dist) + " mm away",
                           {rel.subject, rel.object},
                           dist});
        }
        break;
    case RelationKind::between: {
        auto find_ref = [&](const std::string& raw) -> const PointState* {
            NameResolver resolve(facts.objects, facts.anchors, {});
            if (auto n = resolve(raw)) {
                return lookup(*n);
            }
            return nullptr;
        };
        const PointState* a = find_ref(ast.between_first);
        const PointState* b = find_ref(ast.between_second);
        if (a && b) {
            const double mx = (static_cast<double>(a->coord.x) + static_cast<double>(b->coord.x)) / 2.0;
            const double my = (static_cast<double>(a->coord.y) + static_cast<double>(b->coord.y)) / 2.0;
            const double off = std::hypot(static_cast<double>(s->coord.x) - mx, static_cast<double>(s->coord.y) - my);
            if (off > rules.between_radius_mm) {
                out.push_back({ViolationKind::constraint,
                               rel.subject + " should lie between " + ast.between_first + " and " +
                                   ast.between_second + " but is " + fmt_mm(off) + " mm from their midpoint",
                               {rel.subject, ast.between_first, ast.between_second},
                               off});
            }
        }
        break;
    }
    case RelationKind::parallel:
        if (!coords_only && rules.check_directions) {
            const Direction ds = s->dir.value_or(Direction{});
            const Direction dobj = o->dir.value_or(Direction{});
            double diff = angular_difference(ds, dobj);
            diff = std::min(diff, 180.0 - diff);
            if (diff > rules.tolerance_deg) {
                out.push_back({ViolationKind::constraint,
                               rel.subject + " should be parallel to " + rel.object + " but their headings differ by " +
                                   fmt_mm(diff) + " degrees",
                               {rel.subject, rel.object},
                               std::nullopt});
            }
        }
        break;
    case RelationKind::facing:
    case RelationKind::unrecognized:
        break;
    }

    if (ast.constrains_direction() && ast.kind != RelationKind::parallel && !coords_only && rules.check_directions &&
        s->coord != o->coord) {
        const Direction expected = compute_orientation(s->coord, o->coord);
        const Direction actual = s->dir.value_or(Direction{});
        const double diff = angular_difference(expected, actual);
        if (diff > rules.tolerance_deg) {
            out.push_back({ViolationKind::constraint,
                           rel.subject + " should face " + rel.object + " (heading " +
                               text::format_number(std::round(expected.degrees() * 10.0) / 10.0) + ") but faces " +
                               text::format_number(actual.degrees()),
                           {rel.subject, rel.object},
                           std::nullopt});
        }
    }
    return out;
}

std::vector<DeltaRecord> exact_deltas(const Facts& facts) {
    std::vector<DeltaRecord> out;
    for (const auto& r : facts.relations) {
        if (r.ast.exact_offset()) {
            out.push_back({r.subject, r.object, r.ast.dx(), r.ast.dy()});
        }
    }
    return out;
}

std::map<std::string, Coordinate> known_points(const Facts& facts) {
    std::map<std::string, Coordinate> known = facts.pinned;
    for (const auto& [name, c] : facts.anchors) {
        known.emplace(name, c);
    }
    return known;
}

} // namespace

nlohmann::json to_json(const VerificationReport& report) {
    nlohmann::ordered_json j;
    j["ok"] = report.ok;
    auto arr = nlohmann::ordered_json::array();
    for (const auto& v : report.violations) {
        nlohmann::ordered_json item;
        item["kind"] = std::string(to_string(v.kind));
        item["detail"] = v.detail;
        item["objects"] = v.objects;
        if (v.measured_mm) {
            item["measured_mm"] = std::round(*v.measured_mm * 10.0) / 10.0;
        } else {
            item["measured_mm"] = nullptr;
        }
        arr.push_back(std::move(item));
    }
    j["violations"] = std::move(arr);
    return nlohmann::json::parse(j.dump());
}

std::string render_feedback(const VerificationReport& report, const std::vector<Placement>& placements) {
    std::ostringstream os;
    os << "Relations: ";
    for (std::size_t i = 0; i < placements.size(); ++i) {
        if (i) {
            os << ' ';
        }
        os << "The " << placements[i].name() << " is at " << format_coordinate(placements[i].coord) << " facing "
           << text::format_number(placements[i].dir.degrees()) << " degrees.";
    }
    os << "\n\nAnalysis: ";
    if (report.ok) {
        os << "All positional constraints hold and every pair of objects is at least 1 meter apart.";
    } else {
        for (std::size_t i = 0; i < report.violations.size(); ++i) {
            const auto& v = report.violations[i];
            os << "\n- " << to_string(v.kind) << ": " << v.detail;
        }
    }
    os << "\n\nError: " << (report.ok ? "No" : "Yes");
    return os.str();
}

VerificationReport verify(const std::vector<Placement>& placements, const Facts& facts, const PlacementRules& rules) {
    VerificationReport report;

    std::map<std::string, PointState> state;
    for (const auto& p : placements) {
        state[p.name()] = {p.coord, p.dir};
    }
    for (const auto& [name, c] : facts.anchors) {
        state.emplace(name, PointState{c, std::nullopt});
    }
    const Lookup lookup = [&](const std::string& n) -> const PointState* {
        auto it = state.find(n);
        return it == state.end() ? nullptr : &it->second;
    };

    for (const auto& o : facts.objects) {
        if (!state.contains(o.display_name)) {
            report.add({ViolationKind::constraint, o.display_name + " has no placement", {o.display_name}, std::nullopt});
        }
    }

    for (const auto& pc : facts.pin_conflicts) {
        report.add({ViolationKind::conflict,
                    pc.object + " is given two positions: " + format_coordinate(pc.first) + " and " +
                        format_coordinate(pc.second),
                    {pc.object},
                    euclidean_distance(pc.first, pc.second)});
    }

    for (const auto& [name, c] : facts.pinned) {
        const PointState* s = lookup(name);
        if (s && s->coord != c) {
            report.add({ViolationKind::constraint,
                        name + " must be at " + format_coordinate(c) + " but is at " + format_coordinate(s->coord),
                        {name},
                        euclidean_distance(s->coord, c)});
        }
    }
    if (rules.check_directions) {
        for (const auto& [name, d] : facts.pinned_dirs) {
            const PointState* s = lookup(name);
            if (s) {
                const double diff = angular_difference(s->dir.value_or(Direction{}), d);
                if (diff > rules.tolerance_deg) {
                    report.add({ViolationKind::constraint,
                                name + " must face " + text::format_number(d.degrees()) + " degrees but faces " +
                                    text::format_number(s->dir.value_or(Direction{}).degrees()),
                                {name},
                                std::nullopt});
                }
            }
        }
    }

    for (const auto& rel : facts.relations) {
        for (auto& v : check_relation(rel, lookup, facts, rules, false)) {
            report.add(std::move(v));
        }
    }

    const auto prop = propagate_coordinates(known_points(facts), exact_deltas(facts));
    for (const auto& d : prop.discrepancies) {
        const double ex = std::fabs(static_cast<double>(d.kept.x - d.derived.x));
        const double ey = std::fabs(static_cast<double>(d.kept.y - d.derived.y));
        if (ex > rules.tolerance_mm || ey > rules.tolerance_mm) {
            report.add({ViolationKind::conflict,
                        "inconsistent calculations for " + d.object + ": " + format_coordinate(d.kept) + " (" +
                            d.kept_path + ") versus " + format_coordinate(d.derived) + " (" + d.derived_path + ")",
                        {d.object},
                        euclidean_distance(d.kept, d.derived)});
        }
    }

    const std::set<std::string> exempt = rules.exempt_pinned_pairs ? facts.literal_pins : std::set<std::string>{};
    for (const auto& ov : find_overlaps(placements, exempt, rules.min_distance_mm)) {
        report.add({ViolationKind::overlap,
                    ov.first + " and " + ov.second + " are only " + fmt_mm(ov.distance_mm) + " mm apart",
                    {ov.first, ov.second},
                    ov.distance_mm});
    }
    return report;
}

VerificationReport verify(const std::vector<Placement>& placements, const LayoutInfo& layout,
                          const PlacementRules& rules) {
    std::vector<ObjectInstance> objects;
    objects.reserve(placements.size());
    for (const auto& p : placements) {
        objects.push_back(p.object);
    }
    return verify(placements, interpret(objects, layout), rules);
}

// ---------------------------------------------------------------------------
// Solver
// ---------------------------------------------------------------------------

namespace {

std::map<std::string, Direction> assign_directions(const Facts& facts, const std::map<std::string, Coordinate>& coords);

class Search {
public:
    Search(const Facts& facts, const PlacementRules& rules, Rng& rng) : facts_(facts), rules_(rules), rng_(rng) {
        for (const auto& o : facts.objects) {
            guarding_[o.display_name] = o.library_name == kGuarding;
        }
        lookup_ = [this](const std::string& n) -> const PointState* {
            auto it = state_.find(n);
            return it == state_.end() ? nullptr : &it->second;
        };
    }

    bool run(const std::map<std::string, Coordinate>& initial) {
        for (const auto& [name, c] : facts_.anchors) {
            state_[name] = {c, std::nullopt};
            implied_.insert(c);
        }
        for (const auto& [name, c] : initial) {
            state_[name] = {c, std::nullopt};
            assigned_.insert(name);
            implied_.insert(c);
        }
        // Everything fixed up front must already be consistent.
        for (const auto& rel : facts_.relations) {
            if (!check_relation(rel, lookup_, facts_, rules_, true).empty()) {
                return false;
            }
        }
        for (const auto& a : assigned_) {
            for (const auto& b : assigned_) {
                if (a < b && collides(a, state_[a].coord, b)) {
                    return false;
                }
            }
        }
        return dfs();
    }

    std::map<std::string, Coordinate> coordinates() const {
        std::map<std::string, Coordinate> out;
        for (const auto& n : assigned_) {
            out[n] = state_.at(n).coord;
        }
        return out;
    }

    bool exhausted() const noexcept { return evaluations_ > rules_.search_budget; }

private:
    bool collides(const std::string& a, Coordinate ca, const std::string& b) const {
        if (guarding_.at(a) || guarding_.at(b)) {
            return false;
        }
        if (rules_.exempt_pinned_pairs && facts_.literal_pins.contains(a) && facts_.literal_pins.contains(b)) {
            return false;
        }
        return euclidean_distance(ca, state_.at(b).coord) < rules_.min_distance_mm;
    }

    bool involves(const Facts::Relation& rel, const std::string& name) const {
        if (rel.subject == name || rel.object == name) {
            return true;
        }
        if (rel.ast.kind == RelationKind::between) {
            return text::iequals(rel.ast.between_first, name) || text::iequals(rel.ast.between_second, name);
        }
        return false;
    }

    bool is_placed(const std::string& name) const {
        return assigned_.contains(name) || facts_.anchors.contains(name);
    }

    std::string partner(const Facts::Relation& rel, const std::string& name) const {
        return rel.subject == name ? rel.object : rel.subject;
    }

    // Relations through which `name` is tied to something already placed.
    std::vector<const Facts::Relation*> ties(const std::string& name) const {
        std::vector<const Facts::Relation*> out;
        for (const auto& rel : facts_.relations) {
            if ((rel.subject == name || rel.object == name) && rel.subject != rel.object &&
                is_placed(partner(rel, name)) && rel.ast.kind != RelationKind::facing &&
                rel.ast.kind != RelationKind::parallel && rel.ast.kind != RelationKind::unrecognized) {
                out.push_back(&rel);
            }
        }
        return out;
    }

    bool in_bounds(Coordinate c) const {
        return std::llabs(c.x) <= rules_.bound && std::llabs(c.y) <= rules_.bound;
    }

    bool on_lattice(Coordinate c) const {
        return !rules_.lattice_only || (c.x % rules_.pitch == 0 && c.y % rules_.pitch == 0);
    }

    // Points implied by pins are always allowed, others must be grid cells.
    bool admissible(Coordinate c) const {
        return implied_.contains(c) || (in_bounds(c) && on_lattice(c));
    }

    bool acceptable(const std::string& name, Coordinate c) {
        ++evaluations_;
        for (const auto& other : assigned_) {
            if (collides(name, c, other)) {
                return false;
            }
        }
        state_[name] = {c, std::nullopt};
        assigned_.insert(name);
        bool ok = true;
        for (const auto& rel : facts_.relations) {
            if (involves(rel, name) && !check_relation(rel, lookup_, facts_, rules_, true).empty()) {
                ok = false;
                break;
            }
        }
        if (ok && rules_.check_directions) {
            ok = headings_agree();
        }
        assigned_.erase(name);
        state_.erase(name);
        return ok;
    }

    // Headings implied by the objects placed so far must not contradict a
    // pinned heading or a parallel partner.
    bool headings_agree() const {
        std::map<std::string, Coordinate> coords;
        for (const auto& n : assigned_) {
            coords[n] = state_.at(n).coord;
        }
        const auto dirs = assign_directions(facts_, coords);
        std::map<std::string, PointState> headed;
        for (const auto& [n, st] : state_) {
            PointState h = st;
            if (auto it = dirs.find(n); it != dirs.end()) {
                h.dir = it->second;
            }
            headed[n] = h;
        }
        const Lookup lookup = [&](const std::string& n) -> const PointState* {
            auto it = headed.find(n);
            return it == headed.end() ? nullptr : &it->second;
        };
        for (const auto& rel : facts_.relations) {
            if (!rel.ast.constrains_direction() || !dirs.contains(rel.subject) ||
                (rel.ast.kind == RelationKind::parallel && !dirs.contains(rel.object))) {
                continue;
            }
            if (!check_relation(rel, lookup, facts_, rules_, false).empty()) {
                return false;
            }
        }
        return true;
    }

    std::vector<Coordinate> candidates(const std::string& name) {
        std::vector<Coordinate> out;
        const auto tied = ties(name);

        for (const auto* rel : tied) {
            if (rel->ast.exact_offset()) {
                const Coordinate p = state_.at(partner(*rel, name)).coord;
                const std::int64_t sgn = rel->subject == name ? 1 : -1;
                const Coordinate forced{p.x + sgn * rel->ast.dx(), p.y + sgn * rel->ast.dy()};
                if (admissible(forced)) {
                    out.push_back(forced);
                }
                return out;
            }
        }

        const Facts::Relation* guide = nullptr;
        for (const auto* rel : tied) {
            if (rel->ast.kind == RelationKind::between && rel->subject != name) {
                continue;
            }
            guide = rel;
            break;
        }

        std::vector<Coordinate> special;
        Coordinate centre{0, 0};
        if (guide) {
            const Coordinate p = state_.at(partner(*guide, name)).coord;
            centre = p;
            const std::int64_t sgn = guide->subject == name ? 1 : -1;
            const auto& ast = guide->ast;
            if (ast.kind == RelationKind::offset || ast.kind == RelationKind::distance_only ||
                ast.kind == RelationKind::adjacency) {
                std::vector<Delta> deltas;
                for (int k = 0; k < 8; ++k) {
                    if (auto d = relation_to_delta(ast, rng_)) {
                        deltas.push_back(*d);
                    }
                }
                for (const auto& d : deltas) {
                    special.push_back({p.x + sgn * d.dx, p.y + sgn * d.dy});
                }
            } else if (ast.kind == RelationKind::between) {
                NameResolver resolve(facts_.objects, facts_.anchors, {});
                auto a = resolve(ast.between_first);
                auto b = resolve(ast.between_second);
                if (a && b && is_placed(*a) && is_placed(*b)) {
                    const Coordinate ca = state_.at(*a).coord;
                    const Coordinate cb = state_.at(*b).coord;
                    centre = {round_mm((static_cast<double>(ca.x) + static_cast<double>(cb.x)) / 2.0),
                              round_mm((static_cast<double>(ca.y) + static_cast<double>(cb.y)) / 2.0)};
                    special.push_back(centre);
                }
            }
        } else {
            std::vector<Coordinate> pts;
            for (const auto& n : assigned_) {
                pts.push_back(state_.at(n).coord);
            }
            centre = centroid(pts);
        }

        std::set<Coordinate> seen;
        for (const auto& c : special) {
            if (admissible(c) && seen.insert(c).second) {
                out.push_back(c);
            }
        }
        for (const auto& c : grid_candidates(rules_, centre)) {
            if (seen.insert(c).second) {
                out.push_back(c);
            }
        }
        return out;
    }

    std::optional<std::string> next_object() const {
        std::optional<std::string> best;
        int best_score = -1;
        for (const auto& o : facts_.objects) {
            if (assigned_.contains(o.display_name)) {
                continue;
            }
            int score = 0;
            for (const auto* rel : ties(o.display_name)) {
                score = std::max(score, rel->ast.exact_offset() ? 1000 : 1);
                score += rel->ast.exact_offset() ? 0 : 1;
            }
            if (score > best_score) {
                best_score = score;
                best = o.display_name;
            }
        }
        return best;
    }

    bool dfs() {
        const auto name = next_object();
        if (!name) {
            return true;
        }
        for (const auto& c : candidates(*name)) {
            if (exhausted()) {
                return false;
            }
            if (!acceptable(*name, c)) {
                continue;
            }
            state_[*name] = {c, std::nullopt};
            assigned_.insert(*name);
            if (dfs()) {
                return true;
            }
            assigned_.erase(*name);
            state_.erase(*name);
        }
        return false;
    }

    const Facts& facts_;
    const PlacementRules& rules_;
    Rng& rng_;
    std::map<std::string, bool> guarding_;
    std::map<std::string, PointState> state_;
    std::set<std::string> assigned_;
    std::set<Coordinate> implied_;
    Lookup lookup_;
    std::size_t evaluations_ = 0;
};

std::map<std::string, Direction> assign_directions(const Facts& facts, const std::map<std::string, Coordinate>& coords) {
    std::map<std::string, Direction> dirs = facts.pinned_dirs;
    auto coord_of = [&](const std::string& n) -> std::optional<Coordinate> {
        if (auto it = coords.find(n); it != coords.end()) {
            return it->second;
        }
        if (auto it = facts.anchors.find(n); it != facts.anchors.end()) {
            return it->second;
        }
        return std::nullopt;
    };
    for (const auto& rel : facts.relations) {
        if (!rel.ast.constrains_direction() || rel.ast.kind == RelationKind::parallel || dirs.contains(rel.subject)) {
            continue;
        }
        const auto s = coord_of(rel.subject);
        const auto o = coord_of(rel.object);
        if (s && o && *s != *o) {
            dirs[rel.subject] = compute_orientation(*s, *o);
        }
    }
    for (int pass = 0; pass < 4; ++pass) {
        for (const auto& rel : facts.relations) {
            if (rel.ast.kind != RelationKind::parallel) {
                continue;
            }
            const bool hs = dirs.contains(rel.subject);
            const bool ho = dirs.contains(rel.object);
            if (hs && !ho) {
                dirs[rel.object] = dirs[rel.subject];
            } else if (ho && !hs) {
                dirs[rel.subject] = dirs[rel.object];
            }
        }
    }
    return dirs;
}

} // namespace

SolveResult solve_placements(const Facts& facts, const PlacementRules& rules, Rng& rng) {
    SolveResult result;
    result.notes = facts.notes;

    const auto deltas = exact_deltas(facts);
    const auto prop = propagate_coordinates(known_points(facts), deltas);
    for (const auto& [name, c] : prop.coords) {
        if (facts.object(name)) {
            result.derived[name] = c;
        }
    }

    bool consistent = facts.pin_conflicts.empty();
    if (!consistent) {
        result.notes.push_back("an object is given two different coordinates");
    }
    for (const auto& d : prop.discrepancies) {
        if (std::fabs(static_cast<double>(d.kept.x - d.derived.x)) > rules.tolerance_mm ||
            std::fabs(static_cast<double>(d.kept.y - d.derived.y)) > rules.tolerance_mm) {
            consistent = false;
            result.notes.push_back("conflicting derivations for " + d.object);
        }
    }

    std::map<std::string, Coordinate> coords;
    if (consistent) {
        Search search(facts, rules, rng);
        if (search.run(result.derived)) {
            coords = search.coordinates();
            result.feasible = true;
        } else if (search.exhausted()) {
            result.notes.push_back("search budget exhausted");
        }
    }
    if (!result.feasible) {
        coords = result.derived;
        try {
            for (const auto& p : allocate_free(facts.objects, coords, {}, rules)) {
                coords[p.name()] = p.coord;
            }
        } catch (const AllocationInfeasibleError& e) {
            result.notes.push_back(e.what());
            const auto cells = grid_candidates(rules, Coordinate{0, 0});
            std::size_t next = 0;
            for (const auto& o : facts.objects) {
                if (!coords.contains(o.display_name)) {
                    coords[o.display_name] = cells[next++ % cells.size()];
                }
            }
        }
    }

    const auto dirs = assign_directions(facts, coords);
    for (const auto& o : facts.objects) {
        Placement p;
        p.object = o;
        p.coord = coords.at(o.display_name);
        if (auto it = dirs.find(o.display_name); it != dirs.end()) {
            p.dir = it->second;
        }
        result.placements.push_back(std::move(p));
    }

    for (const auto& rel : facts.relations) {
        const auto& ast = rel.ast;
        const bool expressible = ast.kind == RelationKind::offset || ast.kind == RelationKind::distance_only ||
                                 ast.kind == RelationKind::adjacency;
        if (!expressible) {
            continue;
        }
        auto at = [&](const std::string& n) -> std::optional<Coordinate> {
            if (auto it = coords.find(n); it != coords.end()) {
                return it->second;
            }
            if (auto it = facts.anchors.find(n); it != facts.anchors.end()) {
                return it->second;
            }
            return std::nullopt;
        };
        if (ast.exact_offset()) {
            result.deltas.push_back({rel.subject, rel.object, ast.dx(), ast.dy()});
        } else if (auto s = at(rel.subject), o = at(rel.object); s && o) {
            result.deltas.push_back({rel.subject, rel.object, s->x - o->x, s->y - o->y});
        }
    }
    return result;
}

} // namespace scenegen::placement
