#include "doctest.h"

#include "fixtures.hpp"
#include "scenegen/error.hpp"
#include "scenegen/llm/scripted.hpp"
#include "scenegen/placement/engine.hpp"
#include "scenegen/placement/refinement.hpp"
#include "scenegen/placement/relation.hpp"

#include <cmath>

using namespace scenegen;
using namespace scenegen::placement;
using namespace scenegen::testing;

namespace {

bool has_kind(const VerificationReport& report, ViolationKind kind) {
    return report.count(kind) > 0;
}

const char* kWrongAssignment = R"(#Step 1: Rewrite Relative Position#
Analysis: increments.
New Relative Positions: [{"object 1": "ABB Robot IRB6600", "relation": "[2500, 2600, 0]", "object 2": "Turntable"}]

#Step 2: Calculate Coordinates#
Analysis: apply them.
Positions: [{"name": "Turntable", "position": "[1500, 2500, 0]", "orientation": "0"},
            {"name": "ABB Robot IRB6600", "position": "[4000, 5100, 0]", "orientation": "0"}]

#Step 3: Assign Positions#
Analysis: the table goes far away.
Positions: [{"name": "Turntable", "position": "[1500, 2500, 0]", "orientation": "0"},
            {"name": "ABB Robot IRB6600", "position": "[4000, 5100, 0]", "orientation": "0"},
            {"name": "Welding Table", "position": "[0, 4500, 0]", "orientation": "0"}]
)";

} // namespace

TEST_CASE("relation grammar on offsets") {
    const auto worked = parse_relation("2.6 meters to the right and 2.5 meters back");
    CHECK(worked.kind == RelationKind::offset);
    CHECK(worked.exact_offset());
    CHECK(worked.dx() == -2500);
    CHECK(worked.dy() == -2600);

    const auto front = parse_relation("3 meters in front of");
    CHECK(front.kind == RelationKind::offset);
    CHECK(front.exact_offset());
    CHECK(front.dx() == 3000);
    CHECK(front.dy() == 0);

    const auto left = parse_relation("1500 mm to the left of");
    CHECK(left.dx() == 0);
    CHECK(left.dy() == 1500);

    const auto behind = parse_relation("behind");
    CHECK(behind.kind == RelationKind::offset);
    CHECK(behind.x.sign == -1);
    CHECK_FALSE(behind.x.magnitude_mm.has_value());
    CHECK_FALSE(behind.exact_offset());
}

TEST_CASE("relation grammar on the other kinds") {
    CHECK(parse_relation("facing").kind == RelationKind::facing);
    CHECK(parse_relation("oriented towards").kind == RelationKind::facing);
    CHECK(parse_relation("next to").kind == RelationKind::adjacency);
    CHECK(parse_relation("parallel to").kind == RelationKind::parallel);
    const auto away = parse_relation("2 meters away from");
    CHECK(away.kind == RelationKind::distance_only);
    CHECK(away.distance_mm == 2000.0);
    const auto between = parse_relation("between the Cabinet and the ValveStand");
    CHECK(between.kind == RelationKind::between);
    CHECK(between.between_first == "Cabinet");
    CHECK(between.between_second == "ValveStand");
    CHECK(parse_relation("2 meters in front of, facing").also_facing);
    CHECK(parse_relation("in harmony with").kind == RelationKind::unrecognized);
    CHECK(parse_relation("").kind == RelationKind::unrecognized);
}

TEST_CASE("relations become coordinate differences") {
    Rng rng(1);
    CHECK(relation_to_delta(parse_relation("2.6 meters to the right and 2.5 meters back"), rng) == Delta{-2500, -2600});
    CHECK_FALSE(relation_to_delta(parse_relation("facing"), rng).has_value());
    CHECK_FALSE(relation_to_delta(parse_relation("parallel to"), rng).has_value());
    for (int i = 0; i < 200; ++i) {
        const auto d = relation_to_delta(parse_relation("2 meters away from"), rng);
        REQUIRE(d.has_value());
        CHECK(std::hypot(static_cast<double>(d->dx), static_cast<double>(d->dy)) == doctest::Approx(2000.0).epsilon(1e-3));
        const auto a = relation_to_delta(parse_relation("next to"), rng);
        REQUIRE(a.has_value());
        const double r = std::hypot(static_cast<double>(a->dx), static_cast<double>(a->dy));
        CHECK(r >= 1000.0);
        CHECK(r <= 5000.0);
        const auto b = relation_to_delta(parse_relation("behind"), rng);
        REQUIRE(b.has_value());
        CHECK(b->dx < 0);
        CHECK(b->dy == 0);
    }
}

TEST_CASE("propagation of the worked example") {
    const auto result = propagate_coordinates({{"Turntable", {1500, 2500}}},
                                              {{"ABB Robot IRB6600", "Turntable", -2500, -2600}});
    CHECK(result.coords.at("ABB Robot IRB6600") == Coordinate{-1000, -100});
    CHECK(result.coords.at("Turntable") == Coordinate{1500, 2500});
    CHECK(result.discrepancies.empty());
}

TEST_CASE("propagation runs both ways along a chain and reports disagreements") {
    const auto chain = propagate_coordinates({{"B", {0, 0}}}, {{"A", "B", 1000, 0}, {"C", "B", 0, -2000}, {"D", "C", 500, 500}});
    CHECK(chain.coords.at("A") == Coordinate{1000, 0});
    CHECK(chain.coords.at("C") == Coordinate{0, -2000});
    CHECK(chain.coords.at("D") == Coordinate{500, -1500});

    const auto clash = propagate_coordinates({{"A", {0, 0}}, {"B", {5000, 0}}}, {{"B", "A", 1000, 0}});
    CHECK(clash.coords.at("B") == Coordinate{5000, 0});
    REQUIRE(clash.discrepancies.size() == 1);
    CHECK(clash.discrepancies[0].object == "B");
    CHECK(clash.discrepancies[0].derived == Coordinate{1000, 0});
}

TEST_CASE("propagation over random trees equals the path sums") {
    Rng rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        const auto n = static_cast<std::size_t>(rng.uniform_int(2, 12));
        std::vector<Coordinate> truth{{rng.uniform_int(-5000, 5000), rng.uniform_int(-5000, 5000)}};
        std::vector<DeltaRecord> deltas;
        for (std::size_t i = 1; i < n; ++i) {
            const auto parent = rng.index(i);
            const std::int64_t dx = rng.uniform_int(-3000, 3000);
            const std::int64_t dy = rng.uniform_int(-3000, 3000);
            truth.push_back({truth[parent].x + dx, truth[parent].y + dy});
            const auto child = "n" + std::to_string(i);
            const auto par = "n" + std::to_string(parent);
            if (rng.bernoulli(0.5)) {
                deltas.push_back({child, par, dx, dy});
            } else {
                deltas.push_back({par, child, -dx, -dy});
            }
        }
        const auto result = propagate_coordinates({{"n0", truth[0]}}, deltas);
        CHECK(result.discrepancies.empty());
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(result.coords.at("n" + std::to_string(i)) == truth[i]);
        }
    }
}

TEST_CASE("orientation towards a target") {
    CHECK(compute_orientation({0, 0}, {0, 1000}).degrees() == doctest::Approx(90.0));
    CHECK(compute_orientation({0, 0}, {-1000, 0}).degrees() == doctest::Approx(180.0));
    CHECK(compute_orientation({0, 0}, {1000, 1000}).degrees() == doctest::Approx(45.0));
    CHECK(compute_orientation({0, 0}, {0, -1000}).degrees() == doctest::Approx(270.0));
    CHECK_THROWS_AS(compute_orientation({5, 5}, {5, 5}), DegenerateInputError);
    Rng rng(23);
    for (int i = 0; i < 500; ++i) {
        const Coordinate a{rng.uniform_int(-5000, 5000), rng.uniform_int(-5000, 5000)};
        const Coordinate b{rng.uniform_int(-5000, 5000), rng.uniform_int(-5000, 5000)};
        if (a == b) {
            continue;
        }
        CHECK(angular_difference(compute_orientation(a, b), compute_orientation(b, a)) == doctest::Approx(180.0));
    }
}

TEST_CASE("grid candidates scan outward from the centre") {
    const PlacementRules rules;
    const auto cells = grid_candidates(rules, {0, 0});
    CHECK(cells.size() == 21 * 21);
    CHECK(cells.front() == Coordinate{0, 0});
    for (std::size_t i = 1; i < cells.size(); ++i) {
        CHECK(euclidean_distance(cells[i - 1], {0, 0}) <= euclidean_distance(cells[i], {0, 0}));
    }
}

TEST_CASE("free allocation") {
    const PlacementRules rules;
    const auto single = allocate_free(number_instances({"Cabinet"}), {}, {}, rules);
    REQUIRE(single.size() == 1);
    CHECK(single[0].coord == Coordinate{0, 0});
    CHECK(single[0].dir.degrees() == 0.0);

    const auto objects = number_instances(std::vector<std::string>(30, "Cabinet"));
    const auto placed = allocate_free(objects, {{"Cabinet 1", {0, 0}}}, {}, rules);
    REQUIRE(placed.size() == 30);
    CHECK(placed[0].coord == Coordinate{0, 0});
    for (std::size_t i = 0; i < placed.size(); ++i) {
        CHECK(std::llabs(placed[i].coord.x) <= rules.bound);
        CHECK(std::llabs(placed[i].coord.y) <= rules.bound);
        for (std::size_t j = i + 1; j < placed.size(); ++j) {
            CHECK(euclidean_distance(placed[i].coord, placed[j].coord) >= 1000.0);
        }
    }

    CHECK_THROWS_AS(allocate_free(number_instances(std::vector<std::string>(500, "Cabinet")), {}, {}, rules),
                    AllocationInfeasibleError);
}

TEST_CASE("verification of the worked example") {
    const auto objects = worked_objects();
    const auto layout = worked_layout();
    const std::vector<Placement> good{place(objects[0], 0, 4500), place(objects[1], 1500, 2500),
                                      place(objects[2], -1000, -100)};
    const auto ok = verify(good, layout);
    CHECK(ok.ok);
    CHECK(ok.violations.empty());

    const std::vector<Placement> off{place(objects[0], 0, 4500), place(objects[1], 1500, 2500),
                                     place(objects[2], -1100, 0)};
    const auto bad = verify(off, layout);
    CHECK_FALSE(bad.ok);
    CHECK(bad.count(ViolationKind::conflict) == bad.violations.size());
    for (const auto& v : bad.violations) {
        CHECK(v.objects == std::vector<std::string>{"ABB Robot IRB6600", "Turntable"});
    }

    const std::vector<Placement> tolerated{place(objects[0], 0, 4500), place(objects[1], 1500, 2500),
                                           place(objects[2], -950, -149)};
    CHECK(verify(tolerated, layout).ok);

    const std::vector<Placement> crowded{place(objects[0], 1000, 2000), place(objects[1], 1500, 2500),
                                         place(objects[2], -1000, -100)};
    const auto overlap = verify(crowded, layout);
    CHECK(has_kind(overlap, ViolationKind::overlap));
    CHECK(overlap.violations[0].measured_mm.value_or(0) == doctest::Approx(707.1).epsilon(1e-3));

    const std::vector<Placement> missing{place(objects[1], 1500, 2500), place(objects[2], -1000, -100)};
    const auto incomplete = verify(missing, interpret(objects, layout));
    REQUIRE(incomplete.violations.size() == 1);
    CHECK(incomplete.violations[0].objects == std::vector<std::string>{"Welding Table"});
}

TEST_CASE("verification flags literal pin conflicts") {
    const auto objects = number_instances({"ABB Robot IRB6600", "Conveyor"});
    LayoutInfo layout;
    PositionRecord a;
    a.name = "ABB Robot IRB6600";
    a.coord = Coordinate{0, 0};
    PositionRecord b = a;
    b.coord = Coordinate{3000, 0};
    layout.positions = {a, b};
    const auto facts = interpret(objects, layout);
    REQUIRE(facts.pin_conflicts.size() == 1);
    const auto report = verify({place(objects[0], 0, 0), place(objects[1], 0, 3000)}, facts);
    CHECK(has_kind(report, ViolationKind::conflict));
}

TEST_CASE("feedback rendering ends with the error verdict") {
    const auto objects = worked_objects();
    const std::vector<Placement> placements{place(objects[0], 0, 4500), place(objects[1], 1500, 2500),
                                            place(objects[2], -1100, 0)};
    const auto report = verify(placements, worked_layout());
    const auto text = render_feedback(report, placements);
    CHECK(text.find("Relations:") != std::string::npos);
    CHECK(text.find("Error: Yes") != std::string::npos);
    const auto j = to_json(report);
    CHECK(j["ok"] == false);
    CHECK(j["violations"][0]["kind"] == "conflict");
}

TEST_CASE("deterministic solver satisfies the worked example") {
    Rng rng(2);
    const auto objects = worked_objects();
    const auto facts = interpret(objects, worked_layout());
    const auto result = solve_placements(facts, {}, rng);
    CHECK(result.feasible);
    CHECK(result.derived.at("ABB Robot IRB6600") == Coordinate{-1000, -100});
    CHECK(verify(result.placements, facts).ok);
}

TEST_CASE("assignment parsing") {
    const auto objects = worked_objects();
    const auto placements = parse_assignment(kWrongAssignment, objects);
    REQUIRE(placements.size() == 3);
    CHECK(named(placements, "ABB Robot IRB6600").coord == Coordinate{4000, 5100});
    const auto bare = parse_assignment(R"([{"name": "Turntable", "position": "[1, 2, 0]"}])", objects);
    REQUIRE(bare.size() == 1);
    CHECK(bare[0].coord == Coordinate{1, 2});
    CHECK_THROWS_AS(parse_assignment("no positions here", objects), ParseError);
}

TEST_CASE("refinement converges at once with a reliable backend") {
    llm::Gateway gateway(llm::make_scripted_backend());
    const auto result = assign_with_refinement(worked_objects(), worked_layout(), kWorkedExample, gateway);
    CHECK(result.report.ok);
    CHECK(result.iterations == 1);
    CHECK(named(result.placements, "Turntable").coord == Coordinate{1500, 2500});
    CHECK(named(result.placements, "ABB Robot IRB6600").coord == Coordinate{-1000, -100});
}

TEST_CASE("refinement repairs a wrong first answer through feedback") {
    auto scripted = llm::make_scripted_backend();
    scripted->prime(llm::TemplateId::placement_assignment, kWrongAssignment);
    llm::Gateway gateway(scripted);
    const auto result = assign_with_refinement(worked_objects(), worked_layout(), kWorkedExample, gateway);
    CHECK(result.report.ok);
    CHECK(result.iterations == 2);
    CHECK(result.transcript.size() >= 4);
    CHECK(named(result.placements, "ABB Robot IRB6600").coord == Coordinate{-1000, -100});
}

TEST_CASE("refinement stops at the iteration cap") {
    auto scripted = llm::make_scripted_backend();
    for (int i = 0; i < 3; ++i) {
        scripted->prime(llm::TemplateId::placement_assignment, kWrongAssignment);
        scripted->prime(llm::TemplateId::placement_feedback, kWrongAssignment);
    }
    llm::Gateway gateway(scripted);
    RefinementOptions options;
    options.max_iters = 2;
    const auto capped = assign_with_refinement(worked_objects(), worked_layout(), kWorkedExample, gateway, options);
    CHECK_FALSE(capped.report.ok);
    CHECK(capped.iterations == 2);

    options.max_iters = 0;
    const auto once = assign_with_refinement(worked_objects(), worked_layout(), kWorkedExample, gateway, options);
    CHECK(once.iterations == 1);
    CHECK_FALSE(once.report.ok);
}

TEST_CASE("exhaustive oracle") {
    PlacementRules rules;
    rules.pitch = 2000;
    const auto objects = worked_objects();
    const auto found = brute_force_feasible(objects, worked_layout(), rules);
    REQUIRE(found.has_value());
    CHECK(verify(*found, worked_layout(), rules).ok);

    const auto pair = number_instances({"Cabinet", "ValveStand"});
    LayoutInfo contradictory;
    PositionRecord c;
    c.name = "Cabinet";
    c.coord = Coordinate{0, 0};
    PositionRecord v;
    v.name = "ValveStand";
    v.coord = Coordinate{4000, 0};
    contradictory.positions = {c, v};
    contradictory.relations = {{"ValveStand", "Cabinet", "1 meter in front of"}};
    CHECK_FALSE(brute_force_feasible(pair, contradictory, rules).has_value());

    CHECK_THROWS_AS(brute_force_feasible(number_instances(std::vector<std::string>(6, "Cabinet")), {}, rules),
                    OracleCapacityError);
}
