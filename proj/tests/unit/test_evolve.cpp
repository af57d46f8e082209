#include "doctest.h"

#include "fixtures.hpp"
#include "scenegen/error.hpp"
#include "scenegen/evolve/evolve.hpp"
#include "scenegen/layout/grammar.hpp"
#include "scenegen/llm/scripted.hpp"
#include "scenegen/placement/relation.hpp"
#include "scenegen/text.hpp"

#include <cmath>
#include <map>

using namespace scenegen;
using namespace scenegen::evolve;
using namespace scenegen::testing;

namespace {

std::vector<DescriptionRecord> seed_pool() {
    std::vector<DescriptionRecord> out;
    for (const auto& line : text::split_lines(read_text(source_path("assets/seeds/seeds20.jsonl")))) {
        if (!text::trim(line).empty()) {
            out.push_back(make_seed(nlohmann::json::parse(line).at("text").get<std::string>()));
        }
    }
    return out;
}

std::size_t last_assistant(const llm::Conversation& messages) {
    for (std::size_t i = messages.size(); i-- > 0;) {
        if (messages[i].role == "assistant") {
            return i;
        }
    }
    return messages.size();
}

} // namespace

TEST_CASE("method weights follow the stated sampling probabilities") {
    CHECK(method_weights() == std::vector<std::uint32_t>{5, 6, 6, 1, 5, 1});
    CHECK(all_methods().size() == 6);
    CHECK(all_methods()[3] == RewriteMethod::quantity_modification);
    for (const auto m : all_methods()) {
        CHECK(method_from_string(to_string(m)) == m);
        CHECK_FALSE(method_guidance(m).empty());
    }
}

TEST_CASE("sampling") {
    Rng rng(5);
    CHECK_THROWS_AS(sample_step({}, rng), PreconditionError);
    const std::vector<DescriptionRecord> one{make_seed("Place a Cabinet.")};
    for (int i = 0; i < 50; ++i) {
        CHECK(sample_step(one, rng).index == 0);
    }
    const auto pool = seed_pool();
    std::vector<int> per_index(pool.size());
    for (int i = 0; i < 20000; ++i) {
        ++per_index[sample_step(pool, rng).index];
    }
    for (const int c : per_index) {
        CHECK(std::abs(c - 1000) < 150);
    }
}

TEST_CASE("quantity modification yields three to ten instances") {
    Rng rng(7);
    for (int i = 0; i < 200; ++i) {
        const auto out = rule_rewrite("Place a Welding Table.", RewriteMethod::quantity_modification, rng);
        const auto spec = layout::parse_description(out);
        CHECK(spec.kinds.size() >= 3);
        CHECK(spec.kinds.size() <= 10);
        for (const auto& k : spec.kinds) {
            CHECK(k == "Welding Table");
        }
    }
}

TEST_CASE("relation specification inserts distances between 1 m and 5 m") {
    Rng rng(9);
    int measured = 0;
    for (int i = 0; i < 200; ++i) {
        const auto out = rule_rewrite("Place a Cabinet and a ValveStand.", RewriteMethod::relation_specification, rng);
        const auto info = layout::parse_description(out).layout();
        REQUIRE_FALSE(info.relations.empty());
        for (const auto& r : info.relations) {
            const auto ast = placement::parse_relation(r.text);
            double d = ast.distance_mm;
            if (ast.kind == placement::RelationKind::offset) {
                const double x = static_cast<double>(ast.x.magnitude_mm.value_or(0));
                const double y = static_cast<double>(ast.y.magnitude_mm.value_or(0));
                d = std::max(x, y);
            }
            if (d > 0) {
                ++measured;
                CHECK(d > 1000.0);
                CHECK(d < 5000.0);
            }
        }
    }
    CHECK(measured > 0);
}

TEST_CASE("location specification pins strictly inside the bounds") {
    Rng rng(11);
    for (int i = 0; i < 200; ++i) {
        const auto out = rule_rewrite("Place a Cabinet and a Turntable.", RewriteMethod::location_specification, rng);
        const auto info = layout::parse_description(out).layout();
        bool pinned = false;
        for (const auto& p : info.positions) {
            if (p.coord) {
                pinned = true;
                CHECK(std::llabs(p.coord->x) < 5000);
                CHECK(std::llabs(p.coord->y) < 5000);
            }
        }
        CHECK(pinned);
    }
}

TEST_CASE("rephrasing through the scripted model keeps the extracted facts") {
    llm::Gateway gateway(llm::make_scripted_backend());
    for (const auto& seed : seed_pool()) {
        const auto out = rewrite(seed, RewriteMethod::rephrasing, gateway);
        const auto before = layout::parse_description(seed.text);
        const auto after = layout::parse_description(out);
        CHECK(after.kinds == before.kinds);
        CHECK(after.layout().relations.size() == before.layout().relations.size());
        CHECK(after.layout().positions.size() == before.layout().positions.size());
    }
}

TEST_CASE("minhash similarity") {
    const auto a = minhash(kWorkedExample);
    CHECK(a.hashes.size() == 128);
    CHECK(estimate_jaccard(a, a) == 1.0);
    CHECK(estimate_jaccard(a, minhash(kWorkedExample)) == 1.0);
    const auto b = minhash("Conveyors run in parallel lines near the loading dock gates every morning");
    CHECK(exact_jaccard(kWorkedExample, "Conveyors run in parallel lines near the loading dock gates every morning") == 0.0);
    CHECK(estimate_jaccard(a, b) < 0.05);
    CHECK_THROWS_AS(estimate_jaccard(a, minhash("x", {64, 3})), PreconditionError);
    CHECK(shingles("one two", 3).size() == 1);
    CHECK(shingles("One, two three!", 3) == shingles("one two three", 3));

    const std::vector<DescriptionRecord> pool{make_seed(kWorkedExample)};
    CHECK(is_duplicate(a, pool));
    CHECK_FALSE(is_duplicate(b, pool));
}

TEST_CASE("minhash estimates track exact Jaccard on related texts") {
    const auto pool = seed_pool();
    Rng rng(13);
    for (int i = 0; i < 100; ++i) {
        const auto& base = pool[rng.index(pool.size())].text;
        const auto other = rule_rewrite(base, all_methods()[rng.index(6)], rng);
        const double estimate = estimate_jaccard(minhash(base), minhash(other));
        CHECK(std::abs(estimate - exact_jaccard(base, other)) <= 0.1);
    }
}

TEST_CASE("description validation") {
    CHECK(validate_description(kWorkedExample).ok);
    const auto same = validate_description("Place a Cabinet at [0, 0, 0] and a ValveStand at [0, 0, 0].");
    CHECK_FALSE(same.ok);
    CHECK(same.report.count(placement::ViolationKind::overlap) == 1);
    const auto twice = validate_description("Place a Cabinet at [0, 0, 0]. The Cabinet is at [3000, 0, 0].");
    CHECK_FALSE(twice.ok);
    CHECK(twice.report.count(placement::ViolationKind::conflict) >= 1);
    const auto vague = validate_description("Create a layout with 9 robots arranged in a 3x3 matrix configuration.");
    CHECK(vague.ok);
    CHECK_FALSE(vague.fully_checkable);
    CHECK(render_validation(same).find("Error: Yes") != std::string::npos);
}

TEST_CASE("records round-trip through JSON") {
    auto child = make_seed("Place three Cabinets.");
    child.parent_id = content_id("Place a Cabinet.");
    child.method = RewriteMethod::quantity_modification;
    child.generation = 1;
    const auto back = record_from_json(nlohmann::json::parse(to_json(child).dump()));
    CHECK(back.id == child.id);
    CHECK(back.parent_id == child.parent_id);
    CHECK(back.method == child.method);
    CHECK(back.generation == 1);
    CHECK(back.signature.hashes == child.signature.hashes);
}

TEST_CASE("evolution keeps lineage and validity") {
    llm::Gateway gateway(llm::make_scripted_backend());
    Rng rng(21);
    const auto seeds = seed_pool();
    EvolveOptions options;
    options.target = 60;
    const auto result = evolve::evolve(seeds, gateway, rng, options);
    REQUIRE(result.pool.size() == 60);
    std::map<std::string, const DescriptionRecord*> by_id;
    for (const auto& r : result.pool) {
        by_id[r.id] = &r;
    }
    CHECK(by_id.size() == result.pool.size());
    for (std::size_t i = 0; i < result.pool.size(); ++i) {
        const auto& r = result.pool[i];
        if (i < seeds.size()) {
            CHECK(r.generation == 0);
            CHECK_FALSE(r.method.has_value());
            CHECK_FALSE(r.parent_id.has_value());
            continue;
        }
        REQUIRE(r.parent_id.has_value());
        REQUIRE(by_id.contains(*r.parent_id));
        CHECK(r.generation == by_id.at(*r.parent_id)->generation + 1);
        CHECK(r.method.has_value());
        CHECK(validate_description(r.text).ok);
        for (std::size_t j = 0; j < i; ++j) {
            CHECK(estimate_jaccard(r.signature, result.pool[j].signature) < options.dedup_threshold);
        }
    }

    Rng again(21);
    llm::Gateway gateway2(llm::make_scripted_backend());
    const auto repeat = evolve::evolve(seeds, gateway2, again, options);
    REQUIRE(repeat.pool.size() == result.pool.size());
    for (std::size_t i = 0; i < repeat.pool.size(); ++i) {
        CHECK(repeat.pool[i].text == result.pool[i].text);
    }
}

TEST_CASE("evolution edge cases") {
    llm::Gateway gateway(llm::make_scripted_backend());
    Rng rng(3);
    const auto seeds = seed_pool();
    EvolveOptions small;
    small.target = 5;
    const auto unchanged = evolve::evolve(seeds, gateway, rng, small);
    CHECK(unchanged.pool.size() == seeds.size());
    CHECK(unchanged.iterations == 0);

    EvolveOptions strict;
    strict.target = 25;
    strict.max_iterations = 30;
    strict.validator = [](std::string_view) {
        ValidationReport r;
        r.ok = false;
        return r;
    };
    const auto starved = evolve::evolve(seeds, gateway, rng, strict);
    CHECK(starved.pool.size() == seeds.size());
    CHECK(starved.iterations == 30);
    CHECK_FALSE(starved.warnings.empty());

    CHECK_THROWS_AS(evolve::evolve({}, gateway, rng, small), PreconditionError);
}

TEST_CASE("trajectory collection from strong and weak models") {
    const std::vector<DescriptionRecord> pool{make_seed(kWorkedExample)};
    llm::Gateway strong(llm::make_scripted_backend());
    llm::ScriptedOptions weak_options;
    weak_options.weak = true;
    weak_options.error_rate = 1.0;
    llm::Gateway weak(llm::make_scripted_backend(weak_options));
    const auto result = collect_trajectories(pool, strong, weak);

    std::map<TrajectoryTask, int> counts;
    for (const auto& r : result.records) {
        ++counts[r.task];
        REQUIRE(r.loss_mask.size() == r.messages.size());
        const auto last = last_assistant(r.messages);
        REQUIRE(last < r.messages.size());
        for (std::size_t i = 0; i < r.loss_mask.size(); ++i) {
            CHECK(r.loss_mask[i] == (i == last));
        }
        CHECK(r.description_id == pool[0].id);
    }
    CHECK(counts[TrajectoryTask::assign] == 1);
    CHECK(counts[TrajectoryTask::verify_pos] == 1);
    CHECK(counts[TrajectoryTask::verify_neg] == 1);
    CHECK(counts[TrajectoryTask::reassign] == 1);
    for (const auto& r : result.records) {
        if (r.task == TrajectoryTask::verify_neg) {
            CHECK(r.messages.back().content.find("Error: Yes") != std::string::npos);
        }
        if (r.task == TrajectoryTask::verify_pos) {
            CHECK(r.messages.back().content.find("Error: No") != std::string::npos);
        }
        if (r.task == TrajectoryTask::reassign) {
            CHECK(r.messages.size() >= 4);
        }
        if (r.task == TrajectoryTask::assign) {
            CHECK(r.messages.back().content.find("[-1000, -100, 0]") != std::string::npos);
        }
    }
    const auto j = to_json(result.records[0]);
    CHECK(j["messages"][0].contains("role"));
    CHECK(j["messages"][0].contains("content"));
}

TEST_CASE("trajectory splits follow the validation fraction") {
    const auto pool = seed_pool();
    llm::Gateway strong(llm::make_scripted_backend());
    llm::Gateway weak(llm::make_scripted_backend());
    CollectOptions all_train;
    all_train.validation_fraction = 0.0;
    for (const auto& r : collect_trajectories(pool, strong, weak, all_train).records) {
        CHECK(r.split == "train");
    }
    CollectOptions all_validation;
    all_validation.validation_fraction = 1.0;
    for (const auto& r : collect_trajectories(pool, strong, weak, all_validation).records) {
        CHECK(r.split == "validation");
    }
}
