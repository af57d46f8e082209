#include "doctest.h"

#include "fixtures.hpp"
#include "scenegen/bench/bench.hpp"
#include "scenegen/error.hpp"
#include "scenegen/llm/scripted.hpp"

#include <atomic>
#include <numeric>

using namespace scenegen;
using namespace scenegen::bench;
using namespace scenegen::testing;

namespace {

// Fraction of k-subsets of n samples (c of them correct) holding at least
// one correct sample, by enumeration over bitmasks.
double enumerated_pass_at_k(int n, int c, int k) {
    long hits = 0;
    long total = 0;
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
        if (__builtin_popcount(mask) != k) {
            continue;
        }
        ++total;
        const unsigned correct = (1u << c) - 1;
        hits += (mask & correct) != 0 ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(total);
}

BenchCase suite_case(const std::string& id) {
    for (const auto& c : load_suite_file(source_path("assets/bench/benchmark40.jsonl"))) {
        if (c.id == id) {
            return c;
        }
    }
    throw std::runtime_error("no case " + id);
}

class FailingBackend : public llm::Backend {
public:
    std::string id() const override { return "failing"; }
    std::string complete(const llm::CompletionRequest&) override { throw CredentialError("no access"); }
};

} // namespace

TEST_CASE("pass@k examples") {
    CHECK(pass_at_k(5, 5, 1) == 1.0);
    CHECK(pass_at_k(5, 0, 1) == 0.0);
    CHECK(pass_at_k(5, 2, 1) == doctest::Approx(0.4));
    CHECK_THROWS_AS(pass_at_k(5, 6, 1), PreconditionError);
    CHECK_THROWS_AS(pass_at_k(5, 2, 0), PreconditionError);
    CHECK_THROWS_AS(pass_at_k(5, 2, 6), PreconditionError);
    CHECK_THROWS_AS(pass_at_k(5, -1, 1), PreconditionError);
}

TEST_CASE("pass@k equals subset enumeration on the full small grid") {
    for (int n = 1; n <= 8; ++n) {
        for (int c = 0; c <= n; ++c) {
            for (int k = 1; k <= n; ++k) {
                CHECK(pass_at_k(n, c, k) == doctest::Approx(enumerated_pass_at_k(n, c, k)).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("suite files") {
    const auto suite = load_suite_file(source_path("assets/bench/benchmark40.jsonl"));
    CHECK(suite.size() == 40);
    std::set<std::string> ids;
    for (const auto& c : suite) {
        ids.insert(c.id);
    }
    CHECK(ids.size() == 40);
    CHECK(load_suite_file(source_path("assets/bench/smoke5.jsonl")).size() == 5);
    CHECK(suite_case("36").category == Category::fuzzy_description);
    CHECK_THROWS_AS(load_suite(R"({"id": "1", "description": "x", "category": "nonsense"})"), ParseError);
    CHECK_THROWS_AS(load_suite("{"), ParseError);
    for (const auto c : all_categories()) {
        CHECK(category_from_string(to_string(c)) == c);
    }
    CHECK(column_label(Category::geometric_arrangement) == "Geo.");
    CHECK(column_label(Category::fuzzy_description) == "Fuzz.");
}

TEST_CASE("automatic judge") {
    const auto kuka_case = suite_case("14");
    const auto objects = number_instances({"Kuka Robot KR125", "Welding Table"});
    const Scene good{kuka_case.description, {place(objects[0], 2000, 0), place(objects[1], 0, 0)}};
    const auto pass = auto_judge(good, kuka_case);
    CHECK(pass.verdict == Verdict::pass);
    CHECK(auto_judge(good, kuka_case).verdict == pass.verdict);

    const Scene behind{kuka_case.description, {place(objects[0], -2000, 0), place(objects[1], 0, 0)}};
    const auto fail = auto_judge(behind, kuka_case);
    CHECK(fail.verdict == Verdict::fail);
    CHECK_FALSE(fail.reason.empty());

    const auto wrong_kinds = number_instances({"Cabinet", "Welding Table"});
    const Scene cabinet{kuka_case.description, {place(wrong_kinds[0], 2000, 0), place(wrong_kinds[1], 0, 0)}};
    CHECK(auto_judge(cabinet, kuka_case).verdict == Verdict::fail);

    const Scene empty{kuka_case.description, {}};
    CHECK(auto_judge(empty, kuka_case).verdict == Verdict::fail);

    const auto fuzzy = suite_case("36");
    CHECK(auto_judge(good, fuzzy).verdict == Verdict::unknown);
}

TEST_CASE("judge accepts either pairing of interchangeable instances") {
    const BenchCase conveyors{"15", "Give me two conveyors, arranged in parallel.", Category::geometric_arrangement};
    const auto objects = number_instances({"Conveyor", "Conveyor"});
    const Scene scene{conveyors.description, {place(objects[0], 0, 0, 90), place(objects[1], 2000, 0, 270)}};
    CHECK(auto_judge(scene, conveyors).verdict == Verdict::pass);
    const Scene skewed{conveyors.description, {place(objects[0], 0, 0, 90), place(objects[1], 2000, 0, 45)}};
    CHECK(auto_judge(skewed, conveyors).verdict == Verdict::fail);
}

TEST_CASE("scripted smoke suite passes every sample") {
    const auto suite = load_suite_file(source_path("assets/bench/smoke5.jsonl"));
    SuiteOptions options;
    options.samples = 3;
    const auto report = run_suite(
        suite, [](std::uint64_t seed) { return llm::make_scripted_backend({seed}); }, options);
    CHECK(report.overall == 1.0);
    CHECK(report.cases.size() == 5);
    for (const auto& r : report.cases) {
        CHECK(r.n == 3);
        CHECK(r.c == 3);
    }
}

TEST_CASE("per-case estimate and category aggregation") {
    const std::vector<BenchCase> one{{"14", "Position a Kuka robot in front of a table.", Category::geometric_arrangement}};
    std::atomic<int> made{0};
    SuiteOptions options;
    options.samples = 5;
    options.parallel = 1;
    const auto report = run_suite(
        one,
        [&](std::uint64_t seed) -> std::shared_ptr<llm::Backend> {
            if (made++ < 2) {
                return llm::make_scripted_backend({seed});
            }
            return std::make_shared<FailingBackend>();
        },
        options);
    REQUIRE(report.cases.size() == 1);
    CHECK(report.cases[0].n == 5);
    CHECK(report.cases[0].c == 2);
    CHECK(report.cases[0].pass_at_k == doctest::Approx(0.4));
    CHECK(report.overall == doctest::Approx(0.4));

    const auto suite = load_suite_file(source_path("assets/bench/benchmark40.jsonl"));
    SuiteOptions quick;
    quick.samples = 1;
    const auto full = run_suite(
        suite, [](std::uint64_t seed) { return llm::make_scripted_backend({seed}); }, quick);
    CHECK(full.cases.size() == 40);
    double weighted = 0.0;
    std::size_t cases = 0;
    for (const auto& cat : full.categories) {
        weighted += cat.pass_at_k * static_cast<double>(cat.cases);
        cases += cat.cases;
    }
    CHECK(cases == 40);
    CHECK(full.overall == doctest::Approx(weighted / 40.0));
    CHECK(full.categories.size() == 5);
    const auto table = render_table(full);
    for (const auto c : all_categories()) {
        CHECK(table.find(std::string(column_label(c))) != std::string::npos);
    }
    CHECK(table.find("Overall") != std::string::npos);
    const auto j = to_json(full);
    CHECK(j["cases"].size() == 40);

    CHECK_THROWS_AS(run_suite({}, [](std::uint64_t seed) { return llm::make_scripted_backend({seed}); }),
                    PreconditionError);
    SuiteOptions bad_k;
    bad_k.samples = 2;
    bad_k.k = 3;
    CHECK_THROWS_AS(
        run_suite(one, [](std::uint64_t seed) { return llm::make_scripted_backend({seed}); }, bad_k),
        PreconditionError);
}
