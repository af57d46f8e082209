#include "scenegen/bench/bench.hpp"

#include "scenegen/error.hpp"
#include "scenegen/layout/grammar.hpp"
#include "scenegen/llm/gateway.hpp"
#include "scenegen/llm/structured.hpp"
#include "scenegen/text.hpp"

#include <atomic>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

namespace scenegen::bench {

const std::vector<Category>& all_categories() {
    static const std::vector<Category> all{Category::geometric_arrangement, Category::positional_details,
                                           Category::object_quantity, Category::composite_description,
                                           Category::fuzzy_description};
    return all;
}

std::string_view to_string(Category category) {
    switch (category) {
    case Category::geometric_arrangement: return "geometric_arrangement";
    case Category::positional_details: return "positional_details";
    case Category::object_quantity: return "object_quantity";
    case Category::composite_description: return "composite_description";
    case Category::fuzzy_description: return "fuzzy_description";
    }
    return "geometric_arrangement";
}

std::string_view column_label(Category category) {
    switch (category) {
    case Category::geometric_arrangement: return "Geo.";
    case Category::positional_details: return "Pos.";
    case Category::object_quantity: return "Quant.";
    case Category::composite_description: return "Comp.";
    case Category::fuzzy_description: return "Fuzz.";
    }
    return "Geo.";
}

Category category_from_string(std::string_view name) {
    const std::string key = text::snake_case(name);
    for (auto c : all_categories()) {
        if (key == to_string(c)) {
            return c;
        }
    }
    for (auto c : all_categories()) {
        if (text::iequals(name, column_label(c))) {
            return c;
        }
    }
    throw ParseError("suite", "unknown benchmark category '" + std::string(name) + "'");
}

std::vector<BenchCase> load_suite(std::string_view jsonl) {
    std::vector<BenchCase> out;
    std::size_t line_no = 0;
    for (const auto& line : text::split_lines(jsonl)) {
        ++line_no;
        if (text::trim(line).empty()) {
            continue;
        }
        try {
            const auto j = nlohmann::json::parse(line);
            BenchCase c;
            c.id = llm::json_text(j.at("id"));
            c.description = j.at("description").get<std::string>();
            c.category = category_from_string(j.at("category").get<std::string>());
            out.push_back(std::move(c));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("suite", "suite line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

std::vector<BenchCase> load_suite_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot read suite file '" + path + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return load_suite(ss.str());
}

// ---------------------------------------------------------------------------
// Estimator
// ---------------------------------------------------------------------------

namespace {

// Exact binomial coefficient while it fits; nullopt on overflow.
std::optional<std::uint64_t> binomial(std::int64_t n, std::int64_t k) {
    if (k < 0 || k > n) {
        return 0;
    }
    k = std::min(k, n - k);
    unsigned __int128 r = 1;
    for (std::int64_t i = 1; i <= k; ++i) {
        r = r * static_cast<unsigned __int128>(n - k + i) / static_cast<unsigned __int128>(i);
        if (r > std::numeric_limits<std::uint64_t>::max()) {
            return std::nullopt;
        }
    }
    return static_cast<std::uint64_t>(r);
}

} // namespace

double pass_at_k(std::int64_t n, std::int64_t c, std::int64_t k) {
    if (n < 0 || c < 0 || c > n || k < 1 || k > n) {
        throw PreconditionError("pass@k needs 0 <= c <= n and 1 <= k <= n (n=" + std::to_string(n) +
                                ", c=" + std::to_string(c) + ", k=" + std::to_string(k) + ")");
    }
    if (n - c < k) {
        return 1.0;
    }
    const auto all = binomial(n, k);
    const auto miss = binomial(n - c, k);
    if (all && miss) {
        return static_cast<double>(*all - *miss) / static_cast<double>(*all);
    }
    double prod = 1.0;
    for (std::int64_t i = n - c + 1; i <= n; ++i) {
        prod *= 1.0 - static_cast<double>(k) / static_cast<double>(i);
    }
    return 1.0 - prod;
}

std::string_view to_string(Verdict verdict) {
    switch (verdict) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::unknown: return "unknown";
    }
    return "fail";
}

// ---------------------------------------------------------------------------
// Judge
// ---------------------------------------------------------------------------

namespace {

bool is_robot(std::string_view kind) {
    return text::contains_ci(kind, "robot");
}

// Whether a scene object of `actual` kind can stand for an instance the
// description introduced with `surface`, read by the grammar as `expected`.
bool kind_accepts(std::string_view surface, std::string_view expected, std::string_view actual) {
    if (text::iequals(expected, actual)) {
        return true;
    }
    if (!is_robot(expected) || !is_robot(actual) || text::iequals(surface, expected)) {
        return false;
    }
    const auto s = text::lower(surface);
    const auto a = text::lower(actual);
    for (std::string_view brand : {"kuka", "abb", "yaskawa"}) {
        if (s.find(brand) != std::string::npos) {
            if (a.find(brand) == std::string::npos) {
                return false;
            }
            for (std::string_view model : {"125", "350", "6600", "1800"}) {
                if (s.find(model) != std::string::npos && a.find(model) == std::string::npos) {
                    return false;
                }
            }
            return true;
        }
    }
    return true;
}

// Maximum bipartite matching of description instances to scene objects.
std::optional<std::vector<std::size_t>> match_objects(const layout::SceneSpec& spec, const Scene& scene) {
    const std::size_t n = spec.kinds.size();
    if (n != scene.placements.size()) {
        return std::nullopt;
    }
    std::vector<std::vector<std::size_t>> edges(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (kind_accepts(spec.surfaces[i], spec.kinds[i], scene.placements[j].object.library_name)) {
                edges[i].push_back(j);
            }
        }
    }
    std::vector<std::optional<std::size_t>> owner(n);
    std::function<bool(std::size_t, std::vector<bool>&)> augment = [&](std::size_t i, std::vector<bool>& seen) {
        for (auto j : edges[i]) {
            if (seen[j]) {
                continue;
            }
            seen[j] = true;
            if (!owner[j] || augment(*owner[j], seen)) {
                owner[j] = i;
                return true;
            }
        }
        return false;
    };
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<bool> seen(n, false);
        if (!augment(i, seen)) {
            return std::nullopt;
        }
    }
    std::vector<std::size_t> assignment(n);
    for (std::size_t j = 0; j < n; ++j) {
        assignment[*owner[j]] = j;
    }
    return assignment;
}

// Every perfect matching consistent with the kinds, in lexicographic order,
// up to `limit`. Interchangeable objects make the choice of matching
// arbitrary, so the judge accepts a scene when any of them verifies.
std::vector<std::vector<std::size_t>> kind_matchings(const layout::SceneSpec& spec, const Scene& scene,
                                                     std::size_t limit) {
    const std::size_t n = spec.kinds.size();
    std::vector<std::vector<std::size_t>> out;
    std::vector<std::size_t> current(n);
    std::vector<bool> used(n, false);
    std::function<void(std::size_t)> dfs = [&](std::size_t i) {
        if (out.size() >= limit) {
            return;
        }
        if (i == n) {
            out.push_back(current);
            return;
        }
        for (std::size_t j = 0; j < n; ++j) {
            if (!used[j] && kind_accepts(spec.surfaces[i], spec.kinds[i], scene.placements[j].object.library_name)) {
                used[j] = true;
                current[i] = j;
                dfs(i + 1);
                used[j] = false;
            }
        }
    };
    dfs(0);
    return out;
}

} // namespace

Judgement auto_judge(const Scene& scene, const BenchCase& bench_case, const placement::PlacementRules& rules) {
    const auto spec = layout::parse_description(bench_case.description);
    if (!spec.covered || spec.kinds.empty()) {
        std::string why = spec.kinds.empty() ? "the description names no library object" : "";
        for (const auto& n : spec.notes) {
            why += (why.empty() ? "" : "; ") + n;
        }
        return {Verdict::unknown, "description exceeds the checkable grammar: " + why};
    }
    if (const auto problems = check_scene_structure(scene, ObjectLibrary::standard()); !problems.empty()) {
        return {Verdict::fail, "malformed scene: " + text::join(problems, "; ")};
    }
    const auto assignment = match_objects(spec, scene);
    if (!assignment) {
        std::vector<std::string> got;
        for (const auto& p : scene.placements) {
            got.push_back(p.object.library_name);
        }
        return {Verdict::fail, "objects do not match the description: expected [" + text::join(spec.kinds, ", ") +
                                   "], got [" + text::join(got, ", ") + "]"};
    }
    const auto instances = spec.instances();
    const auto facts = placement::interpret(instances, spec.layout());
    std::optional<placement::VerificationReport> first;
    for (const auto& candidate : kind_matchings(spec, scene, 5040)) {
        std::vector<Placement> renamed;
        for (std::size_t i = 0; i < instances.size(); ++i) {
            const auto& p = scene.placements[candidate[i]];
            renamed.push_back({instances[i], p.coord, p.dir});
        }
        auto report = placement::verify(renamed, facts, rules);
        if (report.ok) {
            first.reset();
            break;
        }
        if (!first) {
            first = std::move(report);
        }
    }
    if (first) {
        std::vector<std::string> details;
        for (const auto& v : first->violations) {
            details.push_back(std::string(placement::to_string(v.kind)) + ": " + v.detail);
        }
        return {Verdict::fail, text::join(details, "; ")};
    }
    return {Verdict::pass, "all objects present and every checkable constraint holds"};
}

// ---------------------------------------------------------------------------
// Suite
// ---------------------------------------------------------------------------

BenchReport run_suite(const std::vector<BenchCase>& suite, const BackendFactory& factory, const SuiteOptions& options) {
    if (suite.empty()) {
        throw PreconditionError("the benchmark suite is empty");
    }
    if (options.samples < 1 || options.k < 1 || options.k > options.samples) {
        throw PreconditionError("need 1 <= k <= samples");
    }
    const std::size_t total = suite.size() * static_cast<std::size_t>(options.samples);
    std::vector<Judgement> judgements(total);
    std::vector<std::string> backend_ids(total);
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (std::size_t job = next++; job < total; job = next++) {
            const auto& bc = suite[job / static_cast<std::size_t>(options.samples)];
            const auto sample = job % static_cast<std::size_t>(options.samples);
            const auto sample_seed = derive_seed(options.seed, bc.id + "#" + std::to_string(sample));
            try {
                auto backend = factory(sample_seed);
                backend_ids[job] = backend->id();
                llm::Gateway gateway(std::move(backend));
                const auto result = run_pipeline(bc.description, gateway, options.pipeline);
                judgements[job] = auto_judge(result.scene, bc, options.pipeline.refinement.rules);
            } catch (const std::exception& e) {
                judgements[job] = {Verdict::fail, std::string("pipeline error: ") + e.what()};
            }
        }
    };
    const std::size_t threads = std::max<std::size_t>(1, std::min(options.parallel, total));
    std::vector<std::thread> workers;
    for (std::size_t t = 0; t < threads; ++t) {
        workers.emplace_back(worker);
    }
    for (auto& w : workers) {
        w.join();
    }

    BenchReport report;
    report.samples = options.samples;
    report.k = options.k;
    report.seed = options.seed;
    for (const auto& id : backend_ids) {
        if (!id.empty()) {
            report.backend = id;
            break;
        }
    }
    for (std::size_t i = 0; i < suite.size(); ++i) {
        BenchResult r;
        r.case_id = suite[i].id;
        r.category = suite[i].category;
        r.n = options.samples;
        for (int s = 0; s < options.samples; ++s) {
            const auto& j = judgements[i * static_cast<std::size_t>(options.samples) + static_cast<std::size_t>(s)];
            r.c += j.verdict == Verdict::pass ? 1 : 0;
            r.unknown += j.verdict == Verdict::unknown ? 1 : 0;
            r.judgements.push_back(j);
        }
        r.pass_at_k = pass_at_k(r.n, r.c, options.k);
        report.cases.push_back(std::move(r));
    }

    double sum = 0.0;
    for (auto cat : all_categories()) {
        CategorySummary s;
        s.category = cat;
        double cat_sum = 0.0;
        for (const auto& r : report.cases) {
            if (r.category == cat) {
                ++s.cases;
                cat_sum += r.pass_at_k;
                s.unknown += static_cast<std::size_t>(r.unknown);
            }
        }
        if (s.cases == 0) {
            continue;
        }
        s.pass_at_k = cat_sum / static_cast<double>(s.cases);
        report.unknown += s.unknown;
        report.categories.push_back(s);
    }
    for (const auto& r : report.cases) {
        sum += r.pass_at_k;
    }
    report.overall = sum / static_cast<double>(report.cases.size());
    return report;
}

nlohmann::ordered_json to_json(const BenchReport& report) {
    nlohmann::ordered_json j;
    j["samples"] = report.samples;
    j["k"] = report.k;
    j["seed"] = report.seed;
    j["backend"] = report.backend;
    j["judge"] = "automatic: grammar re-extraction plus deterministic verification; unknown samples count as not correct";
    j["note"] = "Scores come from the automatic judge, not from human evaluation, and are not comparable to "
                "published human-judged numbers.";
    auto columns = nlohmann::ordered_json::array();
    for (const auto& c : report.categories) {
        nlohmann::ordered_json col;
        col["category"] = std::string(to_string(c.category));
        col["column"] = std::string(column_label(c.category));
        col["cases"] = c.cases;
        col["pass_at_k"] = c.pass_at_k;
        col["unknown"] = c.unknown;
        columns.push_back(std::move(col));
    }
    j["categories"] = std::move(columns);
    j["overall"] = report.overall;
    j["unknown"] = report.unknown;
    auto cases = nlohmann::ordered_json::array();
    for (const auto& r : report.cases) {
        nlohmann::ordered_json c;
        c["id"] = r.case_id;
        c["category"] = std::string(to_string(r.category));
        c["n"] = r.n;
        c["c"] = r.c;
        c["unknown"] = r.unknown;
        c["pass_at_k"] = r.pass_at_k;
        auto js = nlohmann::ordered_json::array();
        for (const auto& jg : r.judgements) {
            js.push_back({{"verdict", std::string(to_string(jg.verdict))}, {"reason", jg.reason}});
        }
        c["judgements"] = std::move(js);
        cases.push_back(std::move(c));
    }
    j["cases"] = std::move(cases);
    return j;
}

std::string render_table(const BenchReport& report) {
    auto cell = [](double v) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "%.1f", v * 100.0);
        return std::string(buf);
    };
    auto pad = [](std::string s, std::size_t w) {
        if (s.size() < w) {
            s.insert(0, w - s.size(), ' ');
        }
        return s;
    };
    std::ostringstream os;
    os << pad("", 10);
    for (const auto& c : report.categories) {
        os << pad(std::string(column_label(c.category)), 9);
    }
    os << pad("Overall", 9) << "\n";
    os << pad("pass@" + std::to_string(report.k), 10);
    for (const auto& c : report.categories) {
        os << pad(cell(c.pass_at_k), 9);
    }
    os << pad(cell(report.overall), 9) << "\n";
    os << pad("unknown", 10);
    for (const auto& c : report.categories) {
        os << pad(std::to_string(c.unknown), 9);
    }
    os << pad(std::to_string(report.unknown), 9) << "\n";
    os << pad("cases", 10);
    for (const auto& c : report.categories) {
        os << pad(std::to_string(c.cases), 9);
    }
    os << pad(std::to_string(report.cases.size()), 9) << "\n";
    return os.str();
}

} // namespace scenegen::bench
