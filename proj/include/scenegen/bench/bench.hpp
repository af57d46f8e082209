#pragma once

#include "scenegen/llm/backend.hpp"
#include "scenegen/pipeline.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"

namespace scenegen::bench {

enum class Category {
    geometric_arrangement,
    positional_details,
    object_quantity,
    composite_description,
    fuzzy_description,
};

const std::vector<Category>& all_categories();
std::string_view to_string(Category category);
/// Column label as in the published results table ("Geo.", "Pos.", ...).
std::string_view column_label(Category category);
Category category_from_string(std::string_view name);

struct BenchCase {
    std::string id;
    std::string description;
    Category category = Category::geometric_arrangement;
};

/// One case per line: {"id", "description", "category"}.
std::vector<BenchCase> load_suite(std::string_view jsonl);
std::vector<BenchCase> load_suite_file(const std::string& path);

/// Unbiased pass@k estimator 1 - C(n-c, k) / C(n, k).
/// Throws PreconditionError unless 0 <= c <= n and 1 <= k <= n.
double pass_at_k(std::int64_t n, std::int64_t c, std::int64_t k);

enum class Verdict { pass, fail, unknown };
std::string_view to_string(Verdict verdict);

struct Judgement {
    Verdict verdict = Verdict::fail;
    std::string reason;
};

/// Re-reads the case with the description grammar and checks the scene
/// against it: object kinds must match one to one (generic phrases accept
/// any kind of their family) and the placements must verify. Descriptions
/// beyond the grammar are judged unknown.
Judgement auto_judge(const Scene& scene, const BenchCase& bench_case,
                     const placement::PlacementRules& rules = {});

struct BenchResult {
    std::string case_id;
    Category category = Category::geometric_arrangement;
    int n = 0;
    int c = 0;
    int unknown = 0;
    double pass_at_k = 0.0;
    std::vector<Judgement> judgements;
};

struct CategorySummary {
    Category category = Category::geometric_arrangement;
    std::size_t cases = 0;
    double pass_at_k = 0.0;  // mean over cases
    std::size_t unknown = 0;  // samples judged unknown
};

struct BenchReport {
    int samples = 0;
    int k = 1;
    std::uint64_t seed = 0;
    std::string backend;
    std::vector<BenchResult> cases;
    std::vector<CategorySummary> categories;  // only categories present in the suite
    double overall = 0.0;                     // mean over cases
    std::size_t unknown = 0;
};

/// Makes the backend for one sample; `sample_seed` is derived from the run
/// seed, the case id and the sample index.
using BackendFactory = std::function<std::shared_ptr<llm::Backend>(std::uint64_t sample_seed)>;

struct SuiteOptions {
    int samples = 5;
    int k = 1;
    std::uint64_t seed = 0;
    std::size_t parallel = 4;  // concurrent samples
    PipelineOptions pipeline;
};

/// Runs every case `samples` times through the pipeline and judges each
/// scene. Pipeline failures are judged as failed samples. Throws
/// PreconditionError on an empty suite or k > samples.
BenchReport run_suite(const std::vector<BenchCase>& suite, const BackendFactory& factory,
                      const SuiteOptions& options = {});

nlohmann::ordered_json to_json(const BenchReport& report);

/// Category columns, overall and unknown counts as a text table.
std::string render_table(const BenchReport& report);

} // namespace scenegen::bench
