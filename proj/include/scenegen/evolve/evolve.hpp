#pragma once

#include "scenegen/llm/gateway.hpp"
#include "scenegen/placement/engine.hpp"
#include "scenegen/rng.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace scenegen::evolve {

// ---------------------------------------------------------------------------
// Rewrite methods
// ---------------------------------------------------------------------------

enum class RewriteMethod {
    object_addition,         // add or replace objects
    location_specification,  // pin an object to coordinates
    relation_specification,  // add or sharpen a relative position
    quantity_modification,   // turn one object into several
    fuzzy_expressions,       // make precise information vague
    rephrasing,              // same facts, new wording
};

const std::vector<RewriteMethod>& all_methods();
std::string_view to_string(RewriteMethod method);
RewriteMethod method_from_string(std::string_view name);

/// Sampling weights out of 24, in the order of all_methods().
const std::vector<std::uint32_t>& method_weights();

/// Instruction text inserted into the rewrite prompt for `method`.
std::string_view method_guidance(RewriteMethod method);

/// Rule-based rewrite over the description grammar. Numeric choices follow
/// the method ranges: 3 to 10 instances, distances strictly between 1 m and
/// 5 m, coordinates strictly inside (-5000, 5000).
std::string rule_rewrite(std::string_view description, RewriteMethod method, Rng& rng);

// ---------------------------------------------------------------------------
// MinHash
// ---------------------------------------------------------------------------

struct MinHashParams {
    std::size_t num_perms = 128;
    std::size_t shingle_size = 3;
};

struct MinHashSignature {
    std::vector<std::uint64_t> hashes;
    MinHashParams params;
};

/// Hashed word shingles of lower-cased text with punctuation removed.
/// Texts shorter than `k` words yield one shingle of all their words.
std::vector<std::uint64_t> shingles(std::string_view text, std::size_t k);

MinHashSignature minhash(std::string_view text, const MinHashParams& params = {});

/// Fraction of matching slots. Throws PreconditionError on mismatched params.
double estimate_jaccard(const MinHashSignature& a, const MinHashSignature& b);

/// Jaccard similarity of the shingle sets.
double exact_jaccard(std::string_view a, std::string_view b, std::size_t k = 3);

// ---------------------------------------------------------------------------
// Description pool
// ---------------------------------------------------------------------------

struct DescriptionRecord {
    std::string id;  // content hash
    std::string text;
    std::optional<std::string> parent_id;
    std::optional<RewriteMethod> method;
    int generation = 0;
    MinHashSignature signature;
};

DescriptionRecord make_seed(std::string text, const MinHashParams& params = {});
std::string content_id(std::string_view text);

nlohmann::ordered_json to_json(const DescriptionRecord& record);
/// Signatures are recomputed from the text.
DescriptionRecord record_from_json(const nlohmann::json& value, const MinHashParams& params = {});

bool is_duplicate(const MinHashSignature& candidate, const std::vector<DescriptionRecord>& pool,
                  double threshold = 0.8);

struct SampledStep {
    std::size_t index = 0;  // into the pool
    RewriteMethod method = RewriteMethod::rephrasing;
};

/// Uniform description, weighted method. Throws PreconditionError on an empty pool.
SampledStep sample_step(const std::vector<DescriptionRecord>& pool, Rng& rng);

/// Asks the model to rewrite `record` with `method`. `variant` distinguishes
/// repeated attempts on the same input. Throws StageError on unparseable output.
std::string rewrite(const DescriptionRecord& record, RewriteMethod method, llm::Gateway& gateway, int variant = 0);

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

struct ValidationReport {
    bool ok = true;
    bool fully_checkable = true;  // false when the text goes beyond the grammar
    placement::VerificationReport report;
    std::vector<Placement> placements;  // derived layout the report was computed on
    std::vector<std::string> notes;
};

nlohmann::json to_json(const ValidationReport& report);

/// Extracts the description with the grammar, derives placements and checks
/// them. Explicit coordinates do not excuse collisions here.
ValidationReport validate_description(std::string_view text);

/// Relations / Analysis / Error rendering of a validation report.
std::string render_validation(const ValidationReport& report);

// ---------------------------------------------------------------------------
// Evolution loop
// ---------------------------------------------------------------------------

struct EvolveOptions {
    std::size_t target = 100;
    std::size_t max_iterations = 0;  // 0: 20 x target
    double dedup_threshold = 0.8;
    MinHashParams minhash;
    std::function<ValidationReport(std::string_view)> validator;  // default validate_description
};

struct EvolveResult {
    std::vector<DescriptionRecord> pool;
    std::size_t iterations = 0;
    std::size_t rejected_invalid = 0;
    std::size_t rejected_duplicate = 0;
    std::size_t rewrite_failures = 0;
    std::vector<std::string> warnings;
};

EvolveResult evolve(const std::vector<DescriptionRecord>& seeds, llm::Gateway& gateway, Rng& rng,
                    const EvolveOptions& options = {});

// ---------------------------------------------------------------------------
// Trajectories
// ---------------------------------------------------------------------------

enum class TrajectoryTask { assign, verify_pos, verify_neg, reassign };

std::string_view to_string(TrajectoryTask task);

struct TrajectoryRecord {
    TrajectoryTask task = TrajectoryTask::assign;
    std::string description_id;
    llm::Conversation messages;
    std::vector<bool> loss_mask;  // true only on the final assistant message
    std::string split;            // "train" or "validation"
};

nlohmann::ordered_json to_json(const TrajectoryRecord& record);

struct CollectOptions {
    double validation_fraction = 0.05;
    std::uint64_t seed = 0;
    placement::PlacementRules rules;
};

struct CollectResult {
    std::vector<TrajectoryRecord> records;
    std::vector<std::string> log;  // skipped descriptions
};

/// Per description: an assign and a verify record from the strong model,
/// and, when the weak model's assignment is judged wrong, a verify_neg and
/// a two-round reassign record.
CollectResult collect_trajectories(const std::vector<DescriptionRecord>& pool, llm::Gateway& strong,
                                   llm::Gateway& weak, const CollectOptions& options = {});

} // namespace scenegen::evolve
