#pragma once

#include "scenegen/placement/relation.hpp"
#include "scenegen/rng.hpp"
#include "scenegen/scene_model.hpp"

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

namespace scenegen::placement {

/// Numeric rules shared by the solver, verification and the oracle.
struct PlacementRules {
    std::int64_t bound = kDefaultBound;  // free objects live in [-bound, bound]^2
    std::int64_t pitch = 500;            // allocation grid spacing
    double min_distance_mm = kMinDistanceMm;
    double tolerance_mm = 50.0;          // per-axis slack for delta relations
    double tolerance_deg = 5.0;
    double between_radius_mm = 500.0;
    double adjacency_max_mm = 5000.0;
    bool exempt_pinned_pairs = true;     // explicit coordinates may overlap
    bool check_directions = true;
    bool lattice_only = false;           // relation-guided candidates must lie on the pitch grid
    std::size_t search_budget = 400000;  // candidate evaluations per solve
};

/// Layout facts resolved against a concrete object list: literal pins,
/// deduced pins, anchors and parsed relations.
struct Facts {
    struct Relation {
        std::string subject;
        std::string object;
        std::string text;
        RelationAST ast;
    };

    std::vector<ObjectInstance> objects;
    std::map<std::string, Coordinate> pinned;        // object -> required coordinate
    std::set<std::string> literal_pins;              // pinned by an explicit number
    std::map<std::string, Direction> pinned_dirs;
    std::map<std::string, Coordinate> anchors;
    std::vector<Relation> relations;
    std::vector<std::string> notes;                  // references that could not be resolved

    struct PinConflict {
        std::string object;
        Coordinate first;
        Coordinate second;
    };
    std::vector<PinConflict> pin_conflicts;          // one object given two different coordinates

    const ObjectInstance* object(std::string_view name) const noexcept;
    bool is_anchor(std::string_view name) const noexcept { return anchors.contains(std::string(name)); }
};

/// Resolves names in `layout` against `objects`. Location text such as
/// "the center of the scene" pins to the origin; direction text naming an
/// object becomes a facing relation.
Facts interpret(const std::vector<ObjectInstance>& objects, const LayoutInfo& layout);

// ---------------------------------------------------------------------------
// Propagation
// ---------------------------------------------------------------------------

struct Discrepancy {
    std::string object;
    Coordinate kept;
    Coordinate derived;
    std::string kept_path;
    std::string derived_path;
};

struct PropagationResult {
    std::map<std::string, Coordinate> coords;
    std::map<std::string, std::string> paths;  // how each coordinate was obtained
    std::vector<Discrepancy> discrepancies;
};

/// Breadth-first closure over the delta graph starting from every known
/// coordinate. Known coordinates are never overwritten; disagreeing
/// derivations are reported as discrepancies.
PropagationResult propagate_coordinates(const std::map<std::string, Coordinate>& known,
                                        const std::vector<DeltaRecord>& deltas);

/// Heading from `subject` towards `target`, CCW from +x.
/// Throws DegenerateInputError when the coordinates coincide.
Direction compute_orientation(Coordinate subject, Coordinate target);

// ---------------------------------------------------------------------------
// Allocation
// ---------------------------------------------------------------------------

/// Grid cells inside the bounds, nearest to `centre` first; ties broken
/// row-major (y, then x).
std::vector<Coordinate> grid_candidates(const PlacementRules& rules, Coordinate centre);

/// Places every object that has no coordinate in `partial`: first grid cell,
/// scanning outward from the centroid of placed objects, that keeps
/// `min_distance_mm` from every placed non-Guarding object. Directions of
/// newly placed objects default to 0. Throws AllocationInfeasibleError.
std::vector<Placement> allocate_free(const std::vector<ObjectInstance>& objects,
                                     const std::map<std::string, Coordinate>& partial,
                                     const std::map<std::string, Direction>& directions,
                                     const PlacementRules& rules);

// ---------------------------------------------------------------------------
// Verification
// ---------------------------------------------------------------------------

enum class ViolationKind { constraint, conflict, overlap };

std::string_view to_string(ViolationKind kind);

struct Violation {
    ViolationKind kind = ViolationKind::constraint;
    std::string detail;
    std::vector<std::string> objects;
    std::optional<double> measured_mm;
};

struct VerificationReport {
    bool ok = true;
    std::vector<Violation> violations;

    void add(Violation v) {
        ok = false;
        violations.push_back(std::move(v));
    }
    std::size_t count(ViolationKind kind) const;
};

nlohmann::json to_json(const VerificationReport& report);

/// Renders the report in the Relations / Analysis / Error layout used by the
/// verification and feedback prompts.
std::string render_feedback(const VerificationReport& report, const std::vector<Placement>& placements);

VerificationReport verify(const std::vector<Placement>& placements, const Facts& facts,
                          const PlacementRules& rules = {});
VerificationReport verify(const std::vector<Placement>& placements, const LayoutInfo& layout,
                          const PlacementRules& rules = {});

// ---------------------------------------------------------------------------
// Deterministic assignment
// ---------------------------------------------------------------------------

struct SolveResult {
    std::vector<DeltaRecord> deltas;                 // step 1: relations as increments
    std::map<std::string, Coordinate> derived;       // step 2: pins plus propagation
    std::vector<Placement> placements;               // step 3: every object placed
    bool feasible = false;                           // search found a consistent layout
    std::vector<std::string> notes;
};

/// Steps 1-4 of placement assignment: infer pins, rewrite relations as
/// deltas, propagate, then search the remaining objects against the relation
/// constraints and the collision rule.
SolveResult solve_placements(const Facts& facts, const PlacementRules& rules, Rng& rng);

} // namespace scenegen::placement
