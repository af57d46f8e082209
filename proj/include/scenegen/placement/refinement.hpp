#pragma once

#include "scenegen/llm/gateway.hpp"
#include "scenegen/placement/engine.hpp"

#include <optional>
#include <string>
#include <vector>

namespace scenegen::placement {

struct RefinementOptions {
    int max_iters = 3;  // assignment answers that are verified; 0 behaves like 1 without feedback
    PlacementRules rules;
};

struct RefinementResult {
    std::vector<Placement> placements;
    VerificationReport report;  // of the final placements
    int iterations = 0;         // answers verified
    llm::Conversation transcript;
};

/// Bindings of the assignment prompt for a resolved layout.
llm::Bindings assignment_bindings(std::string_view description, const std::vector<ObjectInstance>& objects,
                                  const LayoutInfo& layout);

/// Placements from an assignment answer: the last step's positions, or a
/// bare JSON list when the answer has no step headers. Throws ParseError.
std::vector<Placement> parse_assignment(std::string_view answer, const std::vector<ObjectInstance>& objects);

/// Assignment prompt, deterministic verification, and feedback rounds until
/// the placements verify or `max_iters` answers were checked. Unparseable
/// answers are re-asked twice before StageError("assignment").
RefinementResult assign_with_refinement(const std::vector<ObjectInstance>& objects, const LayoutInfo& layout,
                                        std::string_view description, llm::Gateway& gateway,
                                        const RefinementOptions& options = {});

/// Exhaustive search over grid placements for the objects without a pinned
/// coordinate. The candidate set is the pitch lattice inside the bound plus
/// every point implied by pins through exact offsets. Directions follow
/// pins, facing targets and parallel partners. Returns placements passing
/// verify, or nullopt. Throws OracleCapacityError above 4 free objects or
/// 10^7 candidate assignments.
std::optional<std::vector<Placement>> brute_force_feasible(const std::vector<ObjectInstance>& objects,
                                                           const LayoutInfo& layout, const PlacementRules& rules);

} // namespace scenegen::placement
