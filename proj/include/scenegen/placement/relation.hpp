#pragma once

#include "scenegen/rng.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace scenegen::placement {

enum class RelationKind {
    offset,         // signed displacement along x and/or y
    facing,         // subject is oriented towards the object
    distance_only,  // centre distance, direction free
    adjacency,      // "next to", "near": close but not overlapping
    parallel,       // same heading (mod 180)
    between,        // subject at the midpoint of two references
    unrecognized,
};

std::string_view to_string(RelationKind kind);

/// One axis of an offset. `sign` is 0 when the axis is not mentioned.
struct AxisTerm {
    int sign = 0;
    std::optional<std::int64_t> magnitude_mm;  // nullopt: direction word only

    bool mentioned() const noexcept { return sign != 0; }
    bool exact() const noexcept { return sign != 0 && magnitude_mm.has_value(); }
};

/// Parsed form of a relation phrase "<subject> <phrase> <object>", expressed
/// in the global frame: front = +x, left = +y.
struct RelationAST {
    RelationKind kind = RelationKind::unrecognized;
    AxisTerm x;
    AxisTerm y;
    double distance_mm = 0.0;
    std::string between_first;
    std::string between_second;
    bool also_facing = false;  // "... and facing it"

    /// True when the offset fixes the displacement on both axes; an axis
    /// that is not mentioned counts as zero once the other axis is exact.
    bool exact_offset() const noexcept;
    std::int64_t dx() const noexcept;
    std::int64_t dy() const noexcept;
    bool constrains_direction() const noexcept {
        return kind == RelationKind::facing || kind == RelationKind::parallel || also_facing;
    }
};

/// Deterministic grammar for relation phrases. Never throws; anything it
/// does not understand comes back as `unrecognized`.
RelationAST parse_relation(std::string_view relation_text);

struct Delta {
    std::int64_t dx = 0;
    std::int64_t dy = 0;

    friend bool operator==(const Delta&, const Delta&) = default;
};

/// Rewrites a relation as a coordinate difference (subject - object).
/// Exact offsets map directly; distance-only and adjacency relations, and
/// offsets that name a direction without a distance, draw the free part
/// from `rng`. Direction-only relations have no delta.
std::optional<Delta> relation_to_delta(const RelationAST& ast, Rng& rng);

} // namespace scenegen::placement
