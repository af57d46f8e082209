#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace scenegen {

inline constexpr std::string_view kGuarding = "Guarding";
inline constexpr double kMinDistanceMm = 1000.0;
inline constexpr std::int64_t kDefaultBound = 5000;

// ---------------------------------------------------------------------------
// Object library
// ---------------------------------------------------------------------------

struct LibraryEntry {
    std::string name;        // canonical, case-sensitive
    std::string model_path;  // relative to the application root directory
};

class ObjectLibrary {
public:
    ObjectLibrary() = default;
    explicit ObjectLibrary(std::vector<LibraryEntry> entries);

    /// The ten permission-list kinds.
    static const ObjectLibrary& standard();

    const std::vector<LibraryEntry>& entries() const noexcept { return entries_; }
    bool contains(std::string_view name) const noexcept { return find(name) != nullptr; }
    const LibraryEntry* find(std::string_view name) const noexcept;
    std::vector<std::string> names() const;

private:
    std::vector<LibraryEntry> entries_;
};

// ---------------------------------------------------------------------------
// Geometry
// ---------------------------------------------------------------------------

/// Ground-plane coordinate in integer millimetres. z is always 0.
struct Coordinate {
    std::int64_t x = 0;
    std::int64_t y = 0;

    friend auto operator<=>(const Coordinate&, const Coordinate&) = default;
};

/// Degrees counter-clockwise from +x, kept in [0, 360).
class Direction {
public:
    Direction() = default;
    explicit Direction(double degrees);

    double degrees() const noexcept { return degrees_; }
    double radians() const noexcept;

    friend bool operator==(const Direction&, const Direction&) = default;

private:
    friend Direction normalize_direction(double degrees);
    double degrees_ = 0.0;
};

Direction normalize_direction(double degrees);

/// Smallest absolute angle between two directions, in [0, 180].
double angular_difference(Direction a, Direction b) noexcept;

double euclidean_distance(Coordinate a, Coordinate b) noexcept;

/// Rounds to integer millimetres, halves away from zero.
std::int64_t round_mm(double value);

/// Parses "[1500, 2500, 0]", "[2000,2000]" or "[-1234mm,-2001mm,0]".
/// Returns nullopt for anything that is not a bracketed coordinate.
std::optional<Coordinate> parse_coordinate_text(std::string_view text);

std::string format_coordinate(Coordinate c);

// ---------------------------------------------------------------------------
// Objects and placements
// ---------------------------------------------------------------------------

struct ObjectInstance {
    std::string id;
    std::string library_name;
    std::string display_name;

    friend bool operator==(const ObjectInstance&, const ObjectInstance&) = default;
};

/// Builds instances for a list of library names. Kinds appearing more than
/// once get "<name> <k>" display names, k counting from 1 in list order.
std::vector<ObjectInstance> number_instances(const std::vector<std::string>& library_names);

/// Strips a trailing " <k>" instance suffix.
std::string base_kind_name(std::string_view display_name);

struct Placement {
    ObjectInstance object;
    Coordinate coord;
    Direction dir;

    const std::string& name() const noexcept { return object.display_name; }
    bool is_guarding() const noexcept { return object.library_name == kGuarding; }

    friend bool operator==(const Placement&, const Placement&) = default;
};

// ---------------------------------------------------------------------------
// Extracted layout facts
// ---------------------------------------------------------------------------

struct PositionRecord {
    std::string name;                      // object display name or anchor
    std::optional<Coordinate> coord;       // literal coordinate, when given
    std::string location_text;             // free-text location otherwise
    std::optional<Direction> dir;          // numeric orientation
    std::string direction_text;            // e.g. "towards the Conveyor"

    bool has_location() const noexcept { return coord.has_value() || !location_text.empty(); }
    bool has_direction() const noexcept { return dir.has_value() || !direction_text.empty(); }
};

struct RelationRecord {
    std::string subject;
    std::string object;
    std::string text;  // subject relative to object
};

struct DeltaRecord {
    std::string subject;
    std::string object;
    std::int64_t dx = 0;  // subject = object + (dx, dy, 0)
    std::int64_t dy = 0;

    friend bool operator==(const DeltaRecord&, const DeltaRecord&) = default;
};

struct NamedAnchor {
    std::string name;
    std::optional<Coordinate> coord;
};

struct LayoutInfo {
    std::vector<PositionRecord> positions;
    std::vector<RelationRecord> relations;
    std::vector<NamedAnchor> anchors;
};

// ---------------------------------------------------------------------------
// Scene
// ---------------------------------------------------------------------------

struct Scene {
    std::string description;
    std::vector<Placement> placements;

    std::vector<ObjectInstance> objects() const;
    const Placement* find(std::string_view display_name) const noexcept;
};

struct OverlapPair {
    std::string first;
    std::string second;
    double distance_mm = 0.0;
};

/// All pairs closer than `min_distance_mm`, skipping pairs that involve a
/// Guarding instance and pairs whose members are both in `pinned`.
std::vector<OverlapPair> find_overlaps(const std::vector<Placement>& placements,
                                       const std::set<std::string>& pinned,
                                       double min_distance_mm = kMinDistanceMm);

/// Checks the scene invariants (unique names, library membership, bijection).
/// Returns human-readable problems; empty when the scene is well formed.
std::vector<std::string> check_scene_structure(const Scene& scene, const ObjectLibrary& library);

} // namespace scenegen
