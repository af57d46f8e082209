#include "scenegen/scene_model.hpp"

#include "scenegen/error.hpp"
#include "scenegen/text.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <map>
#include <numbers>

namespace scenegen {

ObjectLibrary::ObjectLibrary(std::vector<LibraryEntry> entries) : entries_(std::move(entries)) {
    std::set<std::string> seen;
    for (const auto& e : entries_) {
        if (!seen.insert(e.name).second) {
            throw ConfigError("duplicate library entry: " + e.name);
        }
    }
}

const ObjectLibrary& ObjectLibrary::standard() {
    static const ObjectLibrary library({
        {"Kuka Robot KR125", "Welding/kuka_kr125.cojt"},
        {"Kuka Robot KR350", "Welding/kuka_kr350.cojt"},
        {"ABB Robot IRB6600", "Welding/abb_irb6600.cojt"},
        {"YASKAWA Robot ma01800", "Welding/yaskawa_ma01800.cojt"},
        {"Welding Table", "Welding/welding_table.cojt"},
        {"Turntable", "Welding/turntable.cojt"},
        {"Cabinet", "Welding/cabinet.cojt"},
        {"ValveStand", "Welding/valve_stand.cojt"},
        {"Conveyor", "Welding/conveyor.cojt"},
        {"Guarding", "Welding/guarding.cojt"},
    });
    return library;
}

const LibraryEntry* ObjectLibrary::find(std::string_view name) const noexcept {
    for (const auto& e : entries_) {
        if (e.name == name) {
            return &e;
        }
    }
    return nullptr;
}

std::vector<std::string> ObjectLibrary::names() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) {
        out.push_back(e.name);
    }
    return out;
}

Direction::Direction(double degrees) : degrees_(normalize_direction(degrees).degrees_) {}

double Direction::radians() const noexcept {
    return degrees_ * std::numbers::pi / 180.0;
}

Direction normalize_direction(double degrees) {
    if (!std::isfinite(degrees)) {
        throw PreconditionError("direction must be finite");
    }
    double d = std::fmod(degrees, 360.0);
    if (d < 0.0) {
        d += 360.0;
    }
    if (d >= 360.0) {  // fmod of a tiny negative can round up to 360
        d = 0.0;
    }
    Direction out;
    out.degrees_ = d == 0.0 ? 0.0 : d;  // no negative zero
    return out;
}

double angular_difference(Direction a, Direction b) noexcept {
    const double d = std::fabs(a.degrees() - b.degrees());
    return d > 180.0 ? 360.0 - d : d;
}

double euclidean_distance(Coordinate a, Coordinate b) noexcept {
    const double dx = static_cast<double>(a.x - b.x);
    const double dy = static_cast<double>(a.y - b.y);
    return std::sqrt(dx * dx + dy * dy);
}

std::int64_t round_mm(double value) {
    if (!std::isfinite(value)) {
        throw PreconditionError("coordinate must be finite");
    }
    return static_cast<std::int64_t>(std::round(value));
}

std::optional<Coordinate> parse_coordinate_text(std::string_view text) {
    const auto open = text.find('[');
    if (open == std::string_view::npos) {
        return std::nullopt;
    }
    const auto close = text.find(']', open);
    if (close == std::string_view::npos) {
        return std::nullopt;
    }
    std::vector<double> values;
    std::string_view body = text.substr(open + 1, close - open - 1);
    std::size_t pos = 0;
    while (pos < body.size()) {
        auto comma = body.find(',', pos);
        if (comma == std::string_view::npos) {
            comma = body.size();
        }
        std::string item = text::lower(text::trim(body.substr(pos, comma - pos)));
        for (std::string_view unit : {"mm", "m"}) {
            if (item.size() > unit.size() && item.ends_with(unit)) {
                item = text::trim(item.substr(0, item.size() - unit.size()));
                break;
            }
        }
        if (!item.empty() && item.front() == '+') {
            item.erase(0, 1);
        }
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
        if (ec != std::errc{} || ptr != item.data() + item.size()) {
            return std::nullopt;
        }
        values.push_back(v);
        pos = comma + 1;
    }
    if (values.size() < 2 || values.size() > 3) {
        return std::nullopt;
    }
    return Coordinate{round_mm(values[0]), round_mm(values[1])};
}

std::string format_coordinate(Coordinate c) {
    return "[" + std::to_string(c.x) + ", " + std::to_string(c.y) + ", 0]";
}

std::vector<ObjectInstance> number_instances(const std::vector<std::string>& library_names) {
    std::map<std::string, int> totals;
    for (const auto& n : library_names) {
        ++totals[n];
    }
    std::map<std::string, int> seen;
    std::vector<ObjectInstance> out;
    out.reserve(library_names.size());
    for (std::size_t i = 0; i < library_names.size(); ++i) {
        const auto& name = library_names[i];
        ObjectInstance inst;
        inst.id = "obj-" + std::to_string(i + 1);
        inst.library_name = name;
        inst.display_name = totals[name] > 1 ? name + " " + std::to_string(++seen[name]) : name;
        out.push_back(std::move(inst));
    }
    return out;
}

std::string base_kind_name(std::string_view display_name) {
    const auto space = display_name.rfind(' ');
    if (space == std::string_view::npos || space + 1 == display_name.size()) {
        return std::string(display_name);
    }
    const auto suffix = display_name.substr(space + 1);
    const bool numeric = std::all_of(suffix.begin(), suffix.end(),
                                     [](unsigned char c) { return std::isdigit(c); });
    return numeric ? std::string(display_name.substr(0, space)) : std::string(display_name);
}

std::vector<ObjectInstance> Scene::objects() const {
    std::vector<ObjectInstance> out;
    out.reserve(placements.size());
    for (const auto& p : placements) {
        out.push_back(p.object);
    }
    return out;
}

const Placement* Scene::find(std::string_view display_name) const noexcept {
    for (const auto& p : placements) {
        if (p.object.display_name == display_name) {
            return &p;
        }
    }
    return nullptr;
}

std::vector<OverlapPair> find_overlaps(const std::vector<Placement>& placements,
                                       const std::set<std::string>& pinned,
                                       double min_distance_mm) {
    std::vector<OverlapPair> out;
    for (std::size_t i = 0; i < placements.size(); ++i) {
        for (std::size_t j = i + 1; j < placements.size(); ++j) {
            const auto& a = placements[i];
            const auto& b = placements[j];
            if (a.is_guarding() || b.is_guarding()) {
                continue;
            }
            if (pinned.contains(a.name()) && pinned.contains(b.name())) {
                continue;
            }
            const double d = euclidean_distance(a.coord, b.coord);
            if (d < min_distance_mm) {
                out.push_back({a.name(), b.name(), d});
            }
        }
    }
    return out;
}

std::vector<std::string> check_scene_structure(const Scene& scene, const ObjectLibrary& library) {
    std::vector<std::string> problems;
    std::set<std::string> names;
    std::set<std::string> ids;
    for (const auto& p : scene.placements) {
        if (!library.contains(p.object.library_name)) {
            problems.push_back("unknown library object '" + p.object.library_name + "'");
        }
        if (!names.insert(p.object.display_name).second) {
            problems.push_back("duplicate display name '" + p.object.display_name + "'");
        }
        if (!p.object.id.empty() && !ids.insert(p.object.id).second) {
            problems.push_back("duplicate object id '" + p.object.id + "'");
        }
    }
    return problems;
}

} // namespace scenegen
