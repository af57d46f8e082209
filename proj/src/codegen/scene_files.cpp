#include "scenegen/codegen/codegen.hpp"

#include "scenegen/error.hpp"
#include "scenegen/text.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace scenegen::codegen {

namespace {

nlohmann::ordered_json orientation_value(double degrees) {
    if (degrees == std::floor(degrees) && std::fabs(degrees) < 1e15) {
        return static_cast<std::int64_t>(degrees);
    }
    return degrees;
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    std::string s = buf;
    while (s.find('.') != std::string::npos && (s.back() == '0' || s.back() == '.')) {
        const bool dot = s.back() == '.';
        s.pop_back();
        if (dot) {
            break;
        }
    }
    return s;
}

std::string escape_xml(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

const char* colour_for(std::size_t index) {
    static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
    return palette[index % 10];
}

} // namespace

std::string emit_scene_json(const Scene& scene) {
    nlohmann::ordered_json doc;
    doc["description"] = scene.description;
    doc["objects"] = nlohmann::ordered_json::array();
    for (const auto& p : scene.placements) {
        nlohmann::ordered_json item;
        item["name"] = p.name();
        item["model"] = p.object.library_name;
        item["position"] = {p.coord.x, p.coord.y, 0};
        item["orientation"] = orientation_value(p.dir.degrees());
        doc["objects"].push_back(std::move(item));
    }
    return doc.dump(2) + "\n";
}

Scene parse_scene_json(std::string_view text, const ObjectLibrary& library) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("scene", std::string("scene file is not valid JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("objects") || !doc.at("objects").is_array()) {
        throw ParseError("scene", "scene file needs an \"objects\" array");
    }
    Scene scene;
    if (doc.contains("description") && doc.at("description").is_string()) {
        scene.description = doc.at("description").get<std::string>();
    }
    std::size_t index = 0;
    for (const auto& item : doc.at("objects")) {
        ++index;
        try {
            const auto name = item.at("name").get<std::string>();
            const auto model = item.at("model").get<std::string>();
            if (!library.contains(model)) {
                throw ParseError("scene", "object '" + name + "' uses model '" + model + "' outside the library");
            }
            const auto& pos = item.at("position");
            if (!pos.is_array() || pos.size() != 3) {
                throw ParseError("scene", "object '" + name + "' needs a position [x, y, 0]");
            }
            Placement p;
            p.object = {"obj-" + std::to_string(index), model, name};
            p.coord = {round_mm(pos.at(0).get<double>()), round_mm(pos.at(1).get<double>())};
            p.dir = normalize_direction(item.at("orientation").get<double>());
            scene.placements.push_back(std::move(p));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("scene", "object " + std::to_string(index) + " is malformed: " + e.what());
        }
    }
    return scene;
}

std::string emit_svg(const std::vector<Placement>& placements, double scale) {
    // Extent in millimetres: the default allocation square, grown to fit
    // every object with a one-metre margin.
    double min_x = -5000, max_x = 5000, min_y = -5000, max_y = 5000;
    for (const auto& p : placements) {
        min_x = std::min(min_x, static_cast<double>(p.coord.x) - 1000);
        max_x = std::max(max_x, static_cast<double>(p.coord.x) + 1000);
        min_y = std::min(min_y, static_cast<double>(p.coord.y) - 1000);
        max_y = std::max(max_y, static_cast<double>(p.coord.y) + 1000);
    }
    min_x = std::floor(min_x / 1000) * 1000;
    min_y = std::floor(min_y / 1000) * 1000;
    max_x = std::ceil(max_x / 1000) * 1000;
    max_y = std::ceil(max_y / 1000) * 1000;

    std::vector<std::string> kinds;
    for (const auto& p : placements) {
        if (std::find(kinds.begin(), kinds.end(), p.object.library_name) == kinds.end()) {
            kinds.push_back(p.object.library_name);
        }
    }

    const double legend_w = 260;
    const double w = (max_x - min_x) * scale;
    const double h = (max_y - min_y) * scale;
    // Plan view: +x to the right, +y up.
    auto sx = [&](double x) { return (x - min_x) * scale; };
    auto sy = [&](double y) { return (max_y - y) * scale; };

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(w + legend_w) << "\" height=\"" << num(h)
        << "\" viewBox=\"0 0 " << num(w + legend_w) << " " << num(h) << "\">\n";
    out << "  <rect x=\"0\" y=\"0\" width=\"" << num(w) << "\" height=\"" << num(h) << "\" fill=\"#ffffff\"/>\n";
    out << "  <g class=\"grid\" stroke=\"#dddddd\" stroke-width=\"1\">\n";
    for (double x = min_x; x <= max_x; x += 1000) {
        out << "    <line x1=\"" << num(sx(x)) << "\" y1=\"0\" x2=\"" << num(sx(x)) << "\" y2=\"" << num(h) << "\"/>\n";
    }
    for (double y = min_y; y <= max_y; y += 1000) {
        out << "    <line x1=\"0\" y1=\"" << num(sy(y)) << "\" x2=\"" << num(w) << "\" y2=\"" << num(sy(y)) << "\"/>\n";
    }
    out << "  </g>\n";
    out << "  <g class=\"axes\" stroke=\"#999999\" stroke-width=\"1.5\">\n"
        << "    <line x1=\"" << num(sx(0)) << "\" y1=\"0\" x2=\"" << num(sx(0)) << "\" y2=\"" << num(h) << "\"/>\n"
        << "    <line x1=\"0\" y1=\"" << num(sy(0)) << "\" x2=\"" << num(w) << "\" y2=\"" << num(sy(0)) << "\"/>\n"
        << "  </g>\n";

    out << "  <g class=\"objects\">\n";
    for (const auto& p : placements) {
        const auto k = static_cast<std::size_t>(std::find(kinds.begin(), kinds.end(), p.object.library_name) -
                                                kinds.begin());
        const double cx = sx(static_cast<double>(p.coord.x));
        const double cy = sy(static_cast<double>(p.coord.y));
        const double r = 400 * scale;
        const double tick = 700 * scale;
        const double rad = p.dir.radians();
        if (p.is_guarding()) {
            out << "    <rect class=\"object\" x=\"" << num(cx - 2 * r) << "\" y=\"" << num(cy - 2 * r)
                << "\" width=\"" << num(4 * r) << "\" height=\"" << num(4 * r) << "\" fill=\"none\" stroke=\""
                << colour_for(k) << "\" stroke-dasharray=\"4 2\"/>\n";
        } else {
            out << "    <circle class=\"object\" cx=\"" << num(cx) << "\" cy=\"" << num(cy) << "\" r=\"" << num(r)
                << "\" fill=\"" << colour_for(k) << "\" fill-opacity=\"0.6\"/>\n";
        }
        out << "    <line class=\"heading\" x1=\"" << num(cx) << "\" y1=\"" << num(cy) << "\" x2=\""
            << num(cx + tick * std::cos(rad)) << "\" y2=\"" << num(cy - tick * std::sin(rad))
            << "\" stroke=\"#000000\" stroke-width=\"2\"/>\n";
        out << "    <text x=\"" << num(cx + r + 2) << "\" y=\"" << num(cy - r - 2)
            << "\" font-size=\"10\" font-family=\"sans-serif\">" << escape_xml(p.name()) << "</text>\n";
    }
    out << "  </g>\n";

    out << "  <g class=\"legend\" font-size=\"12\" font-family=\"sans-serif\">\n";
    out << "    <text x=\"" << num(w + 10) << "\" y=\"20\">1 grid cell = 1 m</text>\n";
    for (std::size_t i = 0; i < kinds.size(); ++i) {
        const double y = 40 + 20 * static_cast<double>(i);
        out << "    <rect x=\"" << num(w + 10) << "\" y=\"" << num(y - 10) << "\" width=\"12\" height=\"12\" fill=\""
            << colour_for(i) << "\"/>\n";
        out << "    <text x=\"" << num(w + 28) << "\" y=\"" << num(y) << "\">" << escape_xml(kinds[i]) << "</text>\n";
    }
    out << "  </g>\n";
    out << "</svg>\n";
    return out.str();
}

} // namespace scenegen::codegen
