#include "scenegen/placement/relation.hpp"

#include "scenegen/scene_model.hpp"
#include "scenegen/text.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <vector>

namespace scenegen::placement {

std::string_view to_string(RelationKind kind) {
    switch (kind) {
    case RelationKind::offset: return "offset";
    case RelationKind::facing: return "facing";
    case RelationKind::distance_only: return "distance_only";
    case RelationKind::adjacency: return "adjacency";
    case RelationKind::parallel: return "parallel";
    case RelationKind::between: return "between";
    case RelationKind::unrecognized: return "unrecognized";
    }
    return "unrecognized";
}

bool RelationAST::exact_offset() const noexcept {
    if (kind != RelationKind::offset) {
        return false;
    }
    const bool x_ok = x.exact() || !x.mentioned();
    const bool y_ok = y.exact() || !y.mentioned();
    return x_ok && y_ok && (x.mentioned() || y.mentioned());
}

std::int64_t RelationAST::dx() const noexcept {
    return x.exact() ? x.sign * *x.magnitude_mm : 0;
}

std::int64_t RelationAST::dy() const noexcept {
    return y.exact() ? y.sign * *y.magnitude_mm : 0;
}

namespace {

struct Token {
    enum class Kind { word, number, comma } kind;
    std::string text;
    double value = 0.0;
};

std::vector<Token> tokenize(std::string_view input) {
    std::vector<Token> out;
    const std::string s = text::lower(input);
    std::size_t i = 0;
    while (i < s.size()) {
        const unsigned char c = static_cast<unsigned char>(s[i]);
        if (std::isdigit(c) || (c == '.' && i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1])))) {
            std::size_t j = i;
            while (j < s.size() && (std::isdigit(static_cast<unsigned char>(s[j])) || s[j] == '.')) {
                ++j;
            }
            Token t{Token::Kind::number, s.substr(i, j - i)};
            std::from_chars(s.data() + i, s.data() + j, t.value);
            out.push_back(std::move(t));
            i = j;
        } else if (std::isalpha(c)) {
            std::size_t j = i;
            while (j < s.size() && std::isalpha(static_cast<unsigned char>(s[j]))) {
                ++j;
            }
            out.push_back({Token::Kind::word, s.substr(i, j - i)});
            i = j;
        } else if (c == ',' || c == ';') {
            out.push_back({Token::Kind::comma, ","});
            ++i;
        } else {
            ++i;
        }
    }
    return out;
}

bool is_one_of(const std::string& w, std::initializer_list<std::string_view> options) {
    for (auto o : options) {
        if (w == o) {
            return true;
        }
    }
    return false;
}

// Unit multiplier to millimetres, or 0 when the word is not a length unit.
double unit_scale(const std::string& w) {
    if (is_one_of(w, {"m", "meter", "meters", "metre", "metres"})) {
        return 1000.0;
    }
    if (is_one_of(w, {"mm", "millimeter", "millimeters", "millimetre", "millimetres"})) {
        return 1.0;
    }
    if (is_one_of(w, {"cm", "centimeter", "centimeters", "centimetre", "centimetres"})) {
        return 10.0;
    }
    return 0.0;
}

struct Segment {
    std::optional<double> quantity_mm;
    int axis = -1;  // 0 = x, 1 = y
    int sign = 0;
    bool adjacency = false;
    bool ambiguous = false;
};

Segment read_segment(const std::vector<Token>& toks, std::size_t begin, std::size_t end) {
    Segment seg;
    for (std::size_t i = begin; i < end; ++i) {
        const Token& t = toks[i];
        if (t.kind == Token::Kind::number) {
            double scale = 0.0;
            if (i + 1 < end && toks[i + 1].kind == Token::Kind::word) {
                scale = unit_scale(toks[i + 1].text);
            }
            if (scale == 0.0) {
                // Bare numbers: large values read as millimetres, small as metres.
                scale = t.value >= 100.0 ? 1.0 : 1000.0;
            } else {
                ++i;
            }
            if (seg.quantity_mm) {
                seg.ambiguous = true;
            }
            seg.quantity_mm = t.value * scale;
            continue;
        }
        if (t.kind != Token::Kind::word) {
            continue;
        }
        int axis = -1;
        int sign = 0;
        if (is_one_of(t.text, {"front", "forward", "forwards", "ahead"})) {
            axis = 0;
            sign = +1;
        } else if (is_one_of(t.text, {"behind", "back", "backward", "backwards", "rear"})) {
            axis = 0;
            sign = -1;
        } else if (t.text == "left") {
            axis = 1;
            sign = +1;
        } else if (t.text == "right") {
            axis = 1;
            sign = -1;
        } else if (is_one_of(t.text, {"next", "near", "nearby", "beside", "besides", "adjacent",
                                      "alongside", "close", "closely", "neighbouring", "neighboring"})) {
            seg.adjacency = true;
        }
        if (axis >= 0) {
            if (seg.axis >= 0 && (seg.axis != axis || seg.sign != sign)) {
                seg.ambiguous = true;
            }
            seg.axis = axis;
            seg.sign = sign;
        }
    }
    return seg;
}

bool mentions_facing(const std::vector<Token>& toks) {
    for (std::size_t i = 0; i < toks.size(); ++i) {
        const auto& w = toks[i].text;
        if (is_one_of(w, {"facing", "faces", "face", "towards", "toward"})) {
            return true;
        }
        if (is_one_of(w, {"oriented", "orientated", "pointing", "pointed", "turned"}) && i + 1 < toks.size() &&
            is_one_of(toks[i + 1].text, {"to", "towards", "toward", "at"})) {
            return true;
        }
    }
    return false;
}

std::string strip_article(std::string s) {
    s = text::trim(s);
    for (std::string_view article : {"the ", "a ", "an "}) {
        if (text::starts_with_ci(s, article)) {
            return text::trim(s.substr(article.size()));
        }
    }
    return s;
}

} // namespace

RelationAST parse_relation(std::string_view relation_text) {
    RelationAST ast;
    const auto toks = tokenize(relation_text);
    if (toks.empty()) {
        return ast;
    }

    const std::string lowered = text::lower(relation_text);
    if (const auto pos = lowered.find("between "); pos != std::string::npos) {
        const auto rest = std::string(relation_text.substr(pos + 8));
        const auto and_pos = text::lower(rest).find(" and ");
        if (and_pos != std::string::npos) {
            ast.kind = RelationKind::between;
            ast.between_first = strip_article(rest.substr(0, and_pos));
            ast.between_second = strip_article(rest.substr(and_pos + 5));
            if (ast.between_first.empty() || ast.between_second.empty()) {
                ast.kind = RelationKind::unrecognized;
            }
        }
        return ast;
    }

    for (const auto& t : toks) {
        if (t.text == "parallel") {
            ast.kind = RelationKind::parallel;
            return ast;
        }
    }

    const bool facing = mentions_facing(toks);

    std::vector<Segment> segments;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= toks.size(); ++i) {
        const bool boundary = i == toks.size() || toks[i].kind == Token::Kind::comma ||
                              (toks[i].kind == Token::Kind::word && toks[i].text == "and");
        if (boundary) {
            if (i > start) {
                segments.push_back(read_segment(toks, start, i));
            }
            start = i + 1;
        }
    }

    std::optional<double> distance;
    bool adjacency = false;
    for (const auto& seg : segments) {
        if (seg.ambiguous) {
            return RelationAST{};
        }
        adjacency = adjacency || seg.adjacency;
        if (seg.axis >= 0) {
            AxisTerm& term = seg.axis == 0 ? ast.x : ast.y;
            if (term.mentioned()) {
                return RelationAST{};
            }
            term.sign = seg.sign;
            if (seg.quantity_mm) {
                if (*seg.quantity_mm <= 0.0) {
                    return RelationAST{};
                }
                term.magnitude_mm = round_mm(*seg.quantity_mm);
            }
        } else if (seg.quantity_mm) {
            if (distance) {
                return RelationAST{};
            }
            distance = seg.quantity_mm;
        }
    }

    if (ast.x.mentioned() || ast.y.mentioned()) {
        if (distance) {
            return RelationAST{};
        }
        ast.kind = RelationKind::offset;
    } else if (distance) {
        ast.kind = RelationKind::distance_only;
        ast.distance_mm = *distance;
    } else if (adjacency) {
        ast.kind = RelationKind::adjacency;
    } else if (facing) {
        ast.kind = RelationKind::facing;
        return ast;
    } else {
        return ast;
    }
    ast.also_facing = facing;
    return ast;
}

namespace {

constexpr std::array<std::array<int, 2>, 4> kAxisDirections{{{1, 0}, {0, 1}, {-1, 0}, {0, -1}}};

// Free magnitudes are drawn on a 500 mm lattice inside [1000, 5000] mm so the
// result stays on the allocation grid.
std::int64_t draw_free_magnitude(Rng& rng) {
    return 1000 + 500 * rng.uniform_int(0, 8);
}

} // namespace

std::optional<Delta> relation_to_delta(const RelationAST& ast, Rng& rng) {
    switch (ast.kind) {
    case RelationKind::offset: {
        Delta d;
        if (ast.x.mentioned()) {
            d.dx = ast.x.sign * (ast.x.magnitude_mm ? *ast.x.magnitude_mm : draw_free_magnitude(rng));
        }
        if (ast.y.mentioned()) {
            d.dy = ast.y.sign * (ast.y.magnitude_mm ? *ast.y.magnitude_mm : draw_free_magnitude(rng));
        }
        return d;
    }
    case RelationKind::distance_only: {
        const auto& dir = kAxisDirections[rng.index(4)];
        const auto mag = round_mm(ast.distance_mm);
        return Delta{dir[0] * mag, dir[1] * mag};
    }
    case RelationKind::adjacency: {
        const auto& dir = kAxisDirections[rng.index(4)];
        const auto mag = draw_free_magnitude(rng);
        return Delta{dir[0] * mag, dir[1] * mag};
    }
    case RelationKind::facing:
    case RelationKind::parallel:
    case RelationKind::between:
    case RelationKind::unrecognized:
        return std::nullopt;
    }
    return std::nullopt;
}

} // namespace scenegen::placement
