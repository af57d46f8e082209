#include "scenegen/layout/grammar.hpp"

#include "scenegen/placement/relation.hpp"
#include "scenegen/text.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

namespace scenegen::layout {

namespace {

// ---------------------------------------------------------------------------
// Tokens
// ---------------------------------------------------------------------------

struct Tok {
    enum class Kind { word, number, coord, punct } kind = Kind::word;
    std::string raw;
    std::string low;
    double value = 0.0;
    Coordinate coord{};
    std::size_t begin = 0;
    std::size_t end = 0;
};

std::vector<Tok> tokenize(std::string_view s) {
    std::vector<Tok> out;
    std::size_t i = 0;
    auto is_digit = [&](std::size_t k) { return k < s.size() && std::isdigit(static_cast<unsigned char>(s[k])); };
    while (i < s.size()) {
        const unsigned char c = static_cast<unsigned char>(s[i]);
        if (c == '[') {
            const auto close = s.find(']', i);
            if (close != std::string_view::npos) {
                if (auto coord = parse_coordinate_text(s.substr(i, close - i + 1))) {
                    Tok t;
                    t.kind = Tok::Kind::coord;
                    t.raw = std::string(s.substr(i, close - i + 1));
                    t.low = t.raw;
                    t.coord = *coord;
                    t.begin = i;
                    t.end = close + 1;
                    out.push_back(std::move(t));
                    i = close + 1;
                    continue;
                }
            }
            ++i;
            continue;
        }
        if (std::isdigit(c) || (c == '.' && is_digit(i + 1))) {
            std::size_t j = i;
            while (j < s.size() && (std::isdigit(static_cast<unsigned char>(s[j])) || (s[j] == '.' && is_digit(j + 1)))) {
                ++j;
            }
            Tok t;
            t.kind = Tok::Kind::number;
            t.raw = std::string(s.substr(i, j - i));
            t.low = t.raw;
            std::from_chars(t.raw.data(), t.raw.data() + t.raw.size(), t.value);
            t.begin = i;
            t.end = j;
            out.push_back(std::move(t));
            i = j;
            continue;
        }
        if (std::isalpha(c)) {
            std::size_t j = i;
            while (j < s.size() && std::isalnum(static_cast<unsigned char>(s[j]))) {
                ++j;
            }
            Tok t;
            t.kind = Tok::Kind::word;
            t.raw = std::string(s.substr(i, j - i));
            t.low = text::lower(t.raw);
            t.begin = i;
            t.end = j;
            out.push_back(std::move(t));
            i = j;
            continue;
        }
        if (c == '.' || c == '?' || c == '!' || c == ';' || c == ',' || c == ':' || c == '\n') {
            Tok t;
            t.kind = Tok::Kind::punct;
            t.raw = std::string(1, static_cast<char>(c));
            t.low = t.raw;
            t.begin = i;
            t.end = i + 1;
            out.push_back(std::move(t));
        }
        ++i;
    }
    return out;
}

std::vector<std::vector<Tok>> split_sentences(const std::vector<Tok>& toks) {
    std::vector<std::vector<Tok>> out(1);
    for (const auto& t : toks) {
        if (t.kind == Tok::Kind::punct && (t.raw == "." || t.raw == "?" || t.raw == "!" || t.raw == ";" || t.raw == "\n")) {
            if (!out.back().empty()) {
                out.emplace_back();
            }
            continue;
        }
        out.back().push_back(t);
    }
    if (out.back().empty()) {
        out.pop_back();
    }
    return out;
}

bool in(const std::string& w, std::initializer_list<std::string_view> words) {
    return std::find(words.begin(), words.end(), w) != words.end();
}

// ---------------------------------------------------------------------------
// Object phrases
// ---------------------------------------------------------------------------

struct Alias {
    std::vector<std::string> words;
    std::string kind;
};

const std::vector<Alias>& aliases() {
    static const std::vector<Alias> table = [] {
        std::vector<Alias> a{
            {{"kuka", "robot", "kr125"}, "Kuka Robot KR125"},
            {{"kuka", "kr125"}, "Kuka Robot KR125"},
            {{"kr125"}, "Kuka Robot KR125"},
            {{"kuka", "robot", "kr350"}, "Kuka Robot KR350"},
            {{"kuka", "kr350"}, "Kuka Robot KR350"},
            {{"kr350"}, "Kuka Robot KR350"},
            {{"abb", "robot", "irb6600"}, "ABB Robot IRB6600"},
            {{"abb", "irb6600"}, "ABB Robot IRB6600"},
            {{"irb6600"}, "ABB Robot IRB6600"},
            {{"abb", "robot", "arm"}, "ABB Robot IRB6600"},
            {{"abb", "robot"}, "ABB Robot IRB6600"},
            {{"abb"}, "ABB Robot IRB6600"},
            {{"yaskawa", "robot", "ma01800"}, "YASKAWA Robot ma01800"},
            {{"yaskawa", "ma01800"}, "YASKAWA Robot ma01800"},
            {{"ma01800"}, "YASKAWA Robot ma01800"},
            {{"yaskawa", "robot"}, "YASKAWA Robot ma01800"},
            {{"yaskawa"}, "YASKAWA Robot ma01800"},
            {{"kuka", "robot", "arm"}, "Kuka Robot KR125"},
            {{"kuka", "robot"}, "Kuka Robot KR125"},
            {{"kuka"}, "Kuka Robot KR125"},
            {{"robotic", "arm"}, "Kuka Robot KR125"},
            {{"robot", "arm"}, "Kuka Robot KR125"},
            {{"robotic", "manipulator"}, "Kuka Robot KR125"},
            {{"robotic", "unit"}, "Kuka Robot KR125"},
            {{"robot"}, "Kuka Robot KR125"},
            {{"manipulator"}, "Kuka Robot KR125"},
            {{"welding", "table"}, "Welding Table"},
            {{"work", "table"}, "Welding Table"},
            {{"worktable"}, "Welding Table"},
            {{"table"}, "Welding Table"},
            {{"turntable"}, "Turntable"},
            {{"turn", "table"}, "Turntable"},
            {{"control", "cabinet"}, "Cabinet"},
            {{"equipment", "cabinet"}, "Cabinet"},
            {{"cabinet"}, "Cabinet"},
            {{"valvestand"}, "ValveStand"},
            {{"valve", "stand"}, "ValveStand"},
            {{"value", "stand"}, "ValveStand"},
            {{"conveyor", "belt"}, "Conveyor"},
            {{"conveyor", "system"}, "Conveyor"},
            {{"conveyor"}, "Conveyor"},
            {{"safety", "guarding"}, "Guarding"},
            {{"protective", "guarding"}, "Guarding"},
            {{"guarding", "fence"}, "Guarding"},
            {{"safety", "fencing"}, "Guarding"},
            {{"protective", "fencing"}, "Guarding"},
            {{"safety", "fence"}, "Guarding"},
            {{"guarding"}, "Guarding"},
            {{"fencing"}, "Guarding"},
            {{"fence"}, "Guarding"},
        };
        std::stable_sort(a.begin(), a.end(),
                         [](const Alias& x, const Alias& y) { return x.words.size() > y.words.size(); });
        return a;
    }();
    return table;
}

bool word_matches(const std::string& token, const std::string& word, bool allow_plural, bool& plural) {
    if (token == word) {
        return true;
    }
    if (!allow_plural) {
        return false;
    }
    if (token == word + "s" || token == word + "es") {
        plural = true;
        return true;
    }
    return false;
}

struct AliasMatch {
    const Alias* alias = nullptr;
    std::size_t length = 0;
    bool plural = false;
};

AliasMatch match_alias(const std::vector<Tok>& toks, std::size_t i) {
    for (const auto& a : aliases()) {
        if (i + a.words.size() > toks.size()) {
            continue;
        }
        bool ok = true;
        bool plural = false;
        for (std::size_t k = 0; k < a.words.size() && ok; ++k) {
            const auto& t = toks[i + k];
            ok = t.kind == Tok::Kind::word && word_matches(t.low, a.words[k], k + 1 == a.words.size(), plural);
        }
        if (ok) {
            return {&a, a.words.size(), plural};
        }
    }
    return {};
}

const std::map<std::string, int>& number_words() {
    static const std::map<std::string, int> m{
        {"one", 1},   {"two", 2},    {"three", 3},  {"four", 4},    {"five", 5},     {"six", 6},
        {"seven", 7}, {"eight", 8},  {"nine", 9},   {"ten", 10},    {"eleven", 11},  {"twelve", 12},
    };
    return m;
}

const std::map<std::string, int>& ordinal_words() {
    static const std::map<std::string, int> m{
        {"first", 1}, {"second", 2}, {"third", 3}, {"fourth", 4}, {"fifth", 5}, {"sixth", 6},
    };
    return m;
}

bool is_adjective(const std::string& w) {
    return in(w, {"new", "square", "regular", "standard", "identical", "additional", "big", "large", "small",
                  "industrial", "single", "other", "central", "spot", "main", "bar", "type", "loading",
                  "unloading", "remaining", "extra", "heavy", "duty", "stationary", "fixed"}) ||
           ordinal_words().contains(w);
}

bool is_unit(const std::string& w) {
    return in(w, {"m", "meter", "meters", "metre", "metres", "mm", "millimeter", "millimeters", "millimetre",
                  "millimetres", "cm", "centimeter", "centimeters", "degree", "degrees", "deg", "x", "k"});
}

bool is_spatial(const std::string& w) {
    return in(w, {"front", "behind", "back", "rear", "left", "right", "next", "near", "nearby", "beside", "adjacent",
                  "alongside", "close", "facing", "faces", "face", "towards", "toward", "between", "parallel",
                  "away", "meter", "meters", "metre", "metres", "m", "mm", "millimeters", "millimetres", "cm",
                  "distance", "forward", "ahead", "apart", "aside"});
}

bool is_vague(const std::string& w) {
    return in(w, {"some", "several", "multiple", "many", "various", "random", "randomly", "series", "matrix",
                  "formation", "shaped", "circular", "row", "rows", "evenly", "equally", "uniformly", "line",
                  "intervals", "interval", "spacing", "spaced", "triangular", "distributed", "each", "every",
                  "typical", "example", "existing", "replace", "remove", "side", "sides", "corner", "opposite",
                  "along", "aligned", "align", "axis", "diagonal", "symmetric", "grid", "respectively", "others",
                  "rest", "together", "reach", "angles", "perpendicular", "them", "they", "these", "those"});
}

bool is_enclosure_word(const std::string& w) {
    return in(w, {"around", "surround", "surrounds", "surrounding", "surrounded", "enclose", "encloses", "enclosing",
                  "inside", "within", "protect"});
}

bool is_filler(const std::string& w) {
    return in(w, {",", ":", "is", "are", "was", "be", "being", "positioned", "placed", "located", "situated", "set",
                  "put", "installed", "standing", "stands", "sits", "sitting", "lies", "which", "that", "and",
                  "with", "should", "must", "also", "then", "directly", "exactly", "just", "place", "position",
                  "it", "while", "where", "has", "have", "a", "an", "the"});
}

// ---------------------------------------------------------------------------
// Mentions
// ---------------------------------------------------------------------------

enum class Det { none, indefinite, number, definite, vague, negated };

struct Mention {
    std::size_t begin = 0;       // first token, including determiner
    std::size_t alias_begin = 0;
    std::size_t end = 0;         // one past the last token
    std::string kind;            // empty for a pronoun
    bool pronoun = false;
    bool plural = false;
    bool central = false;
    Det det = Det::none;
    int count = 1;
    int ordinal = 0;
    int suffix = 0;              // "Conveyor 2"
    std::vector<std::size_t> instances;
};

std::vector<Mention> find_mentions(const std::vector<Tok>& toks) {
    std::vector<Mention> out;
    std::size_t i = 0;
    while (i < toks.size()) {
        const auto& t = toks[i];
        if (t.kind == Tok::Kind::word && t.low == "it") {
            Mention m;
            m.begin = m.alias_begin = i;
            m.end = i + 1;
            m.pronoun = true;
            out.push_back(m);
            ++i;
            continue;
        }
        const auto match = match_alias(toks, i);
        if (!match.alias) {
            ++i;
            continue;
        }
        Mention m;
        m.alias_begin = i;
        m.end = i + match.length;
        m.kind = match.alias->kind;
        m.plural = match.plural;

        // Numbered instance reference: "Conveyor 2", unless a unit follows.
        if (m.end < toks.size() && toks[m.end].kind == Tok::Kind::number && !m.plural) {
            const bool unit_follows = m.end + 1 < toks.size() && toks[m.end + 1].kind == Tok::Kind::word &&
                                      is_unit(toks[m.end + 1].low);
            const double v = toks[m.end].value;
            if (!unit_follows && v >= 1 && v <= 50 && v == std::floor(v)) {
                m.suffix = static_cast<int>(v);
                ++m.end;
            }
        }

        // Walk back over adjectives to the determiner.
        std::size_t j = i;
        int skipped = 0;
        while (j > 0 && skipped < 3 && toks[j - 1].kind == Tok::Kind::word && is_adjective(toks[j - 1].low)) {
            const auto& w = toks[j - 1].low;
            if (ordinal_words().contains(w)) {
                m.ordinal = ordinal_words().at(w);
            }
            if (w == "central") {
                m.central = true;
            }
            --j;
            ++skipped;
        }
        m.begin = j;
        if (j > 0) {
            const auto& d = toks[j - 1];
            if (d.kind == Tok::Kind::number && d.value >= 1 && d.value == std::floor(d.value)) {
                m.det = Det::number;
                m.count = static_cast<int>(d.value);
                m.begin = j - 1;
            } else if (d.kind == Tok::Kind::word) {
                const auto& w = d.low;
                if (in(w, {"a", "an", "one", "another", "single"})) {
                    m.det = Det::indefinite;
                    m.begin = j - 1;
                    if (w == "a" && j >= 2 && toks[j - 2].low == "of" && j >= 3 && toks[j - 3].low == "pair") {
                        m.det = Det::number;
                        m.count = 2;
                    }
                } else if (number_words().contains(w) && w != "one") {
                    m.det = Det::number;
                    m.count = number_words().at(w);
                    m.begin = j - 1;
                } else if (w == "of" && j >= 2 && toks[j - 2].low == "pair") {
                    m.det = Det::number;
                    m.count = 2;
                    m.begin = j - 1;
                } else if (in(w, {"the", "this", "that", "its", "both"})) {
                    m.det = Det::definite;
                    m.begin = j - 1;
                } else if (in(w, {"some", "several", "multiple", "many", "various", "few", "random"})) {
                    m.det = Det::vague;
                    m.begin = j - 1;
                } else if (w == "no" || w == "without" || (w == "any" && j >= 2 && toks[j - 2].low == "without")) {
                    m.det = Det::negated;
                    m.begin = j - 1;
                }
            }
        }
        out.push_back(m);
        i = m.end;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Parser state
// ---------------------------------------------------------------------------

class Parser {
public:
    SceneSpec run(std::string_view description) {
        const auto sentences = split_sentences(tokenize(description));
        for (const auto& s : sentences) {
            sentence(s);
        }
        if (spec_.kinds.empty()) {
            uncover("no objects mentioned");
        }
        return std::move(spec_);
    }

private:
    void uncover(const std::string& why) {
        spec_.covered = false;
        if (std::find(spec_.notes.begin(), spec_.notes.end(), why) == spec_.notes.end()) {
            spec_.notes.push_back(why);
        }
    }

    std::vector<std::size_t> of_kind(const std::string& kind) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < spec_.kinds.size(); ++i) {
            if (spec_.kinds[i] == kind) {
                out.push_back(i);
            }
        }
        return out;
    }

    std::vector<std::size_t> create(const Mention& m, const std::vector<Tok>& toks, int count) {
        std::string surface;
        for (std::size_t k = m.alias_begin; k < m.end; ++k) {
            surface += (surface.empty() ? "" : " ") + toks[k].raw;
        }
        std::vector<std::size_t> out;
        for (int c = 0; c < count; ++c) {
            spec_.kinds.push_back(m.kind);
            spec_.surfaces.push_back(surface);
            out.push_back(spec_.kinds.size() - 1);
        }
        return out;
    }

    std::vector<std::size_t> resolve(Mention& m, const std::vector<Tok>& toks, const std::vector<Mention>& sentence_mentions,
                                     std::size_t index) {
        if (m.pronoun) {
            std::set<std::size_t> skip;
            if (index > 0) {
                const auto& prev = sentence_mentions[index - 1].instances;
                skip.insert(prev.begin(), prev.end());
                for (auto it = history_.rbegin(); it != history_.rend(); ++it) {
                    if (!skip.contains(*it)) {
                        return {*it};
                    }
                }
                return {};
            }
            return previous_subject_;
        }
        const auto existing = of_kind(m.kind);
        switch (m.det) {
        case Det::negated:
            uncover("negated object mention");
            return {};
        case Det::indefinite:
            return create(m, toks, 1);
        case Det::number:
            if (m.count > 20) {
                uncover("implausible quantity");
                return create(m, toks, 20);
            }
            return create(m, toks, m.count);
        case Det::vague:
            uncover("unspecified quantity");
            return create(m, toks, 2);
        case Det::definite:
        case Det::none: {
            const int pick = m.suffix ? m.suffix : m.ordinal;
            if (pick) {
                if (static_cast<std::size_t>(pick) <= existing.size()) {
                    return {existing[pick - 1]};
                }
                return create(m, toks, 1);
            }
            if (m.plural) {
                if (existing.size() >= 2) {
                    return existing;
                }
                uncover("unspecified quantity");
                return create(m, toks, 2);
            }
            if (!existing.empty()) {
                auto it = last_of_kind_.find(m.kind);
                return {it != last_of_kind_.end() ? it->second : existing.back()};
            }
            return create(m, toks, 1);
        }
        }
        return {};
    }

    void pin(const std::vector<std::size_t>& instances, std::size_t& cursor, Coordinate c) {
        if (instances.empty()) {
            return;
        }
        const auto idx = instances[std::min(cursor, instances.size() - 1)];
        spec_.positions[idx].coords.push_back(c);
        ++cursor;
    }

    void set_center(const std::vector<std::size_t>& instances) {
        if (instances.size() != 1) {
            uncover("center of several objects");
            return;
        }
        spec_.positions[instances.front()].at_center = true;
    }

    void set_dir(const std::vector<std::size_t>& instances, double deg) {
        for (auto i : instances) {
            spec_.positions[i].dir = deg;
        }
    }

    // Marks center phrases, coordinates and orientation phrases in
    // [from, to) as consumed and applies them to `owner`.
    void absorb(const std::vector<Tok>& toks, std::size_t from, std::size_t to, const std::vector<std::size_t>& owner,
                std::vector<bool>& used) {
        std::size_t cursor = 0;
        for (std::size_t k = from; k < to; ++k) {
            const auto& t = toks[k];
            if (t.kind == Tok::Kind::coord) {
                pin(owner, cursor, t.coord);
                used[k] = true;
                if (k > from && in(toks[k - 1].low, {"at", "coordinates", "coordinate", "("})) {
                    used[k - 1] = true;
                }
                continue;
            }
            if (t.kind != Tok::Kind::word) {
                continue;
            }
            if (in(t.low, {"center", "centre", "middle", "centrally"})) {
                set_center(owner);
                used[k] = true;
                std::size_t b = k;
                while (b > from && in(toks[b - 1].low, {"the", "at", "in", "of"})) {
                    used[--b] = true;
                }
                std::size_t e = k + 1;
                if (e < to && toks[e].low == "of") {
                    used[e++] = true;
                    if (e < to && toks[e].low == "the") {
                        used[e++] = true;
                    }
                    if (e < to && toks[e].kind == Tok::Kind::word && !match_alias(toks, e).alias) {
                        used[e++] = true;
                    }
                }
                if (t.low == "centrally" && e < to && in(toks[e].low, {"located", "positioned", "placed"})) {
                    used[e] = true;
                }
                continue;
            }
            if (in(t.low, {"facing", "faces", "face"})) {
                std::size_t e = k + 1;
                while (e < to && in(toks[e].low, {"the", "to", "towards", "toward"})) {
                    ++e;
                }
                if (e < to && in(toks[e].low, {"front", "forward", "left", "back", "backward", "backwards", "right"}) &&
                    !(e + 1 < to && toks[e + 1].low == "of")) {
                    static const std::map<std::string, double> dirs{
                        {"front", 0.0}, {"forward", 0.0},  {"left", 90.0},  {"back", 180.0},
                        {"backward", 180.0}, {"backwards", 180.0}, {"right", 270.0},
                    };
                    set_dir(owner, dirs.at(toks[e].low));
                    for (std::size_t u = k; u <= e; ++u) {
                        used[u] = true;
                    }
                }
                continue;
            }
            if (t.low == "degrees" || t.low == "degree" || t.low == "deg") {
                if (k > from && toks[k - 1].kind == Tok::Kind::number) {
                    set_dir(owner, toks[k - 1].value);
                    used[k] = used[k - 1] = true;
                    std::size_t b = k - 1;
                    while (b > from && in(toks[b - 1].low, {"rotated", "rotate", "rotating", "oriented", "orientated",
                                                            "turned", "orientation", "heading", "angle", "by", "at",
                                                            "of", "an", "to", "for", "with"})) {
                        used[--b] = true;
                    }
                }
            }
        }
    }

    struct Kept {
        std::vector<std::size_t> idx;
    };

    // Tokens of [from, to) that are not consumed, with fillers trimmed from
    // both ends.
    Kept kept_tokens(const std::vector<Tok>& toks, std::size_t from, std::size_t to, const std::vector<bool>& used) {
        Kept k;
        for (std::size_t i = from; i < to; ++i) {
            if (!used[i]) {
                k.idx.push_back(i);
            }
        }
        while (!k.idx.empty() && is_filler(toks[k.idx.front()].low)) {
            k.idx.erase(k.idx.begin());
        }
        while (!k.idx.empty() && (in(toks[k.idx.back()].low, {",", ":", "of", "from", "the", "a", "an", "and", "with"}))) {
            k.idx.pop_back();
        }
        return k;
    }

    std::string joined(std::string_view source, const std::vector<Tok>& toks, const Kept& k) {
        if (k.idx.empty()) {
            return {};
        }
        const bool contiguous = k.idx.back() - k.idx.front() + 1 == k.idx.size();
        if (contiguous) {
            const auto b = toks[k.idx.front()].begin;
            const auto e = toks[k.idx.back()].end;
            return text::trim(source.substr(b, e - b));
        }
        std::string out;
        for (auto i : k.idx) {
            if (!out.empty() && toks[i].raw != ",") {
                out += ' ';
            }
            out += toks[i].raw;
        }
        return out;
    }

    bool has_spatial(const std::vector<Tok>& toks, const Kept& k) const {
        for (auto i : k.idx) {
            if (is_spatial(toks[i].low)) {
                return true;
            }
        }
        return false;
    }

    void add_relation(std::size_t s, std::size_t o, const std::string& text, std::optional<std::size_t> second = {}) {
        if (s == o || (second && (*second == s || *second == o))) {
            return;
        }
        const auto key = std::minmax(s, o);
        if (!pairs_.insert(key).second) {
            return;
        }
        auto ast = placement::parse_relation(second ? "between a and b" : text);
        if (ast.kind == placement::RelationKind::unrecognized) {
            uncover("relation phrase outside the grammar: '" + text + "'");
        }
        spec_.relations.push_back({s, o, text, second});
    }

    void sentence(const std::vector<Tok>& toks) {
        auto mentions = find_mentions(toks);
        std::vector<bool> used(toks.size(), false);

        bool has_guarding = false;
        for (const auto& m : mentions) {
            has_guarding = has_guarding || m.kind == kGuarding;
        }
        for (std::size_t k = 0; k < toks.size(); ++k) {
            const auto& w = toks[k].low;
            if (toks[k].kind != Tok::Kind::word) {
                continue;
            }
            if (is_enclosure_word(w)) {
                if (!has_guarding) {
                    uncover("enclosure without guarding: '" + toks[k].raw + "'");
                }
            } else if (is_vague(w)) {
                uncover("vague arrangement: '" + toks[k].raw + "'");
            }
        }

        for (std::size_t i = 0; i < mentions.size(); ++i) {
            mentions[i].instances = resolve(mentions[i], toks, mentions, i);
            for (auto idx : mentions[i].instances) {
                history_.push_back(idx);
                if (!mentions[i].pronoun) {
                    last_of_kind_[spec_.kinds[idx]] = idx;
                }
            }
            for (std::size_t k = mentions[i].begin; k < mentions[i].end; ++k) {
                used[k] = true;
            }
            if (mentions[i].central) {
                set_center(mentions[i].instances);
            }
        }
        if (mentions.empty()) {
            for (const auto& t : toks) {
                if (t.kind == Tok::Kind::coord || (t.kind == Tok::Kind::word && is_spatial(t.low))) {
                    uncover("positional information without an object");
                    break;
                }
            }
            return;
        }

        // Text before the first mention belongs to it.
        absorb(toks, 0, mentions.front().begin, mentions.front().instances, used);
        if (has_spatial(toks, kept_tokens(toks, 0, mentions.front().begin, used))) {
            uncover("relation phrase before its subject");
        }

        std::vector<bool> tail_done(mentions.size(), false);
        for (std::size_t i = 0; i < mentions.size(); ++i) {
            const auto& m = mentions[i];
            const std::size_t tail_end = i + 1 < mentions.size() ? mentions[i + 1].begin : toks.size();
            absorb(toks, m.end, tail_end, m.instances, used);
            if (tail_done[i]) {
                continue;
            }
            const auto kept = kept_tokens(toks, m.end, tail_end, used);
            if (kept.idx.empty() || !has_spatial(toks, kept)) {
                continue;
            }
            const std::string phrase = joined(source_view_, toks, kept);
            if (i + 1 == mentions.size()) {
                bool parallel = false;
                for (auto k : kept.idx) {
                    parallel = parallel || toks[k].low == "parallel";
                }
                if (parallel && m.instances.size() >= 2) {
                    for (std::size_t a = 1; a < m.instances.size(); ++a) {
                        add_relation(m.instances[a], m.instances[a - 1], "parallel to");
                    }
                } else {
                    uncover("relation phrase without a reference object: '" + phrase + "'");
                }
                continue;
            }
            const auto& next = mentions[i + 1];
            bool between = false;
            for (auto k : kept.idx) {
                between = between || toks[k].low == "between";
            }
            if (between) {
                if (i + 2 < mentions.size() && next.instances.size() == 1 && mentions[i + 2].instances.size() == 1) {
                    const std::size_t after = mentions[i + 2].begin;
                    const auto link = kept_tokens(toks, next.end, after, used);
                    if (link.idx.empty()) {
                        for (auto s : m.instances) {
                            add_relation(s, next.instances.front(), "between", mentions[i + 2].instances.front());
                        }
                        tail_done[i + 1] = true;
                        continue;
                    }
                }
                uncover("between needs two single references");
                continue;
            }
            if (next.instances.size() != 1) {
                uncover("relation towards several objects");
                continue;
            }
            auto ast = placement::parse_relation(phrase);
            if (m.instances.size() > 1 && ast.exact_offset()) {
                uncover("exact offset shared by several objects");
                continue;
            }
            for (auto s : m.instances) {
                add_relation(s, next.instances.front(), phrase);
            }
        }
        previous_subject_ = mentions.front().instances;
    }

public:
    std::string_view source_view_;

private:
    SceneSpec spec_;
    std::vector<std::size_t> history_;
    std::vector<std::size_t> previous_subject_;
    std::map<std::string, std::size_t> last_of_kind_;
    std::set<std::pair<std::size_t, std::size_t>> pairs_;
};

std::string display_list_name(const std::vector<ObjectInstance>& inst, std::size_t i) {
    return inst.at(i).display_name;
}

} // namespace

std::optional<std::string> kind_for_phrase(std::string_view phrase) {
    const auto toks = tokenize(phrase);
    for (std::size_t i = 0; i < toks.size(); ++i) {
        const auto m = match_alias(toks, i);
        if (m.alias) {
            return m.alias->kind;
        }
    }
    return std::nullopt;
}

std::string SceneSpec::relation_text(const SpecRelation& r) const {
    if (r.between_second) {
        const auto inst = instances();
        return "between the " + display_list_name(inst, r.object) + " and the " +
               display_list_name(inst, *r.between_second);
    }
    return r.text;
}

LayoutInfo SceneSpec::layout() const {
    const auto inst = instances();
    LayoutInfo out;
    for (const auto& [idx, pos] : positions) {
        const auto& name = inst.at(idx).display_name;
        bool dir_written = false;
        for (const auto& c : pos.coords) {
            PositionRecord p;
            p.name = name;
            p.coord = c;
            if (pos.dir && !dir_written) {
                p.dir = Direction(*pos.dir);
                dir_written = true;
            }
            out.positions.push_back(std::move(p));
        }
        if (pos.at_center && pos.coords.empty()) {
            PositionRecord p;
            p.name = name;
            p.location_text = "the center of the scene";
            if (pos.dir && !dir_written) {
                p.dir = Direction(*pos.dir);
                dir_written = true;
            }
            out.positions.push_back(std::move(p));
        }
        if (pos.dir && !dir_written) {
            PositionRecord p;
            p.name = name;
            p.dir = Direction(*pos.dir);
            out.positions.push_back(std::move(p));
        }
    }
    for (const auto& r : relations) {
        out.relations.push_back({inst.at(r.subject).display_name, inst.at(r.object).display_name, relation_text(r)});
    }
    return out;
}

SceneSpec parse_description(std::string_view description) {
    Parser p;
    p.source_view_ = description;
    return p.run(description);
}

std::string canonicalize_description(std::string_view description) {
    const auto toks = tokenize(description);
    std::string out;
    std::size_t last = 0;
    std::size_t i = 0;
    while (i < toks.size()) {
        const auto m = match_alias(toks, i);
        if (!m.alias) {
            ++i;
            continue;
        }
        const auto b = toks[i].begin;
        const auto e = toks[i + m.length - 1].end;
        out.append(description.substr(last, b - last));
        out.append(m.alias->kind);
        if (m.plural) {
            out.append("s");
        }
        last = e;
        i += m.length;
    }
    out.append(description.substr(last));
    std::string flat;
    for (char c : out) {
        const char d = (c == '\n' || c == '\r' || c == '\t') ? ' ' : c;
        if (d == ' ' && !flat.empty() && flat.back() == ' ') {
            continue;
        }
        flat += d;
    }
    return text::trim(flat);
}

namespace {

std::string article(const std::string& name) {
    const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(name.front())));
    return (c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u') ? "An" : "A";
}

std::string lower_first(std::string s) {
    if (!s.empty()) {
        s.front() = static_cast<char>(std::tolower(static_cast<unsigned char>(s.front())));
    }
    return s;
}

std::string connector(const std::string& phrase) {
    const std::string t = text::lower(phrase);
    auto ends = [&](std::string_view w) {
        return t.size() >= w.size() && t.compare(t.size() - w.size(), w.size(), w) == 0 &&
               (t.size() == w.size() || t[t.size() - w.size() - 1] == ' ');
    };
    if (ends("to") || ends("of") || ends("from") || ends("facing") || ends("faces") || ends("towards") ||
        ends("toward") || ends("behind") || ends("beside") || ends("near") || ends("alongside")) {
        return "";
    }
    if (ends("front") || ends("left") || ends("right")) {
        return " of";
    }
    if (ends("next") || ends("close") || ends("adjacent") || ends("parallel")) {
        return " to";
    }
    return " from";
}

std::string plural_of(const std::string& kind) {
    return kind + "s";
}

std::string count_word(int n, unsigned style) {
    static const char* words[] = {"zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten"};
    if (style % 2 == 0 && n >= 0 && n <= 10) {
        return words[n];
    }
    return std::to_string(n);
}

} // namespace

std::string render_description(const SceneSpec& spec, unsigned style) {
    const auto inst = spec.instances();
    std::vector<std::string> sentences;
    auto ref = [&](std::size_t i) { return "the " + inst.at(i).display_name; };
    auto cap = [](std::string s) {
        if (!s.empty()) {
            s.front() = static_cast<char>(std::toupper(static_cast<unsigned char>(s.front())));
        }
        return s;
    };
    auto positioned = [&](std::size_t i) {
        auto it = spec.positions.find(i);
        return it != spec.positions.end() && (!it->second.coords.empty() || it->second.at_center);
    };

    // Introductions, grouping consecutive unpositioned instances of one kind.
    std::size_t i = 0;
    while (i < inst.size()) {
        const auto& kind = spec.kinds[i];
        if (!positioned(i)) {
            std::size_t j = i + 1;
            while (j < inst.size() && spec.kinds[j] == kind && !positioned(j)) {
                ++j;
            }
            const int n = static_cast<int>(j - i);
            const std::string noun = n == 1 ? lower_first(article(kind)) + " " + kind
                                            : count_word(n, style) + " " + plural_of(kind);
            switch (style % 3) {
            case 0: sentences.push_back("Add " + noun + "."); break;
            case 1: sentences.push_back("Place " + noun + " in the scene."); break;
            default: sentences.push_back("The scene includes " + noun + "."); break;
            }
            i = j;
            continue;
        }
        const auto& pos = spec.positions.at(i);
        const std::string noun = article(kind) + " " + kind;
        const std::string where = !pos.coords.empty() ? "at " + format_coordinate(pos.coords.front())
                                                      : "at the center of the scene";
        switch (style % 3) {
        case 0: sentences.push_back(noun + " is " + where + "."); break;
        case 1: sentences.push_back("Place " + lower_first(noun) + " " + where + "."); break;
        default: sentences.push_back(noun + " is located " + where + "."); break;
        }
        ++i;
    }

    for (const auto& [idx, pos] : spec.positions) {
        for (std::size_t k = 1; k < pos.coords.size(); ++k) {
            sentences.push_back(cap(ref(idx)) + " is at " + format_coordinate(pos.coords[k]) + ".");
        }
        if (pos.dir) {
            const std::string deg = text::format_number(*pos.dir);
            sentences.push_back(style % 2 == 0 ? cap(ref(idx)) + " is rotated " + deg + " degrees."
                                               : cap(ref(idx)) + " is oriented at " + deg + " degrees.");
        }
    }

    for (const auto& r : spec.relations) {
        const std::string phrase = spec.relation_text(r);
        if (r.between_second) {
            sentences.push_back(cap(ref(r.subject)) + " is " + phrase + ".");
            continue;
        }
        const std::string tail = phrase + connector(phrase) + " " + ref(r.object);
        switch (style % 3) {
        case 0: sentences.push_back(cap(ref(r.subject)) + " is " + tail + "."); break;
        case 1: sentences.push_back("Place " + ref(r.subject) + " " + tail + "."); break;
        default: sentences.push_back("Put " + ref(r.subject) + " " + tail + "."); break;
        }
    }
    return text::join(sentences, " ");
}

} // namespace scenegen::layout
