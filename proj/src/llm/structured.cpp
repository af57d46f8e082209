#include "scenegen/llm/structured.hpp"

#include "scenegen/error.hpp"
#include "scenegen/text.hpp"

#include <cctype>
#include <charconv>

namespace scenegen::llm {

namespace {

enum class PayloadKind { json, text };

struct StepSpec {
    std::string_view title;
    std::string_view label;
    PayloadKind kind;
};

const std::vector<StepSpec>& step_skeleton(TemplateId id) {
    static const std::vector<StepSpec> retrieval{
        {"Find all objects", "Objects:", PayloadKind::json},
        {"Fix object names", "Objects:", PayloadKind::json},
        {"Rewrite description", "New Description:", PayloadKind::text},
    };
    static const std::vector<StepSpec> extraction{
        {"Identify Objects", "Objects:", PayloadKind::json},
        {"Absolute Positions", "Positions:", PayloadKind::json},
        {"Relative Positions", "Relative Positions:", PayloadKind::json},
    };
    static const std::vector<StepSpec> assignment{
        {"Rewrite Relative Position", "New Relative Positions:", PayloadKind::json},
        {"Calculate Coordinates", "Positions:", PayloadKind::json},
        {"Assign Positions", "Positions:", PayloadKind::json},
    };
    static const std::vector<StepSpec> rewrite{
        {"Rewrite description", "New Description:", PayloadKind::text},
    };
    static const std::vector<StepSpec> none;
    switch (id) {
    case TemplateId::object_retrieval: return retrieval;
    case TemplateId::layout_extraction: return extraction;
    case TemplateId::placement_assignment:
    case TemplateId::placement_feedback: return assignment;
    case TemplateId::evolve_rewrite: return rewrite;
    default: return none;
    }
}

bool is_fence_line(std::string_view line) {
    const std::string t = text::trim(line);
    if (t.size() < 3 || t.compare(0, 3, "```") != 0) {
        return false;
    }
    for (std::size_t i = 3; i < t.size(); ++i) {
        if (!std::isalnum(static_cast<unsigned char>(t[i])) && t[i] != '+' && t[i] != '#' && t[i] != '-') {
            return false;
        }
    }
    return true;
}

std::string strip_fences(std::string_view raw) {
    std::string out;
    for (const auto& line : text::split_lines(raw)) {
        if (!is_fence_line(line)) {
            out += line;
            out += '\n';
        }
    }
    return out;
}

struct Header {
    int number;
    std::string title;
    std::size_t line_begin;
    std::size_t body_begin;
};

// Lines of the form "#Step N: Title#", tolerating extra spaces and markdown
// heading hashes.
std::vector<Header> find_headers(const std::string& s) {
    std::vector<Header> out;
    std::size_t pos = 0;
    while (pos < s.size()) {
        auto eol = s.find('\n', pos);
        if (eol == std::string::npos) {
            eol = s.size();
        }
        std::string line = text::trim(std::string_view(s).substr(pos, eol - pos));
        std::size_t i = 0;
        while (i < line.size() && (line[i] == '#' || line[i] == ' ')) {
            ++i;
        }
        if (i > 0 && text::starts_with_ci(std::string_view(line).substr(i), "step ")) {
            std::size_t j = i + 5;
            int number = 0;
            bool digits = false;
            while (j < line.size() && std::isdigit(static_cast<unsigned char>(line[j]))) {
                number = number * 10 + (line[j] - '0');
                ++j;
                digits = true;
            }
            if (digits) {
                std::string title = line.substr(j);
                while (!title.empty() && (title.back() == '#' || title.back() == ' ' || title.back() == '*')) {
                    title.pop_back();
                }
                if (!title.empty() && title.front() == ':') {
                    title.erase(0, 1);
                }
                out.push_back({number, text::trim(title), pos, eol});
            }
        }
        pos = eol + 1;
    }
    return out;
}

// Position just after `label` at the start of a line inside `body`, or npos.
std::size_t find_label(const std::string& body, std::string_view label) {
    std::size_t pos = 0;
    while (pos <= body.size()) {
        auto eol = body.find('\n', pos);
        if (eol == std::string::npos) {
            eol = body.size();
        }
        const auto line = std::string_view(body).substr(pos, eol - pos);
        std::size_t lead = 0;
        while (lead < line.size() && (line[lead] == ' ' || line[lead] == '\t' || line[lead] == '*' || line[lead] == '-')) {
            ++lead;
        }
        if (text::starts_with_ci(line.substr(lead), label)) {
            return pos + lead + label.size();
        }
        if (eol == body.size()) {
            break;
        }
        pos = eol + 1;
    }
    return std::string::npos;
}

std::string analysis_of(const std::string& body, std::size_t stop) {
    const auto start = find_label(body.substr(0, stop), "Analysis:");
    if (start == std::string::npos) {
        return {};
    }
    return text::trim(std::string_view(body).substr(start, stop - start));
}

nlohmann::json parse_json_payload(const std::string& body, std::size_t from, const std::string& section) {
    const auto block = find_json_block(body, from);
    if (!block) {
        throw ParseError(section, "no JSON list found in " + section);
    }
    try {
        return nlohmann::json::parse(*block);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(section, "invalid JSON in " + section + ": " + e.what());
    }
}

StructuredOutput parse_steps(const std::string& cleaned, TemplateId id) {
    const auto& skeleton = step_skeleton(id);
    const auto headers = find_headers(cleaned);
    StructuredOutput out;
    out.template_id = id;
    for (std::size_t k = 0; k < skeleton.size(); ++k) {
        const int number = static_cast<int>(k + 1);
        const std::string name = "Step " + std::to_string(number);
        const Header* h = nullptr;
        std::size_t next_begin = cleaned.size();
        for (std::size_t i = 0; i < headers.size(); ++i) {
            if (headers[i].number == number) {
                h = &headers[i];
                for (std::size_t j = i + 1; j < headers.size(); ++j) {
                    if (headers[j].number != number) {
                        next_begin = headers[j].line_begin;
                        break;
                    }
                }
                break;
            }
        }
        if (!h) {
            throw ParseError(name, "missing section '#" + name + ": " + std::string(skeleton[k].title) + "#'");
        }
        const std::string body = cleaned.substr(h->body_begin, next_begin - h->body_begin);
        const auto label_end = find_label(body, skeleton[k].label);
        if (label_end == std::string::npos) {
            throw ParseError(name, name + " has no '" + std::string(skeleton[k].label) + "' field");
        }
        Section sec;
        sec.header = name + ": " + h->title;
        sec.label = std::string(skeleton[k].label);
        sec.analysis = analysis_of(body, label_end - skeleton[k].label.size());
        if (skeleton[k].kind == PayloadKind::json) {
            sec.payload = parse_json_payload(body, label_end, name);
        } else {
            const std::string value = text::trim(std::string_view(body).substr(label_end));
            if (value.empty()) {
                throw ParseError(name, name + " has an empty '" + std::string(skeleton[k].label) + "' field");
            }
            sec.payload = value;
        }
        out.sections.push_back(std::move(sec));
    }
    return out;
}

StructuredOutput parse_judgement(const std::string& cleaned, TemplateId id) {
    const auto rel = find_label(cleaned, "Relations:");
    const auto ana = find_label(cleaned, "Analysis:");
    const auto err = find_label(cleaned, "Error:");
    if (err == std::string::npos) {
        throw ParseError("Error", "missing 'Error:' line");
    }
    constexpr std::size_t ana_len = sizeof("Analysis:") - 1;
    constexpr std::size_t err_len = sizeof("Error:") - 1;
    const std::size_t ana_start = ana == std::string::npos ? std::string::npos : ana - ana_len;
    const std::size_t err_start = err - err_len;
    // Text after a label up to the next label that follows it.
    auto slice = [&](std::size_t begin, std::initializer_list<std::size_t> stops) {
        if (begin == std::string::npos) {
            return std::string{};
        }
        std::size_t stop = cleaned.size();
        for (auto e : stops) {
            if (e != std::string::npos && e > begin && e < stop) {
                stop = e;
            }
        }
        return text::trim(std::string_view(cleaned).substr(begin, stop - begin));
    };

    StructuredOutput out;
    out.template_id = id;
    out.sections.push_back({"Relations", "", "Relations:", slice(rel, {ana_start, err_start})});
    out.sections.push_back({"Analysis", "", "Analysis:", slice(ana, {err_start})});

    auto eol = cleaned.find('\n', err);
    std::string verdict = text::lower(text::trim(std::string_view(cleaned).substr(err, eol == std::string::npos ? std::string::npos : eol - err)));
    std::string word;
    for (char c : verdict) {
        if (std::isalpha(static_cast<unsigned char>(c))) {
            word += c;
        } else if (!word.empty()) {
            break;
        }
    }
    if (word != "yes" && word != "no") {
        throw ParseError("Error", "expected \"Yes\" or \"No\" after 'Error:', got '" + verdict + "'");
    }
    out.sections.push_back({"Error", "", "Error:", word == "yes"});
    return out;
}

StructuredOutput parse_code(std::string_view raw) {
    std::string code;
    const auto open = raw.find("```");
    if (open != std::string_view::npos) {
        auto start = raw.find('\n', open);
        const auto close = start == std::string_view::npos ? std::string_view::npos : raw.find("```", start + 1);
        if (start != std::string_view::npos) {
            code = std::string(raw.substr(start + 1, close == std::string_view::npos ? std::string_view::npos : close - start - 1));
        }
    } else {
        code = std::string(raw);
    }
    if (text::trim(code).empty()) {
        throw ParseError("Code", "no code found in the response");
    }
    StructuredOutput out;
    out.template_id = TemplateId::code_generation;
    out.sections.push_back({"Code", "", "", code});
    return out;
}

} // namespace

std::size_t expected_sections(TemplateId id) {
    switch (id) {
    case TemplateId::placement_verification:
    case TemplateId::description_validation: return 3;
    case TemplateId::code_generation: return 1;
    default: return step_skeleton(id).size();
    }
}

StructuredOutput parse_structured(std::string_view text, TemplateId id) {
    if (id == TemplateId::code_generation) {
        return parse_code(text);
    }
    const std::string cleaned = strip_fences(text);
    if (id == TemplateId::placement_verification || id == TemplateId::description_validation) {
        return parse_judgement(cleaned, id);
    }
    return parse_steps(cleaned, id);
}

std::optional<std::string> find_json_block(std::string_view s, std::size_t from) {
    std::size_t start = std::string_view::npos;
    for (std::size_t i = from; i < s.size(); ++i) {
        if (s[i] == '[' || s[i] == '{') {
            start = i;
            break;
        }
    }
    if (start == std::string_view::npos) {
        return std::nullopt;
    }
    std::vector<char> stack;
    bool in_string = false;
    bool escape = false;
    for (std::size_t i = start; i < s.size(); ++i) {
        const char c = s[i];
        if (in_string) {
            if (escape) {
                escape = false;
            } else if (c == '\\') {
                escape = true;
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"') {
            in_string = true;
        } else if (c == '[' || c == '{') {
            stack.push_back(c == '[' ? ']' : '}');
        } else if (c == ']' || c == '}') {
            if (stack.empty() || stack.back() != c) {
                return std::string(s.substr(start, i - start + 1));
            }
            stack.pop_back();
            if (stack.empty()) {
                return std::string(s.substr(start, i - start + 1));
            }
        }
    }
    return std::string(s.substr(start));
}

std::optional<Coordinate> coordinate_from_json(const nlohmann::json& value) {
    if (value.is_string()) {
        return parse_coordinate_text(value.get<std::string>());
    }
    if (value.is_array() && (value.size() == 2 || value.size() == 3)) {
        for (const auto& v : value) {
            if (!v.is_number()) {
                return std::nullopt;
            }
        }
        return Coordinate{round_mm(value[0].get<double>()), round_mm(value[1].get<double>())};
    }
    return std::nullopt;
}

std::optional<double> orientation_from_json(const nlohmann::json& value) {
    if (value.is_number()) {
        return value.get<double>();
    }
    if (!value.is_string()) {
        return std::nullopt;
    }
    std::string s = text::lower(text::trim(value.get<std::string>()));
    for (std::string_view suffix : {"degrees", "degree", "deg", "°"}) {
        if (s.size() > suffix.size() && s.ends_with(suffix)) {
            s = text::trim(s.substr(0, s.size() - suffix.size()));
            break;
        }
    }
    if (!s.empty() && s.front() == '+') {
        s.erase(0, 1);
    }
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) {
        return std::nullopt;
    }
    return v;
}

std::string json_text(const nlohmann::json& value) {
    if (value.is_string()) {
        return value.get<std::string>();
    }
    if (value.is_null()) {
        return {};
    }
    return value.dump();
}

} // namespace scenegen::llm
