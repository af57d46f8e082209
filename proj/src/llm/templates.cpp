#include "scenegen/llm/templates.hpp"

#include "scenegen/error.hpp"
#include "scenegen/text.hpp"

#include <algorithm>

namespace scenegen::llm {

std::string_view to_string(TemplateId id) {
    switch (id) {
    case TemplateId::object_retrieval: return "object_retrieval";
    case TemplateId::layout_extraction: return "layout_extraction";
    case TemplateId::placement_assignment: return "placement_assignment";
    case TemplateId::placement_verification: return "placement_verification";
    case TemplateId::placement_feedback: return "placement_feedback";
    case TemplateId::code_generation: return "code_generation";
    case TemplateId::evolve_rewrite: return "evolve_rewrite";
    case TemplateId::description_validation: return "description_validation";
    }
    return "object_retrieval";
}

const std::vector<TemplateId>& all_template_ids() {
    static const std::vector<TemplateId> ids{
        TemplateId::object_retrieval,     TemplateId::layout_extraction,  TemplateId::placement_assignment,
        TemplateId::placement_verification, TemplateId::placement_feedback, TemplateId::code_generation,
        TemplateId::evolve_rewrite,       TemplateId::description_validation,
    };
    return ids;
}

TemplateId template_id_from_string(std::string_view name) {
    for (auto id : all_template_ids()) {
        if (to_string(id) == name) {
            return id;
        }
    }
    throw ConfigError("unknown template id '" + std::string(name) + "'");
}

std::string_view template_text(TemplateId id) {
    const auto key = to_string(id);
    for (const auto& t : detail::embedded_templates()) {
        if (key == t.id) {
            return t.text;
        }
    }
    throw ConfigError("template '" + std::string(key) + "' is not embedded in this build");
}

namespace {

struct Slot {
    std::size_t begin;
    std::size_t end;  // one past the closing braces
    std::string name;
};

std::vector<Slot> scan(std::string_view text) {
    std::vector<Slot> slots;
    std::size_t pos = 0;
    while ((pos = text.find("{{", pos)) != std::string_view::npos) {
        const auto close = text.find("}}", pos + 2);
        if (close == std::string_view::npos) {
            break;
        }
        const auto inner = text.substr(pos + 2, close - pos - 2);
        if (inner.find('\n') != std::string_view::npos || inner.find('{') != std::string_view::npos) {
            pos += 2;
            continue;
        }
        slots.push_back({pos, close + 2, text::trim(inner)});
        pos = close + 2;
    }
    return slots;
}

} // namespace

std::vector<std::string> placeholders(std::string_view text) {
    std::vector<std::string> out;
    for (const auto& s : scan(text)) {
        if (std::find(out.begin(), out.end(), s.name) == out.end()) {
            out.push_back(s.name);
        }
    }
    return out;
}

std::string render_template(std::string_view text, const Bindings& bindings) {
    std::string out;
    out.reserve(text.size() + 256);
    std::size_t last = 0;
    for (const auto& s : scan(text)) {
        auto it = bindings.find(s.name);
        if (it == bindings.end()) {
            throw ConfigError("missing binding for placeholder '" + s.name + "'");
        }
        out.append(text.substr(last, s.begin - last));
        out.append(it->second);
        last = s.end;
    }
    out.append(text.substr(last));
    return out;
}

std::string render_prompt(const PromptRequest& request) {
    return render_template(template_text(request.template_id), request.bindings);
}

std::string template_checksum(TemplateId id) {
    return text::sha256_hex(template_text(id));
}

std::map<std::string, std::string> template_checksums() {
    std::map<std::string, std::string> out;
    for (auto id : all_template_ids()) {
        out[std::string(to_string(id))] = template_checksum(id);
    }
    return out;
}

} // namespace scenegen::llm
