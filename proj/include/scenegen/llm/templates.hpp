#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace scenegen::llm {

enum class TemplateId {
    object_retrieval,
    layout_extraction,
    placement_assignment,
    placement_verification,
    placement_feedback,
    code_generation,
    evolve_rewrite,
    description_validation,
};

std::string_view to_string(TemplateId id);
TemplateId template_id_from_string(std::string_view name);
const std::vector<TemplateId>& all_template_ids();

using Bindings = std::map<std::string, std::string>;

struct PromptRequest {
    TemplateId template_id = TemplateId::object_retrieval;
    Bindings bindings;
    double temperature = 1.0;
    int max_retries = 3;
};

/// Raw template text as shipped in assets/templates.
std::string_view template_text(TemplateId id);

/// Placeholder names ("{{ name }}") in order of first appearance.
std::vector<std::string> placeholders(std::string_view text);

/// Substitutes every placeholder in one pass; substituted values are not
/// scanned again. Throws ConfigError naming the first unbound placeholder.
std::string render_template(std::string_view text, const Bindings& bindings);

std::string render_prompt(const PromptRequest& request);

std::string template_checksum(TemplateId id);
std::map<std::string, std::string> template_checksums();

namespace detail {
struct EmbeddedTemplate {
    const char* id;
    const char* text;
};
const std::vector<EmbeddedTemplate>& embedded_templates();
} // namespace detail

} // namespace scenegen::llm
