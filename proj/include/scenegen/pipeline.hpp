#pragma once

#include "scenegen/codegen/codegen.hpp"
#include "scenegen/layout/pipeline.hpp"
#include "scenegen/placement/refinement.hpp"

#include <optional>
#include <string>

#include "json.hpp"

namespace scenegen {

enum class CodeMode { none, deterministic, model };

struct PipelineOptions {
    placement::RefinementOptions refinement;
    CodeMode code = CodeMode::none;
    int code_feedback_rounds = 2;
    const ObjectLibrary* library = nullptr;  // standard library when null
};

struct PipelineResult {
    layout::RetrievalResult retrieval;
    LayoutInfo layout;
    placement::RefinementResult assignment;
    Scene scene;
    bool ok = false;  // final placements verified
    std::optional<std::string> csharp;
    std::optional<codegen::CodeReport> code_report;
};

/// Retrieval, extraction, assignment with verification feedback, and
/// optionally code generation. Stage failures propagate as exceptions;
/// unresolved verification errors are reported through `ok`.
PipelineResult run_pipeline(std::string_view description, llm::Gateway& gateway, const PipelineOptions& options = {});

/// Intermediate artifacts of every stage, for debugging dumps.
nlohmann::ordered_json stages_json(const PipelineResult& result);

} // namespace scenegen
