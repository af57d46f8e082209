#pragma once

#include "scenegen/llm/backend.hpp"
#include "scenegen/placement/engine.hpp"

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>

namespace scenegen::llm {

struct ScriptedOptions {
    std::uint64_t seed = 0;
    bool weak = false;         // inject placement errors into first assignment answers
    double error_rate = 0.35;  // probability of an injected error per assignment
    placement::PlacementRules rules;
};

/// Deterministic stand-in for a chat model. Each stage is answered from the
/// request bindings with the description grammar and the placement engine,
/// in the response layout the stage's template asks for.
class ScriptedBackend : public Backend {
public:
    explicit ScriptedBackend(ScriptedOptions options = {});

    std::string id() const override;
    std::string complete(const CompletionRequest& request) override;

    /// Queues a canned answer returned by the next request for `stage`.
    void prime(TemplateId stage, std::string answer);

    const ScriptedOptions& options() const noexcept { return options_; }

private:
    ScriptedOptions options_;
    std::mutex mutex_;
    std::map<TemplateId, std::deque<std::string>> primed_;
};

std::shared_ptr<ScriptedBackend> make_scripted_backend(ScriptedOptions options = {});

} // namespace scenegen::llm
