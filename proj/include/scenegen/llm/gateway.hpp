#pragma once

#include "scenegen/llm/backend.hpp"

#include <chrono>
#include <condition_variable>
#include <functional>
#include <memory>
#include <mutex>

namespace scenegen::llm {

struct GatewayOptions {
    std::size_t max_in_flight = 4;
    std::chrono::milliseconds base_backoff{250};
    /// Replaceable for tests; defaults to std::this_thread::sleep_for.
    std::function<void(std::chrono::milliseconds)> sleep;
};

/// Renders prompts, caps concurrent calls and retries transport failures
/// with exponential backoff.
class Gateway {
public:
    explicit Gateway(std::shared_ptr<Backend> backend, GatewayOptions options = {});

    const Backend& backend() const noexcept { return *backend_; }

    /// Single-turn call on a rendered template.
    std::string complete(const PromptRequest& request);

    /// Appends the rendered prompt and the answer to `conversation`.
    std::string chat(Conversation& conversation, const PromptRequest& request);

    /// Appends `user_text` (instead of a rendered prompt) and the answer.
    /// `request` names the stage and its bindings.
    std::string follow_up(Conversation& conversation, const PromptRequest& request, const std::string& user_text);

    std::size_t calls() const noexcept;

private:
    std::string send(const CompletionRequest& request, int max_retries);

    std::shared_ptr<Backend> backend_;
    GatewayOptions options_;
    mutable std::mutex mutex_;
    std::condition_variable slot_free_;
    std::size_t in_flight_ = 0;
    std::size_t calls_ = 0;
};

} // namespace scenegen::llm
