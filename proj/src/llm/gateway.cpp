#include "scenegen/llm/gateway.hpp"

#include "scenegen/error.hpp"

#include <thread>

namespace scenegen::llm {

Gateway::Gateway(std::shared_ptr<Backend> backend, GatewayOptions options)
    : backend_(std::move(backend)), options_(std::move(options)) {
    if (!backend_) {
        throw ConfigError("gateway needs a backend");
    }
    if (options_.max_in_flight == 0) {
        throw ConfigError("max_in_flight must be at least 1");
    }
    if (!options_.sleep) {
        options_.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
    }
}

std::size_t Gateway::calls() const noexcept {
    std::lock_guard lock(mutex_);
    return calls_;
}

std::string Gateway::send(const CompletionRequest& request, int max_retries) {
    {
        std::unique_lock lock(mutex_);
        slot_free_.wait(lock, [&] { return in_flight_ < options_.max_in_flight; });
        ++in_flight_;
        ++calls_;
    }
    struct Release {
        Gateway& g;
        ~Release() {
            {
                std::lock_guard lock(g.mutex_);
                --g.in_flight_;
            }
            g.slot_free_.notify_one();
        }
    } release{*this};

    std::string last_error;
    for (int attempt = 0; attempt <= max_retries; ++attempt) {
        try {
            return backend_->complete(request);
        } catch (const TransportError& e) {
            last_error = e.what();
            if (attempt < max_retries) {
                options_.sleep(options_.base_backoff * (1LL << attempt));
            }
        }
    }
    throw TransportError("request failed after " + std::to_string(max_retries + 1) + " attempts: " + last_error);
}

std::string Gateway::complete(const PromptRequest& request) {
    Conversation conversation;
    return chat(conversation, request);
}

std::string Gateway::chat(Conversation& conversation, const PromptRequest& request) {
    return follow_up(conversation, request, render_prompt(request));
}

std::string Gateway::follow_up(Conversation& conversation, const PromptRequest& request, const std::string& user_text) {
    conversation.push_back({"user", user_text});
    CompletionRequest call{request.template_id, request.bindings, conversation, request.temperature};
    std::string answer = send(call, request.max_retries);
    conversation.push_back({"assistant", answer});
    return answer;
}

} // namespace scenegen::llm
