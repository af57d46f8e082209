#pragma once

#include "scenegen/llm/templates.hpp"

#include <chrono>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace scenegen::llm {

struct ChatMessage {
    std::string role;  // "system", "user" or "assistant"
    std::string content;
};

using Conversation = std::vector<ChatMessage>;

/// One completion call. `messages` ends with the user turn to answer;
/// `template_id` and `bindings` describe the stage that produced the
/// conversation so rule-based backends can answer without reading prose.
struct CompletionRequest {
    TemplateId template_id = TemplateId::object_retrieval;
    Bindings bindings;
    Conversation messages;
    double temperature = 1.0;
};

class Backend {
public:
    virtual ~Backend() = default;
    virtual std::string id() const = 0;
    /// Must be safe to call concurrently. Throws TransportError for
    /// retryable failures and CredentialError for authentication problems.
    virtual std::string complete(const CompletionRequest& request) = 0;
};

struct NetworkConfig {
    std::string base_url;  // e.g. https://api.example.com/v1
    std::string api_key;
    std::string model;
    std::chrono::seconds timeout{120};
};

/// Generic chat-completion HTTP backend: POST {base}/chat/completions with
/// {"model", "messages", "temperature"}, reading choices[0].message.content.
std::shared_ptr<Backend> make_network_backend(NetworkConfig config);

} // namespace scenegen::llm
