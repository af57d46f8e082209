#include "scenegen/error.hpp"
#include "scenegen/llm/backend.hpp"

#include "httplib.h"
#include "json.hpp"

namespace scenegen::llm {

namespace {

struct Endpoint {
    std::string origin;  // scheme://host[:port]
    std::string path;    // prefix before /chat/completions
};

Endpoint split_url(const std::string& base) {
    const auto scheme = base.find("://");
    if (scheme == std::string::npos) {
        throw ConfigError("API base URL needs a scheme: '" + base + "'");
    }
    const auto slash = base.find('/', scheme + 3);
    Endpoint e;
    e.origin = slash == std::string::npos ? base : base.substr(0, slash);
    e.path = slash == std::string::npos ? "" : base.substr(slash);
    while (!e.path.empty() && e.path.back() == '/') {
        e.path.pop_back();
    }
    return e;
}

class NetworkBackend final : public Backend {
public:
    explicit NetworkBackend(NetworkConfig config) : config_(std::move(config)), endpoint_(split_url(config_.base_url)) {}

    std::string id() const override { return "network:" + config_.model; }

    std::string complete(const CompletionRequest& request) override {
        if (config_.api_key.empty()) {
            throw CredentialError("no API key configured (SCENEGEN_API_KEY)");
        }
        nlohmann::json body;
        body["model"] = config_.model;
        body["temperature"] = request.temperature;
        body["messages"] = nlohmann::json::array();
        for (const auto& m : request.messages) {
            body["messages"].push_back({{"role", m.role}, {"content", m.content}});
        }

        httplib::Client client(endpoint_.origin);
        client.set_connection_timeout(config_.timeout);
        client.set_read_timeout(config_.timeout);
        client.set_write_timeout(config_.timeout);
        client.set_bearer_token_auth(config_.api_key);
        const auto res = client.Post(endpoint_.path + "/chat/completions", body.dump(), "application/json");
        if (!res) {
            throw TransportError("connection to " + endpoint_.origin + " failed: " + httplib::to_string(res.error()));
        }
        if (res->status == 401 || res->status == 403) {
            throw CredentialError("API rejected the credentials (HTTP " + std::to_string(res->status) + ")");
        }
        if (res->status == 429 || res->status >= 500) {
            throw TransportError("HTTP " + std::to_string(res->status) + " from " + endpoint_.origin);
        }
        if (res->status != 200) {
            throw TransportError("unexpected HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
        }
        try {
            const auto reply = nlohmann::json::parse(res->body);
            return reply.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw TransportError(std::string("malformed completion response: ") + e.what());
        }
    }

private:
    NetworkConfig config_;
    Endpoint endpoint_;
};

} // namespace

std::shared_ptr<Backend> make_network_backend(NetworkConfig config) {
    return std::make_shared<NetworkBackend>(std::move(config));
}

} // namespace scenegen::llm
