#include "scenegen/cli/config.hpp"

#include "scenegen/error.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace scenegen::cli {

namespace {

template <typename T>
T number_value(const nlohmann::json& value, const std::string& key, T lo, T hi) {
    if (!value.is_number()) {
        throw ConfigError("configuration key '" + key + "' must be a number");
    }
    if constexpr (std::is_integral_v<T>) {
        if (!value.is_number_integer()) {
            throw ConfigError("configuration key '" + key + "' must be an integer");
        }
    }
    const auto v = value.get<T>();
    if (v < lo || v > hi) {
        throw ConfigError("configuration key '" + key + "' is out of range");
    }
    return v;
}

std::string string_value(const nlohmann::json& value, const std::string& key) {
    if (!value.is_string()) {
        throw ConfigError("configuration key '" + key + "' must be a string");
    }
    return value.get<std::string>();
}

void check_backend(const std::string& backend) {
    if (backend != "scripted" && backend != "scripted-weak" && backend != "network") {
        throw ConfigError("unknown backend '" + backend + "' (expected scripted, scripted-weak or network)");
    }
}

} // namespace

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys{"backend",     "api_base",      "api_key",     "model",
                                               "seed",        "max_iters",     "max_retries", "max_in_flight",
                                               "temperature", "timeout_s"};
    return keys;
}

Config load_config(const std::optional<std::string>& path, const std::map<std::string, std::string>& env) {
    Config c;
    if (path) {
        nlohmann::json file;
        try {
            file = nlohmann::json::parse(read_file(*path));
        } catch (const nlohmann::json::parse_error& e) {
            throw ConfigError("malformed configuration file " + *path + ": " + e.what());
        }
        if (!file.is_object()) {
            throw ConfigError("configuration file " + *path + " must hold a JSON object");
        }
        for (const auto& [key, value] : file.items()) {
            if (key == "backend") {
                c.backend = string_value(value, key);
            } else if (key == "api_base") {
                c.api_base = string_value(value, key);
            } else if (key == "api_key") {
                c.api_key = string_value(value, key);
            } else if (key == "model") {
                c.model = string_value(value, key);
            } else if (key == "seed") {
                c.seed = number_value<std::uint64_t>(value, key, 0, UINT64_MAX);
            } else if (key == "max_iters") {
                c.max_iters = number_value<int>(value, key, 1, 100);
            } else if (key == "max_retries") {
                c.max_retries = number_value<int>(value, key, 0, 20);
            } else if (key == "max_in_flight") {
                c.max_in_flight = number_value<std::size_t>(value, key, 1, 1024);
            } else if (key == "temperature") {
                c.temperature = number_value<double>(value, key, 0.0, 2.0);
            } else if (key == "timeout_s") {
                c.timeout_s = number_value<int>(value, key, 1, 3600);
            } else {
                throw ConfigError("unknown configuration key '" + key + "' in " + *path);
            }
        }
    }
    if (const auto it = env.find("SCENEGEN_API_BASE"); it != env.end()) {
        c.api_base = it->second;
    }
    if (const auto it = env.find("SCENEGEN_API_KEY"); it != env.end()) {
        c.api_key = it->second;
    }
    if (const auto it = env.find("SCENEGEN_MODEL"); it != env.end()) {
        c.model = it->second;
    }
    check_backend(c.backend);
    return c;
}

std::map<std::string, std::string> environment() {
    std::map<std::string, std::string> env;
    for (const char* name : {"SCENEGEN_API_BASE", "SCENEGEN_API_KEY", "SCENEGEN_MODEL"}) {
        if (const char* v = std::getenv(name)) {
            env[name] = v;
        }
    }
    return env;
}

nlohmann::ordered_json to_json(const RunManifest& manifest) {
    nlohmann::ordered_json j;
    j["command_line"] = manifest.command_line;
    j["seed"] = manifest.seed;
    j["backend"] = manifest.backend;
    j["templates"] = manifest.templates;
    j["started_at"] = manifest.started_at;
    j["finished_at"] = manifest.finished_at;
    auto outputs = nlohmann::ordered_json::array();
    for (const auto& o : manifest.outputs) {
        outputs.push_back({{"path", o.path}, {"sha256", o.sha256}});
    }
    j["outputs"] = std::move(outputs);
    j["exit_code"] = manifest.exit_code;
    return j;
}

RunManifest manifest_from_json(const nlohmann::json& value) {
    try {
        RunManifest m;
        m.command_line = value.at("command_line").get<std::vector<std::string>>();
        m.seed = value.at("seed").get<std::uint64_t>();
        m.backend = value.at("backend").get<std::string>();
        m.templates = value.at("templates").get<std::map<std::string, std::string>>();
        m.started_at = value.value("started_at", "");
        m.finished_at = value.value("finished_at", "");
        for (const auto& o : value.at("outputs")) {
            m.outputs.push_back({o.at("path").get<std::string>(), o.at("sha256").get<std::string>()});
        }
        m.exit_code = value.value("exit_code", 0);
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed run manifest: ") + e.what());
    }
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot read " + path);
    }
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const std::string& path, const std::string& content) {
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) {
        std::filesystem::create_directories(parent);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out || !(out << content) || !out.flush()) {
        throw ConfigError("cannot write " + path);
    }
}

} // namespace scenegen::cli
