#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace scenegen::cli {

/// Version of the scene JSON layout written by `generate` and read by
/// `verify` and `render`.
inline constexpr const char* kSceneSchemaVersion = "1";

struct Config {
    std::string backend = "scripted";  // scripted, scripted-weak or network
    std::string api_base = "http://localhost:8000/v1";
    std::string api_key;
    std::string model = "gpt-4o";
    std::uint64_t seed = 0;
    int max_iters = 3;
    int max_retries = 3;
    std::size_t max_in_flight = 4;
    double temperature = 1.0;
    int timeout_s = 120;
};

/// Keys accepted in a configuration file, in documentation order.
const std::vector<std::string>& config_keys();

/// Defaults, then the JSON file (when given), then the environment
/// (SCENEGEN_API_BASE, SCENEGEN_API_KEY, SCENEGEN_MODEL). Throws ConfigError
/// on unreadable or malformed files, unknown keys and bad values.
Config load_config(const std::optional<std::string>& path, const std::map<std::string, std::string>& env);

/// The SCENEGEN_* variables of the current process.
std::map<std::string, std::string> environment();

struct OutputRecord {
    std::string path;
    std::string sha256;
};

/// Everything needed to rerun a command: its arguments, the effective seed
/// and backend, template checksums, timing and the files it wrote.
struct RunManifest {
    std::vector<std::string> command_line;  // arguments after the program name
    std::uint64_t seed = 0;
    std::string backend;
    std::map<std::string, std::string> templates;
    std::string started_at;
    std::string finished_at;
    std::vector<OutputRecord> outputs;
    int exit_code = 0;
};

nlohmann::ordered_json to_json(const RunManifest& manifest);
RunManifest manifest_from_json(const nlohmann::json& value);

/// UTC time as "YYYY-MM-DDTHH:MM:SSZ".
std::string utc_timestamp();

std::string read_file(const std::string& path);
/// Writes `content` to `path`, creating parent directories.
void write_file(const std::string& path, const std::string& content);

} // namespace scenegen::cli
