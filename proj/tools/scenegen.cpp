#include "scenegen/bench/bench.hpp"
#include "scenegen/cli/config.hpp"
#include "scenegen/codegen/codegen.hpp"
#include "scenegen/error.hpp"
#include "scenegen/evolve/evolve.hpp"
#include "scenegen/layout/grammar.hpp"
#include "scenegen/llm/scripted.hpp"
#include "scenegen/pipeline.hpp"
#include "scenegen/text.hpp"

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <unistd.h>

#include "CLI11.hpp"
#include "json.hpp"

using namespace scenegen;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailed = 2;
constexpr int kExitError = 3;

const char* kHelpFooter = R"(Exit codes: 0 success, 2 verification failed (or replay mismatch), 3 error.

Scene JSON, schema version 1:
  {"description": string,
   "objects": [{"name": string, "model": string,
                "position": [x, y, 0] integers in mm,
                "orientation": degrees in [0, 360)}]}
  Keys appear in exactly this order, two-space indentation, UTF-8,
  newline-terminated. "model" is the object library name.

Configuration (--config FILE, JSON object): backend, api_base, api_key,
model, seed, max_iters, max_retries, max_in_flight, temperature, timeout_s.
Environment variables SCENEGEN_API_BASE, SCENEGEN_API_KEY and SCENEGEN_MODEL
override the file. Unknown keys are rejected.)";

// Applies the configured sampling temperature to every call.
class TemperatureBackend final : public llm::Backend {
public:
    TemperatureBackend(std::shared_ptr<llm::Backend> inner, double temperature)
        : inner_(std::move(inner)), temperature_(temperature) {}
    std::string id() const override { return inner_->id(); }
    std::string complete(const llm::CompletionRequest& request) override {
        auto copy = request;
        copy.temperature = temperature_;
        return inner_->complete(copy);
    }

private:
    std::shared_ptr<llm::Backend> inner_;
    double temperature_;
};

std::shared_ptr<llm::Backend> make_backend(const cli::Config& config, const std::string& kind, std::uint64_t seed) {
    if (kind == "scripted" || kind == "scripted-weak") {
        llm::ScriptedOptions options;
        options.seed = seed;
        options.weak = kind == "scripted-weak";
        return llm::make_scripted_backend(options);
    }
    if (kind != "network") {
        throw ConfigError("unknown backend '" + kind + "'");
    }
    llm::NetworkConfig network;
    network.base_url = config.api_base;
    network.api_key = config.api_key;
    network.model = config.model;
    network.timeout = std::chrono::seconds(config.timeout_s);
    return std::make_shared<TemperatureBackend>(llm::make_network_backend(network), config.temperature);
}

llm::GatewayOptions gateway_options(const cli::Config& config) {
    llm::GatewayOptions options;
    options.max_in_flight = config.max_in_flight;
    return options;
}

struct Common {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> backend;
    std::string manifest_path;
};

void add_common(CLI::App* sub, Common& common) {
    sub->add_option("--config", common.config_path, "JSON configuration file")->check(CLI::ExistingFile);
    sub->add_option("--seed", common.seed, "Run seed (overrides the configuration)")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    sub->add_option("--backend", common.backend, "scripted, scripted-weak or network")
        ->check(CLI::IsMember({"scripted", "scripted-weak", "network"}))
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
}

void add_manifest_option(CLI::App* sub, Common& common) {
    sub->add_option("--manifest", common.manifest_path, "Run manifest path (default: <out>.manifest.json)")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
}

cli::Config effective_config(const Common& common) {
    auto config = cli::load_config(common.config_path.empty() ? std::nullopt : std::optional(common.config_path),
                                   cli::environment());
    if (common.seed) {
        config.seed = *common.seed;
    }
    if (common.backend) {
        config.backend = *common.backend;
    }
    return config;
}

// Records every file a command writes, for the manifest.
class Run {
public:
    Run(std::vector<std::string> args, const cli::Config& config)
        : args_(std::move(args)), config_(config), started_(cli::utc_timestamp()) {}

    void write(const std::string& path, const std::string& content) {
        cli::write_file(path, content);
        outputs_.push_back({path, text::sha256_hex(content)});
    }

    void add_argument(const std::string& flag, const std::string& value) {
        args_.push_back(flag);
        args_.push_back(value);
    }

    void finish(const std::string& manifest_path, int exit_code) const {
        cli::RunManifest m;
        m.command_line = args_;
        m.seed = config_.seed;
        m.backend = config_.backend;
        m.templates = llm::template_checksums();
        m.started_at = started_;
        m.finished_at = cli::utc_timestamp();
        m.outputs = outputs_;
        m.exit_code = exit_code;
        cli::write_file(manifest_path, cli::to_json(m).dump(2) + "\n");
    }

private:
    std::vector<std::string> args_;
    cli::Config config_;
    std::string started_;
    std::vector<cli::OutputRecord> outputs_;
};

std::string manifest_for(const Common& common, const std::string& out) {
    return common.manifest_path.empty() ? out + ".manifest.json" : common.manifest_path;
}

std::vector<std::string> read_lines(const std::string& path) {
    std::vector<std::string> lines;
    for (auto& line : text::split_lines(cli::read_file(path))) {
        if (!text::trim(line).empty()) {
            lines.push_back(std::move(line));
        }
    }
    return lines;
}

nlohmann::json parse_json_line(const std::string& line, const std::string& path) {
    try {
        return nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("malformed JSON line in " + path + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

struct GenerateArgs {
    std::string description;
    std::string file;
    std::string out = "scene.json";
    std::string emit_cs;
    std::string emit_svg;
    std::string stages;
    std::string codegen = "deterministic";
    std::optional<int> max_iters;
};

int cmd_generate(const GenerateArgs& a, const Common& common, const std::vector<std::string>& args, bool out_given) {
    const auto config = effective_config(common);
    std::string description = a.description;
    if (!a.file.empty()) {
        description = text::trim(cli::read_file(a.file));
    }
    if (text::trim(description).empty()) {
        throw PreconditionError("generate needs a description or --file");
    }

    Run run(args, config);
    if (!out_given) {
        run.add_argument("--out", a.out);
    }
    llm::Gateway gateway(make_backend(config, config.backend, derive_seed(config.seed, "backend")),
                         gateway_options(config));
    PipelineOptions options;
    options.refinement.max_iters = a.max_iters.value_or(config.max_iters);
    if (!a.emit_cs.empty()) {
        options.code = a.codegen == "llm" ? CodeMode::model : CodeMode::deterministic;
    }
    const auto result = run_pipeline(description, gateway, options);

    run.write(a.out, codegen::emit_scene_json(result.scene));
    if (result.csharp) {
        run.write(a.emit_cs, *result.csharp);
    }
    if (!a.emit_svg.empty()) {
        run.write(a.emit_svg, codegen::emit_svg(result.scene.placements));
    }
    if (!a.stages.empty()) {
        run.write(a.stages, stages_json(result).dump(2) + "\n");
    }
    const bool code_ok = !result.code_report || result.code_report->ok;
    const int code = result.ok && code_ok ? kExitOk : kExitFailed;
    std::cout << placement::to_json(result.assignment.report).dump(2) << "\n";
    if (!code_ok) {
        std::cerr << "code validation failed: " << result.code_report->describe() << "\n";
    }
    run.finish(manifest_for(common, a.out), code);
    return code;
}

// ---------------------------------------------------------------------------
// verify and render
// ---------------------------------------------------------------------------

int cmd_verify(const std::string& path) {
    const auto scene = codegen::parse_scene_json(cli::read_file(path));
    const auto spec = layout::parse_description(scene.description);
    const auto facts = placement::interpret(scene.objects(), spec.layout());
    const auto report = placement::verify(scene.placements, facts);
    if (!spec.covered) {
        std::cerr << "note: the description goes beyond the relation grammar; only recognized facts were checked\n";
    }
    std::cout << placement::to_json(report).dump(2) << "\n";
    return report.ok ? kExitOk : kExitFailed;
}

struct RenderArgs {
    std::string scene;
    std::string svg;
    std::string cs;
    double scale = 0.05;
};

int cmd_render(const RenderArgs& a, const Common& common, const std::vector<std::string>& args) {
    if (a.svg.empty() && a.cs.empty()) {
        throw PreconditionError("render needs --svg and/or --cs");
    }
    const auto config = effective_config(common);
    const auto scene = codegen::parse_scene_json(cli::read_file(a.scene));
    Run run(args, config);
    if (!a.svg.empty()) {
        run.write(a.svg, codegen::emit_svg(scene.placements, a.scale));
    }
    if (!a.cs.empty()) {
        run.write(a.cs, codegen::emit_csharp(scene.placements, ObjectLibrary::standard()));
    }
    run.finish(manifest_for(common, a.svg.empty() ? a.cs : a.svg), kExitOk);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// evolve and collect
// ---------------------------------------------------------------------------

std::vector<evolve::DescriptionRecord> load_records(const std::string& path) {
    std::vector<evolve::DescriptionRecord> records;
    for (const auto& line : read_lines(path)) {
        records.push_back(evolve::record_from_json(parse_json_line(line, path)));
    }
    return records;
}

struct EvolveArgs {
    std::string seeds;
    std::size_t target = 100;
    std::size_t max_iterations = 0;
    std::string out;
};

int cmd_evolve(const EvolveArgs& a, const Common& common, const std::vector<std::string>& args) {
    const auto config = effective_config(common);
    const auto seeds = load_records(a.seeds);
    llm::Gateway gateway(make_backend(config, config.backend, derive_seed(config.seed, "backend")),
                         gateway_options(config));
    Rng rng(derive_seed(config.seed, "evolve"));
    evolve::EvolveOptions options;
    options.target = a.target;
    options.max_iterations = a.max_iterations;
    const auto result = evolve::evolve(seeds, gateway, rng, options);

    std::string body;
    for (const auto& r : result.pool) {
        body += evolve::to_json(r).dump() + "\n";
    }
    Run run(args, config);
    run.write(a.out, body);
    for (const auto& w : result.warnings) {
        std::cerr << "warning: " << w << "\n";
    }
    std::cerr << "pool " << result.pool.size() << ", iterations " << result.iterations << ", invalid "
              << result.rejected_invalid << ", duplicate " << result.rejected_duplicate << ", rewrite failures "
              << result.rewrite_failures << "\n";
    run.finish(manifest_for(common, a.out), kExitOk);
    return kExitOk;
}

struct CollectArgs {
    std::string pool;
    std::string out;
    std::string weak_backend = "scripted-weak";
    std::string weak_model;
    double validation_fraction = 0.05;
};

int cmd_collect(const CollectArgs& a, const Common& common, const std::vector<std::string>& args) {
    const auto config = effective_config(common);
    const auto pool = load_records(a.pool);
    llm::Gateway strong(make_backend(config, config.backend, derive_seed(config.seed, "strong")),
                        gateway_options(config));
    auto weak_config = config;
    if (!a.weak_model.empty()) {
        weak_config.model = a.weak_model;
    }
    llm::Gateway weak(make_backend(weak_config, a.weak_backend, derive_seed(config.seed, "weak")),
                      gateway_options(config));
    evolve::CollectOptions options;
    options.seed = config.seed;
    options.validation_fraction = a.validation_fraction;
    const auto result = evolve::collect_trajectories(pool, strong, weak, options);

    std::string body;
    std::map<std::string, std::size_t> counts;
    for (const auto& r : result.records) {
        body += evolve::to_json(r).dump() + "\n";
        ++counts[std::string(evolve::to_string(r.task))];
    }
    Run run(args, config);
    run.write(a.out, body);
    for (const auto& line : result.log) {
        std::cerr << line << "\n";
    }
    for (const auto& [task, n] : counts) {
        std::cerr << task << " " << n << "\n";
    }
    run.finish(manifest_for(common, a.out), kExitOk);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

struct BenchArgs {
    std::string suite;
    int samples = 5;
    int k = 1;
    std::string out;
};

int cmd_bench(const BenchArgs& a, const Common& common, const std::vector<std::string>& args) {
    const auto config = effective_config(common);
    const auto suite = bench::load_suite_file(a.suite);
    bench::SuiteOptions options;
    options.samples = a.samples;
    options.k = a.k;
    options.seed = config.seed;
    options.parallel = config.max_in_flight;
    options.pipeline.refinement.max_iters = config.max_iters;

    std::shared_ptr<llm::Backend> shared;
    if (config.backend == "network") {
        shared = make_backend(config, "network", 0);
    }
    const auto factory = [&](std::uint64_t sample_seed) {
        return shared ? shared : make_backend(config, config.backend, sample_seed);
    };
    const auto report = bench::run_suite(suite, factory, options);

    Run run(args, config);
    run.write(a.out, bench::to_json(report).dump(2) + "\n");
    std::cout << bench::render_table(report);
    run.finish(manifest_for(common, a.out), kExitOk);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// replay
// ---------------------------------------------------------------------------

int run_command(std::vector<std::string> args);

int cmd_replay(const std::string& manifest_path, const std::string& keep_dir) {
    const auto manifest = cli::manifest_from_json(nlohmann::json::parse(cli::read_file(manifest_path)));
    if (manifest.backend == "network") {
        throw ConfigError("replay needs a run made with a scripted backend");
    }
    if (manifest.command_line.empty() || manifest.command_line.front() == "replay") {
        throw ConfigError("manifest does not describe a replayable command");
    }
    for (const auto& [id, checksum] : llm::template_checksums()) {
        const auto it = manifest.templates.find(id);
        if (it == manifest.templates.end() || it->second != checksum) {
            std::cerr << "warning: template " << id << " changed since the recorded run\n";
        }
    }

    const fs::path dir = keep_dir.empty()
                             ? fs::temp_directory_path() / ("scenegen-replay-" + std::to_string(::getpid()))
                             : fs::path(keep_dir);
    fs::create_directories(dir);
    std::map<std::string, std::string> redirect;
    for (std::size_t i = 0; i < manifest.outputs.size(); ++i) {
        const auto& path = manifest.outputs[i].path;
        redirect[path] = (dir / (std::to_string(i) + "_" + fs::path(path).filename().string())).string();
    }
    std::vector<std::string> args;
    for (const auto& token : manifest.command_line) {
        const auto eq = token.find('=');
        if (const auto it = redirect.find(token); it != redirect.end()) {
            args.push_back(it->second);
        } else if (eq != std::string::npos && token.rfind("--", 0) == 0 && redirect.contains(token.substr(eq + 1))) {
            args.push_back(token.substr(0, eq + 1) + redirect.at(token.substr(eq + 1)));
        } else {
            args.push_back(token);
        }
    }
    for (const auto& extra : {std::vector<std::string>{"--seed", std::to_string(manifest.seed)},
                              std::vector<std::string>{"--backend", manifest.backend},
                              std::vector<std::string>{"--manifest", (dir / "replay.manifest.json").string()}}) {
        args.insert(args.end(), extra.begin(), extra.end());
    }

    std::ostringstream sink;
    auto* saved = std::cout.rdbuf(sink.rdbuf());
    int code = kExitError;
    try {
        code = run_command(args);
    } catch (...) {
        std::cout.rdbuf(saved);
        throw;
    }
    std::cout.rdbuf(saved);

    int mismatches = 0;
    if (code != manifest.exit_code) {
        std::cerr << "exit code " << code << " differs from the recorded " << manifest.exit_code << "\n";
        ++mismatches;
    }
    for (const auto& o : manifest.outputs) {
        const auto& replayed = redirect.at(o.path);
        const auto digest = fs::exists(replayed) ? text::sha256_hex(cli::read_file(replayed)) : std::string("missing");
        const bool same = digest == o.sha256;
        mismatches += same ? 0 : 1;
        std::cout << (same ? "identical " : "DIFFERS   ") << o.path << "\n";
    }
    if (keep_dir.empty()) {
        fs::remove_all(dir);
    }
    return mismatches == 0 ? kExitOk : kExitFailed;
}

// ---------------------------------------------------------------------------
// dispatch
// ---------------------------------------------------------------------------

int run_command(std::vector<std::string> args) {
    CLI::App app{"Generate industrial robotic scenes from natural-language descriptions", "scenegen"};
    app.footer(kHelpFooter);
    app.require_subcommand(1);
    app.set_version_flag("--version", "scenegen 1.0 (scene schema " + std::string(cli::kSceneSchemaVersion) + ")");

    Common common;

    GenerateArgs gen;
    auto* generate = app.add_subcommand("generate", "Run the full pipeline on a description and write the scene");
    generate->add_option("description", gen.description, "Scene description");
    generate->add_option("--file", gen.file, "Read the description from a file")->check(CLI::ExistingFile);
    auto* out_opt = generate->add_option("--out", gen.out, "Scene JSON path")->capture_default_str();
    generate->add_option("--emit-cs", gen.emit_cs, "Also write the C# scene program");
    generate->add_option("--emit-svg", gen.emit_svg, "Also write an SVG plan view");
    generate->add_option("--stages", gen.stages, "Write intermediate results of every stage as JSON");
    generate->add_option("--codegen", gen.codegen, "C# emission mode")
        ->check(CLI::IsMember({"deterministic", "llm"}))
        ->capture_default_str();
    generate->add_option("--max-iters", gen.max_iters, "Assignment answers verified before giving up")
        ->check(CLI::Range(1, 100));
    add_common(generate, common);
    add_manifest_option(generate, common);

    std::string verify_path;
    auto* verify = app.add_subcommand("verify", "Check a scene JSON against its own description");
    verify->add_option("scene", verify_path, "Scene JSON")->required()->check(CLI::ExistingFile);

    RenderArgs ren;
    auto* render = app.add_subcommand("render", "Render a scene JSON as SVG and/or C#");
    render->add_option("scene", ren.scene, "Scene JSON")->required()->check(CLI::ExistingFile);
    render->add_option("--svg", ren.svg, "SVG output path");
    render->add_option("--cs", ren.cs, "C# output path");
    render->add_option("--scale", ren.scale, "Pixels per millimetre")->check(CLI::PositiveNumber)->capture_default_str();
    add_common(render, common);
    add_manifest_option(render, common);

    EvolveArgs evo;
    auto* evolve_cmd = app.add_subcommand("evolve", "Grow a description pool from seed descriptions");
    evolve_cmd->add_option("--seeds", evo.seeds, "Seed descriptions (JSONL with a \"text\" field)")
        ->required()
        ->check(CLI::ExistingFile);
    evolve_cmd->add_option("--target", evo.target, "Pool size to reach")->capture_default_str();
    evolve_cmd->add_option("--max-iterations", evo.max_iterations, "Iteration budget (0: 20 x target)");
    evolve_cmd->add_option("--out", evo.out, "Pool JSONL path")->required();
    add_common(evolve_cmd, common);
    add_manifest_option(evolve_cmd, common);

    CollectArgs col;
    auto* collect = app.add_subcommand("collect", "Collect assign/verify/reassign trajectories for a pool");
    collect->add_option("--pool", col.pool, "Pool JSONL")->required()->check(CLI::ExistingFile);
    collect->add_option("--out", col.out, "Trajectory JSONL path")->required();
    collect->add_option("--weak-backend", col.weak_backend, "Backend producing first attempts")
        ->check(CLI::IsMember({"scripted", "scripted-weak", "network"}))
        ->capture_default_str();
    collect->add_option("--weak-model", col.weak_model, "Model name for a network weak backend");
    collect->add_option("--validation-fraction", col.validation_fraction, "Share of descriptions held out")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    add_common(collect, common);
    add_manifest_option(collect, common);

    BenchArgs ben;
    auto* bench_cmd = app.add_subcommand("bench", "Run a benchmark suite and report pass@k per category");
    bench_cmd->add_option("--suite", ben.suite, "Suite JSONL")->required()->check(CLI::ExistingFile);
    bench_cmd->add_option("--samples", ben.samples, "Samples per case")->check(CLI::Range(1, 100))->capture_default_str();
    bench_cmd->add_option("--k", ben.k, "k of pass@k")->check(CLI::Range(1, 100))->capture_default_str();
    bench_cmd->add_option("--out", ben.out, "Report JSON path")->required();
    add_common(bench_cmd, common);
    add_manifest_option(bench_cmd, common);

    std::string replay_path;
    std::string replay_keep;
    auto* replay = app.add_subcommand("replay", "Rerun a recorded command and compare its outputs");
    replay->add_option("manifest", replay_path, "Run manifest")->required()->check(CLI::ExistingFile);
    replay->add_option("--keep", replay_keep, "Keep replayed outputs in this directory");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitError;
    }

    if (*generate) {
        return cmd_generate(gen, common, args, out_opt->count() > 0);
    }
    if (*verify) {
        return cmd_verify(verify_path);
    }
    if (*render) {
        return cmd_render(ren, common, args);
    }
    if (*evolve_cmd) {
        return cmd_evolve(evo, common, args);
    }
    if (*collect) {
        return cmd_collect(col, common, args);
    }
    if (*bench_cmd) {
        return cmd_bench(ben, common, args);
    }
    return cmd_replay(replay_path, replay_keep);
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run_command(std::vector<std::string>(argv + 1, argv + argc));
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
}
