// filmagent: produce annotated film scripts from a one-line idea, lint them
// against the stage environment, and render storyboards.
//
// Exit codes: 0 success, 1 domain error, 2 input/parse error.
#include "filmagent/errors.hpp"
#include "filmagent/workflow.hpp"

#include <array>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

#include <CLI11.hpp>

namespace fs = std::filesystem;
using filmagent::Error;
using ojson = nlohmann::ordered_json;

namespace {

struct GlobalOptions {
    bool quiet = false;
    bool json = false;
};

std::string read_file_or_exit(const fs::path& path) {
    std::ifstream in(path);
    if (!in.is_open()) {
        std::cerr << "cannot open " << path << "\n";
        std::exit(2);
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

/// Optional JSON config file; CLI flags override whatever it sets.
void apply_config_file(const fs::path& path, filmagent::WorkflowConfig& config) {
    const ojson doc = ojson::parse(read_file_or_exit(path), nullptr, false);
    if (doc.is_discarded()) {
        std::cerr << "config file is not valid JSON: " << path << "\n";
        std::exit(2);
    }
    if (doc.contains("environment")) config.environment_path = doc["environment"].get<std::string>();
    if (doc.contains("templates")) config.template_dir = doc["templates"].get<std::string>();
    if (doc.contains("run_dir")) config.run_dir = doc["run_dir"].get<std::string>();
    if (doc.contains("model")) config.provider.model_name = doc["model"].get<std::string>();
    if (doc.contains("base_url")) config.provider.base_url = doc["base_url"].get<std::string>();
    if (doc.contains("temperature")) config.provider.temperature = doc["temperature"].get<double>();
    if (doc.contains("api_key_env_var"))
        config.provider.api_key_env_var = doc["api_key_env_var"].get<std::string>();
    if (doc.contains("ccv_max_rounds")) config.ccv_max_rounds = doc["ccv_max_rounds"].get<int>();
    if (doc.contains("debate_rounds")) config.debate_rounds = doc["debate_rounds"].get<int>();
    if (doc.contains("strict_counts")) config.strict_counts = doc["strict_counts"].get<bool>();
    if (doc.contains("compat_loop_guard"))
        config.literal_loop_guard = doc["compat_loop_guard"].get<bool>();
    if (doc.contains("words_per_second"))
        config.durations.words_per_second = doc["words_per_second"].get<double>();
    if (doc.contains("floor_seconds"))
        config.durations.floor_seconds = doc["floor_seconds"].get<double>();
    if (doc.contains("move_seconds"))
        config.durations.move_seconds = doc["move_seconds"].get<double>();
}

int cmd_produce(const std::string& topic, filmagent::WorkflowConfig config,
                const std::string& replay_dir, const std::string& record_dir,
                const std::string& resume_dir, const GlobalOptions& options) {
    const bool resuming = !resume_dir.empty();
    if (resuming) config.run_dir = resume_dir;
    if (config.run_dir.empty()) {
        std::string slug;
        for (char c : topic)
            slug += std::isalnum(static_cast<unsigned char>(c)) ? c : '-';
        config.run_dir = fs::path("runs") / slug.substr(0, 48);
    }

    // setup failures (missing fixtures, unreadable data files) are input errors
    filmagent::Transcript transcript;
    std::unique_ptr<filmagent::ChatProvider> provider;
    std::unique_ptr<filmagent::FilmRun> run;
    try {
        fs::create_directories(config.run_dir);
        const fs::path transcript_path = config.run_dir / "transcript.jsonl";
        std::map<std::string, std::size_t> consumed;
        if (resuming && fs::exists(transcript_path)) {
            for (const auto& record : filmagent::Transcript::load_jsonl(transcript_path))
                transcript.append(record.agent_tag, record.request, record.response,
                                  record.latency_seconds);
            consumed = filmagent::consumed_calls_per_tag(transcript_path);
        }
        transcript.attach_sink(transcript_path, /*truncate=*/!resuming);

        if (!replay_dir.empty()) {
            fs::path fixture = replay_dir;
            if (fs::is_directory(fixture)) fixture /= "transcript.jsonl";
            auto replay = std::make_unique<filmagent::ReplayProvider>(
                filmagent::Transcript::load_jsonl(fixture), transcript);
            replay->fast_forward(consumed);
            provider = std::move(replay);
        } else {
            provider =
                std::make_unique<filmagent::HttpChatProvider>(config.provider, transcript);
        }
        run = std::make_unique<filmagent::FilmRun>(config, *provider, transcript);
    } catch (const Error& e) {
        std::cerr << "produce setup failed [" << e.kind() << "]: " << e.what() << "\n";
        return 2;
    }

    try {
        if (!options.quiet)
            run->log = [](const std::string& message) { std::cerr << message << "\n"; };
        const filmagent::RunState state = run->run_all(topic, resuming);

        if (!record_dir.empty()) {
            fs::create_directories(record_dir);
            transcript.save(fs::path(record_dir) / "transcript.jsonl");
        }
        for (const auto& warning : state.warnings)
            if (!options.quiet) std::cerr << "warning: " << warning << "\n";
        if (options.json) {
            ojson out;
            out["run_dir"] = config.run_dir.string();
            out["warnings"] = state.warnings;
            std::cout << out.dump() << "\n";
        } else {
            std::cout << config.run_dir.string() << "\n";
        }
        return 0;
    } catch (const Error& e) {
        static const std::array<filmagent::Stage, 6> order = {
            filmagent::Stage::Idea,    filmagent::Stage::Script1,
            filmagent::Stage::Script2, filmagent::Stage::Script3,
            filmagent::Stage::Cinema,  filmagent::Stage::Assembled};
        std::string failing = "idea";
        if (run->state().completed) {
            const auto done = static_cast<std::size_t>(*run->state().completed);
            failing = done + 1 < order.size() ? to_string(order[done + 1]) : "assembled";
        }
        std::cerr << "produce failed during stage '" << failing << "' [" << e.kind()
                  << "]: " << e.what() << "\n";
        std::cerr << "partial artifacts retained in " << config.run_dir.string() << "\n";
        return 1;
    }
}

int cmd_validate(const fs::path& script_path, const fs::path& env_path,
                 const GlobalOptions& options) {
    filmagent::AnnotatedScript script;
    filmagent::EnvironmentSpec env;
    try {
        script = filmagent::parse_script(read_file_or_exit(script_path));
        env = filmagent::load_environment(env_path);
    } catch (const Error& e) {
        std::cerr << "parse failure [" << e.kind() << "]: " << e.what() << "\n";
        return 2;
    }
    const auto diagnostics = filmagent::validate(script, env);
    bool any_error = false;
    for (const auto& d : diagnostics) {
        if (d.severity == filmagent::Severity::Error) any_error = true;
        if (!options.quiet) std::cout << filmagent::diagnostic_to_json(d).dump() << "\n";
    }
    return any_error ? 1 : 0;
}

int cmd_render(const fs::path& script_path, const fs::path& env_path, const fs::path& out_path,
               const filmagent::DurationConfig& durations, const GlobalOptions& options) {
    filmagent::AnnotatedScript script;
    filmagent::EnvironmentSpec env;
    try {
        script = filmagent::parse_script(read_file_or_exit(script_path));
        env = filmagent::load_environment(env_path);
    } catch (const Error& e) {
        std::cerr << "parse failure [" << e.kind() << "]: " << e.what() << "\n";
        return 2;
    }
    const auto diagnostics = filmagent::validate(script, env);
    std::vector<filmagent::Diagnostic> blocking;
    for (const auto& d : diagnostics)
        if (d.severity == filmagent::Severity::Error) blocking.push_back(d);
    if (!blocking.empty()) {
        for (const auto& d : blocking)
            std::cerr << filmagent::diagnostic_to_json(d).dump() << "\n";
        std::cerr << "script fails validation; storyboard not written\n";
        return 1;
    }
    const std::string board = filmagent::render_storyboard(script, durations);
    if (out_path.empty()) {
        std::cout << board;
    } else {
        std::ofstream out(out_path, std::ios::trunc);
        out << board;
        if (!options.quiet) std::cout << out_path.string() << "\n";
    }
    return 0;
}

int cmd_env(const std::string& action, const fs::path& env_path, bool strict,
            const GlobalOptions& options) {
    filmagent::EnvironmentSpec env;
    try {
        env = filmagent::load_environment(env_path, strict);
    } catch (const Error& e) {
        std::cerr << "environment load failure [" << e.kind() << "]: " << e.what() << "\n";
        return 2;
    }
    const auto positions = env.position_count();
    const auto sittable = env.sittable_count();
    if (action == "stats") {
        if (options.json) {
            ojson out;
            out["locations"] = env.locations.size();
            out["positions"] = positions;
            out["standing"] = positions - sittable;
            out["sitting"] = sittable;
            out["actions"] = env.actions.size();
            out["shots"] = env.shots.size();
            ojson caps = ojson::object();
            for (const auto& loc : env.locations) caps[loc.name] = loc.capacity;
            out["capacities"] = caps;
            std::cout << out.dump() << "\n";
        } else {
            std::cout << env.locations.size() << " locations, " << positions << " positions ("
                      << (positions - sittable) << " standing / " << sittable << " sitting), "
                      << env.actions.size() << " actions, " << env.shots.size() << " shots\n";
            for (const auto& loc : env.locations)
                std::cout << "  " << loc.name << " (capacity " << loc.capacity << ", "
                          << loc.positions.size() << " positions)\n";
        }
    } else { // list
        if (options.json) {
            ojson out;
            ojson locations = ojson::array();
            for (const auto& loc : env.locations)
                locations.push_back({{"name", loc.name}, {"capacity", loc.capacity}});
            out["locations"] = locations;
            ojson actions = ojson::array();
            for (const auto& act : env.actions) actions.push_back(act.canonical_name);
            out["actions"] = actions;
            ojson shots = ojson::array();
            for (const auto& shot : env.shots) shots.push_back(shot.canonical_name);
            out["shots"] = shots;
            std::cout << out.dump() << "\n";
        } else {
            std::cout << "Locations:\n";
            for (const auto& loc : env.locations)
                std::cout << "  " << loc.name << " (capacity " << loc.capacity << ")\n";
            std::cout << "Actions:\n";
            for (const auto& act : env.actions)
                std::cout << "  " << act.canonical_name << " ["
                          << filmagent::to_string(act.required_state) << "]\n";
            std::cout << "Shots:\n";
            for (const auto& shot : env.shots)
                std::cout << "  " << shot.canonical_name << " ["
                          << filmagent::to_string(shot.kind) << "]\n";
        }
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"filmagent: multi-agent film script production"};
    app.require_subcommand(1);

    GlobalOptions options;
    app.add_flag("--quiet", options.quiet, "suppress per-finding / progress output");
    app.add_flag("--json", options.json, "machine-readable output");

    filmagent::WorkflowConfig config;
    config.environment_path = "data/environment/full.json";
    config.template_dir = "data/prompts";

    std::string config_file;
    app.add_option("--config", config_file, "JSON config file; flags override it");

    // produce
    auto* produce = app.add_subcommand("produce", "run the full production pipeline");
    std::string topic, replay_dir, record_dir, resume_dir, out_dir, env_override, tpl_override;
    produce->add_option("--topic", topic, "one-line story idea");
    produce->add_option("--replay", replay_dir, "replay fixture (dir or transcript.jsonl)");
    produce->add_option("--record", record_dir, "copy the run transcript here as a fixture");
    produce->add_option("--resume", resume_dir, "existing run directory to continue");
    produce->add_option("--out", out_dir, "run directory (default runs/<topic-slug>)");
    produce->add_option("--env", env_override, "environment file");
    produce->add_option("--templates", tpl_override, "template directory");
    produce->add_option("--model", config.provider.model_name, "provider model name");
    produce->add_option("--base-url", config.provider.base_url, "provider base URL");
    produce->add_option("--ccv-max", config.ccv_max_rounds, "critique cycle cap")
        ->check(CLI::PositiveNumber);
    produce->add_option("--debate-rounds", config.debate_rounds, "cinematography debate rounds")
        ->check(CLI::NonNegativeNumber);
    produce->add_flag("--strict-counts", config.strict_counts,
                      "enforce the full catalog sizes on load");
    produce->add_flag("--compat-loop-guard", config.literal_loop_guard,
                      "run the critique loop body an extra time (m <= M guard)");

    // validate
    auto* validate = app.add_subcommand("validate", "lint a script against the environment");
    std::string validate_script, validate_env;
    validate->add_option("script", validate_script, "script JSON file")->required();
    validate->add_option("--env", validate_env, "environment file");

    // render
    auto* render = app.add_subcommand("render", "write a storyboard for a valid script");
    std::string render_script, render_env, render_out;
    filmagent::DurationConfig durations;
    render->add_option("script", render_script, "script JSON file")->required();
    render->add_option("--env", render_env, "environment file");
    render->add_option("--out", render_out, "output path (stdout when omitted)");
    render->add_option("--rate", durations.words_per_second, "speech rate in words per second")
        ->check(CLI::PositiveNumber);
    render->add_option("--floor", durations.floor_seconds, "minimum line duration in seconds")
        ->check(CLI::PositiveNumber);
    render->add_option("--move-duration", durations.move_seconds, "move duration in seconds")
        ->check(CLI::PositiveNumber);

    // env
    auto* envcmd = app.add_subcommand("env", "inspect an environment file");
    std::string env_action = "stats", env_file;
    bool env_strict = false;
    envcmd->add_option("action", env_action, "list or stats")
        ->check(CLI::IsMember({"list", "stats"}));
    envcmd->add_option("path", env_file, "environment file");
    envcmd->add_flag("--strict-counts", env_strict, "enforce the full catalog sizes");

    app.fallthrough();
    for (auto* sub : app.get_subcommands({})) sub->fallthrough();
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2; // bad usage is an input error
    }

    if (!config_file.empty()) apply_config_file(config_file, config);
    if (!env_override.empty()) config.environment_path = env_override;
    if (!tpl_override.empty()) config.template_dir = tpl_override;
    if (!out_dir.empty()) config.run_dir = out_dir;
    config.durations = durations;

    try {
        if (produce->parsed()) {
            if (topic.empty() && resume_dir.empty()) {
                std::cerr << "produce needs --topic (or --resume)\n";
                return 2;
            }
            return cmd_produce(topic, config, replay_dir, record_dir, resume_dir, options);
        }
        if (validate->parsed())
            return cmd_validate(validate_script,
                                validate_env.empty() ? config.environment_path : fs::path(validate_env),
                                options);
        if (render->parsed())
            return cmd_render(render_script,
                              render_env.empty() ? config.environment_path : fs::path(render_env),
                              render_out, durations, options);
        if (envcmd->parsed())
            return cmd_env(env_action,
                           env_file.empty() ? config.environment_path : fs::path(env_file),
                           env_strict, options);
    } catch (const Error& e) {
        std::cerr << "[" << e.kind() << "] " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "unexpected failure: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
