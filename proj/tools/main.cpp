#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "config.hpp"
#include "experiments.hpp"

namespace {

constexpr int kConfigError = 2;
constexpr int kRuntimeError = 3;

struct Flags {
    std::string config_path;
    std::string experiment;
    int threads = -1;
    std::vector<std::pair<std::string, std::string>> overrides;
    std::vector<std::pair<CLI::Option*, std::string>> slots;  // option, config key
    std::vector<std::string> values;
};

void add_shared(CLI::App* cmd, Flags& f) {
    cmd->add_option("--config", f.config_path, "config file (key = value lines)");
    cmd->add_option("--threads", f.threads, "worker threads (default: LORENTZ_THREADS or all cores)");
    static const std::vector<std::pair<std::string, std::string>> keys{
        {"--out", "out_dir"},     {"--seed", "seed"},     {"--epsilon", "epsilon"}, {"--nu", "nu"},
        {"--phi", "phi"},         {"--process", "process"}, {"--t-max", "t_max"},   {"--n-paths", "n_paths"}};
    f.values.reserve(64);
    for (const auto& [flag, key] : keys) {
        f.values.emplace_back();
        CLI::Option* opt = cmd->add_option(flag, f.values.back(), "overrides '" + key + "'");
        f.slots.emplace_back(opt, key);
    }
}

void error_record(const std::string& kind, const std::string& message, nlohmann::ordered_json extra = {}) {
    nlohmann::ordered_json j;
    j["error"] = kind;
    j["message"] = message;
    for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
    std::cerr << j.dump() << std::endl;
}

int resolve_threads(int flag) {
    if (flag >= 0) return flag;
    if (const char* env = std::getenv("LORENTZ_THREADS")) {
        try {
            std::size_t pos = 0;
            const int n = std::stoi(env, &pos);
            if (pos == std::string(env).size() && n >= 0) return n;
        } catch (const std::exception&) {
        }
        throw lorentz::cli::ValidationError({std::string("LORENTZ_THREADS: not a non-negative integer: '") + env + "'"});
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    using namespace lorentz::cli;
    CLI::App app{"Lorentz gas experiment runner"};
    app.set_version_flag("--version", artifact_version());
    app.require_subcommand(1);

    Flags sim_flags;
    Flags exp_flags;
    CLI::App* sim = app.add_subcommand("simulate", "simulate trajectories and write them as CSV");
    add_shared(sim, sim_flags);
    CLI::App* exp = app.add_subcommand("experiment", "run a named experiment");
    exp->add_option("name", exp_flags.experiment,
                    "free-path | marginals | loops | chaos | oracle | coupling | simulate")
        ->required();
    add_shared(exp, exp_flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        error_record("config", e.what());
        return kConfigError;
    }

    Flags& f = sim->parsed() ? sim_flags : exp_flags;
    ExperimentConfig config;
    int threads = 0;
    try {
        RawDocument doc;
        if (!f.config_path.empty()) {
            std::ifstream in(f.config_path, std::ios::binary);
            if (!in) throw ValidationError({"config: cannot read '" + f.config_path + "'"});
            std::ostringstream text;
            text << in.rdbuf();
            doc = parse_document(text.str());
        }
        std::vector<std::pair<std::string, std::string>> overrides;
        if (sim->parsed()) overrides.emplace_back("experiment", "simulate");
        else overrides.emplace_back("experiment", f.experiment);
        for (std::size_t i = 0; i < f.slots.size(); ++i) {
            if (f.slots[i].first->count() > 0) overrides.emplace_back(f.slots[i].second, f.values[i]);
        }
        apply_overrides(doc, overrides);
        config = build_config(doc);
        threads = resolve_threads(f.threads);
    } catch (const ParseError& e) {
        error_record("config", e.what(), {{"line", e.line()}, {"column", e.column()}});
        return kConfigError;
    } catch (const ValidationError& e) {
        error_record("config", e.what(), {{"violations", e.violations()}});
        return kConfigError;
    }

    try {
        write_outputs(config, run_experiment(config, threads));
    } catch (const std::exception& e) {
        error_record("runtime", e.what());
        return kRuntimeError;
    }
    return 0;
}
