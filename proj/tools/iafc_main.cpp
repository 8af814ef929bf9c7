#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "iafc/commands.hpp"

int main(int argc, char** argv)
{
    CLI::App app{"Intra-atomic frequency comb memory simulator"};
    app.set_version_flag("--version", iafc::version);
    app.require_subcommand(1, 1);
    app.fallthrough();

    std::string config_path;
    std::vector<std::string> overrides;
    std::string seed, trials, out_dir, threads;
    bool plot = false;
    app.add_option("--config", config_path, "key = value configuration file");
    app.add_option("--seed", seed, "master seed for all random streams");
    app.add_option("--trials", trials, "Monte-Carlo trials per ensemble");
    app.add_option("--out-dir", out_dir, "directory for output files");
    app.add_option("--threads", threads, "worker threads (0 = all cores)");
    app.add_flag("--plot", plot, "also write SVG plots");
    app.add_option("--set", overrides, "override a config key, e.g. --set total_depth=20")->take_all();

    const std::vector<std::pair<std::string, std::string>> commands = {
        {"simulate", "single propagation: traces, spectrum and first-echo efficiency"},
        {"sweep-spacing", "efficiency vs random comb-spacing strength, one curve per finesse"},
        {"sweep-depth", "efficiency vs random optical-depth strength, one curve per finesse"},
        {"sweep-length", "efficiency vs propagation length"},
        {"fit-backward", "fit a length sweep to the AFC model and estimate backward efficiency"},
        {"thermal", "efficiency of Boltzmann-weighted combs at several temperatures"},
        {"analytic-table", "closed-form forward/backward efficiencies"},
    };
    for (const auto& [name, help] : commands) app.add_subcommand(name, help);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : iafc::cli::invalid_input;
    }

    iafc::RunConfig config;
    try {
        if (!config_path.empty()) iafc::load_config_file(config_path, config);
        for (const auto& kv : overrides) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) throw iafc::ValidationError("--set expects key=value, got '" + kv + "'");
            config.set(kv.substr(0, eq), kv.substr(eq + 1));
        }
        if (!seed.empty()) config.set("seed", seed);
        if (!trials.empty()) config.set("trials", trials);
        if (!out_dir.empty()) config.set("out_dir", out_dir);
        if (!threads.empty()) config.set("threads", threads);
        if (plot) config.plot = true;
    } catch (const iafc::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return iafc::cli::invalid_input;
    }

    const auto command = app.get_subcommands().front()->get_name();
    return iafc::cli::run(command, config, std::cout, std::cerr);
}
