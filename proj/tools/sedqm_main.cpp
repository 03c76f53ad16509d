#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

#include "sedqm/config.hpp"
#include "sedqm/io.hpp"
#include "sedqm/runner.hpp"

using namespace sedqm;

int main(int argc, char** argv) {
    CLI::App app{"sedqm: stochastic-electrodynamics and quantum-dynamics experiments"};
    std::string config_path, out_dir, experiment;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    bool list = false;
    app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
    app.add_option("--out", out_dir, "output directory (overrides SEDQM_OUTPUT_DIR and the config)");
    auto* seed_opt = app.add_option("--seed", seed, "global seed (overrides the config)");
    app.add_option("--experiment", experiment, "experiment name (overrides the config)");
    auto* threads_opt = app.add_option("--threads", threads, "worker thread cap (0: all cores)");
    app.add_flag("--list-experiments", list, "print the experiment names and exit");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    if (list) {
        for (const auto& e : experiments()) std::cout << e.name << "\t" << e.summary << "\n";
        return 0;
    }

    RunConfig cfg;
    try {
        nlohmann::json j = nlohmann::json::object();
        if (!config_path.empty()) {
            try {
                j = nlohmann::json::parse(io::read_text(config_path));
            } catch (const nlohmann::json::parse_error& e) {
                throw Error(ErrorCode::Config, "config: " + std::string(e.what()));
            }
        }
        cfg = parse_config(j, experiment);
        if (seed_opt->count()) cfg.seed = seed;
        if (threads_opt->count()) cfg.threads = threads;
        if (const char* env = std::getenv("SEDQM_OUTPUT_DIR"); env && *env) cfg.output_dir = env;
        if (!out_dir.empty()) cfg.output_dir = out_dir;
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }

    const auto result = run_experiment(cfg);
    for (const auto& c : result.checks)
        std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << " " << io::format_double(c.value) << " " << c.relation
                  << " " << io::format_double(c.threshold) << "\n";
    if (result.exit_code == 3)
        std::cerr << "stage '" << result.manifest["failed_stage"].get<std::string>()
                  << "' failed: " << result.manifest["error"].get<std::string>() << "\n";
    std::cout << cfg.experiment << ": " << result.manifest["status"].get<std::string>() << " ("
              << (result.directory / "manifest.json").string() << ")\n";
    return result.exit_code;
}
