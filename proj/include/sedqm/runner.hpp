#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "sedqm/config.hpp"

namespace sedqm {

struct Check {
    std::string name;
    double value;
    double threshold;
    std::string relation;  // "<=" or ">="
    bool pass;
};

struct RunResult {
    nlohmann::json manifest;
    std::vector<Check> checks;
    std::filesystem::path directory;
    /// 0 pass, 1 acceptance failure, 3 stage failure.
    int exit_code = 0;
};

/// Runs one experiment into config.output_dir/<experiment>.  The manifest
/// (manifest.json) is written even when a stage throws; it names the stage,
/// lists every output file, and keeps wall-clock times under "timing" so the
/// rest of it is reproducible byte for byte.
RunResult run_experiment(const RunConfig& config);

}  // namespace sedqm
