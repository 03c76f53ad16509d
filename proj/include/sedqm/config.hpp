#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "sedqm/field.hpp"
#include "sedqm/params.hpp"

namespace sedqm {

struct ExperimentInfo {
    std::string name;
    std::string summary;
};

const std::vector<ExperimentInfo>& experiments();

struct PotentialSpec {
    std::string kind = "harmonic";  // harmonic | quartic | free | box
    double omega = 1.0;             // harmonic
    double a = 0.0;                 // quartic a x^2 + b x^4
    double b = 1.0;
    double length = 1.0;            // box width, walls at 0 and length

    Potential build(double mass) const;
};

struct GridSpec {
    double min = -1.0;
    double max = 1.0;
    std::size_t n = 3;

    Grid1D grid() const { return Grid1D::linspace(min, max, n); }
};

struct StateSpec {
    std::string kind = "coherent";  // coherent | eigenstate
    double x0 = 1.5;
    double p0 = 0.5;
    unsigned n = 0;
};

struct RunConfig {
    std::string experiment;
    std::uint64_t seed = 1;
    unsigned threads = 0;
    std::string output_dir = "sedqm_out";

    std::string preset = "dimensionless-ho";
    PhysicalParams params;
    bool coupling_given = false;

    PotentialSpec potential;
    bool field_enabled = true;
    SpectralConfig field;

    GridSpec x{-3.0, 3.0, 121};
    GridSpec p{-6.0, 6.0, 121};
    double z_step = 0.25;
    std::size_t z_half = 30;

    std::size_t members = 2000;
    std::size_t control_members = 256;

    double t_final = 0.0;          // 0: experiment default
    double dt = 0.0;               // 0: experiment default
    double window_start = 0.0;     // 0: experiment default
    double snapshot_interval = 0.0;  // 0: a tenth of a relaxation time
    double control_span = 0.0;     // 0: three relaxation times

    StateSpec state;
    std::vector<std::size_t> refinement{64, 128, 256};

    double tol = 1e-7;             // variational eigen-residual
    std::size_t trials = 50;

    /// Relaxation time 1 / (tau w0^2) for the harmonic reference frequency.
    double relaxation_time() const;
    nlohmann::json to_json() const;
};

/// Defaults of a named experiment; throws Config for unknown names.
RunConfig default_config(std::string_view experiment);

/// Overlays `j` on the defaults of its experiment (or of `experiment`, which
/// takes precedence when non-empty) and validates.  Errors name the field.
RunConfig parse_config(const nlohmann::json& j, std::string_view experiment = {});

/// Checks every precondition that does not need a computation.
void validate_config(RunConfig& c);

}  // namespace sedqm
