#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "sedqm/field.hpp"
#include "sedqm/numerics.hpp"
#include "sedqm/params.hpp"

namespace sedqm {

struct ParticleState {
    double x = 0.0;
    double p = 0.0;
    double t = 0.0;
};

/// Trajectories sharing parameters, potential and mode set.  Member i is
/// driven by sample_realization(modes, i); a null mode set switches the
/// field off.
struct Ensemble {
    std::vector<ParticleState> members;
    PhysicalParams params;
    Potential potential = Potential::free();
    std::shared_ptr<const ModeSet> modes;

    std::size_t size() const { return members.size(); }
    double time() const { return members.empty() ? 0.0 : members.front().t; }
    FieldRealization realization(std::size_t member) const;
};

struct Snapshot {
    double t = 0.0;
    std::vector<double> x;
    std::vector<double> p;
};

/// Right-hand side force f(x) + (tau/m) p f'(x) + kappa E.
double total_force(const ForceSample& f, double p, double field, const PhysicalParams& params);

/// One RK4 step with the field values at t, t + dt/2 and t + dt supplied.
ParticleState rk4_step(const ParticleState& s, double dt, double e0, double e_half, double e1,
                       const Potential& potential, const PhysicalParams& params);

/// Largest step allowed for a band whose top is omega_max: (2 pi / omega_max) / 20.
double max_time_step(double omega_max);

/// Default production step (2 pi / omega_max) / 160.  RK4 loses (w dt)^6 / 72
/// of the oscillator energy per step, so 100 periods at this step stay below
/// 1e-6 relative drift for any w <= omega_max.
double desk_time_step(double omega_max);

ParticleState step_trajectory(const ParticleState& s, const FieldRealization& r, double dt,
                              const Potential& potential, const PhysicalParams& params);
/// Field-free step (E = 0).
ParticleState step_trajectory(const ParticleState& s, double dt, const Potential& potential,
                              const PhysicalParams& params);

struct EvolveOptions {
    unsigned threads = 0;  // 0: hardware concurrency
};

/// Evolves every member to t_final and returns the states at the requested
/// times.  Between consecutive stops the step is shrunk uniformly so that
/// every stop is hit exactly; results do not depend on the thread count.
std::vector<Snapshot> evolve_ensemble(Ensemble& e, double t_final, double dt, std::span<const double> snapshot_times,
                                      const EvolveOptions& options = {});

double mean_energy(const Ensemble& e);
double mean_energy(const Snapshot& s, const Potential& potential, const PhysicalParams& params);

struct BalanceReport {
    double mean_energy = 0.0;
    double energy_slope = 0.0;  // d<H>/dt over the window
    double energy_slope_std_error = 0.0;
    double dissipated_power = 0.0;  // (tau/m^2) <f' p^2>, negative for confining V
    double absorbed_power = 0.0;
    double imbalance = 0.0;
};

BalanceReport balance_report(std::span<const Snapshot> window, const Potential& potential,
                             const PhysicalParams& params, double epsilon = 1e-300);

/// Least-squares decay rate -d ln<H>/dt over the snapshots.
double fit_decay_rate(std::span<const Snapshot> snapshots, const Potential& potential,
                      const PhysicalParams& params);

struct CalibrationOptions {
    std::size_t min_members = 2000;
    double drift_threshold = 0.05;
    double fit_rel = 0.1;  // fit where rho > fit_rel * max(rho)
    /// Kernel width in x; 0 selects bandwidth_scale times the pooled std of x.
    double bandwidth = 0.0;
    double bandwidth_scale = 0.5;
    std::size_t bootstrap = 40;
    std::uint64_t seed = 7;
};

struct BetaEstimate {
    double beta = 0.0;
    double std_error = 0.0;
    double beta_squared = 0.0;
    double bandwidth = 0.0;
    std::size_t fit_points = 0;
    /// RMS over the fit region of sigma_p^2 + beta^2 d^2 ln rho, and the RMS
    /// of its bootstrap standard error (the Monte-Carlo noise floor).
    double residual_rms = 0.0;
    double noise_floor = 0.0;
    std::vector<double> x;
    std::vector<double> var_p;
    std::vector<double> predicted_var;
};

/// Fits sigma_p^2(x) = -beta^2 d^2 ln rho over the central region of the
/// pooled stationary samples.  sigma_p^2 is the residual variance about a
/// local-linear conditional mean, d^2 ln rho the local-likelihood estimate,
/// both with the same Gaussian kernel in x.  Snapshots must hold the same members in the
/// same order.
BetaEstimate calibrate_beta(std::span<const Snapshot> snapshots, const Grid1D& grid,
                            const Potential& potential, const PhysicalParams& params,
                            const CalibrationOptions& options = {});

}  // namespace sedqm
