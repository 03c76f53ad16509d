#pragma once

#include <span>
#include <vector>

#include "sedqm/numerics.hpp"
#include "sedqm/params.hpp"

namespace sedqm {

/// Density and phase of the reduced description; psi = sqrt(rho) exp(i S)
/// with flow velocity v = (2 beta / m) dS/dx.
struct HydroState {
    Grid1D grid;
    std::vector<double> rho;
    std::vector<double> phase;  // S
    double t = 0.0;
};

/// Q(x) = -(2 beta^2 / m) (1/sqrt rho) d^2 sqrt rho, evaluated in the
/// equivalent form -(beta^2/m) (ln rho)'' - (beta^2 / 2m) ((ln rho)')^2 with
/// sixth-order differences per supported segment.  NaN off the mask.
std::vector<double> quantum_potential(const Grid1D& grid, std::span<const double> rho, double beta, double mass,
                                      double mask_rel = 1e-3);

/// Quantum potential of particle 1 for rho = rho1(x1) rho2(x2) rho12(x1, x2);
/// rho12 is row-major in x1 (index i1 * n2 + i2).  rho2 enters only through
/// the shape check since the x1-derivatives of ln rho2 vanish.
std::vector<double> quantum_potential_two_particle(const Grid1D& x1, const Grid1D& x2, std::span<const double> rho1,
                                                   std::span<const double> rho2, std::span<const double> rho12,
                                                   double beta, double mass, double mask_rel = 1e-3);

std::vector<double> flow_velocity(const Grid1D& grid, std::span<const double> phase, double beta, double mass);

struct MadelungOptions {
    double mask_rel = 1e-3;
    /// Relative density below which an interior minimum counts as a node.
    double node_rel = 1e-3;
};

/// Explicit RK4 integrator for the continuity and quantum Hamilton-Jacobi
/// pair.  The state is carried as (ln rho, S) with fourth-order centred
/// differences.  Only the supported core (rho > mask_rel * max rho) is
/// evolved: in the log form relative perturbations grow at rate ~ |u| k
/// where rho is small, so outside the core ln rho and S are continued
/// quadratically from the core edge (ln rho never curving upward).  The
/// continuation is exact for Gaussian tails.
class MadelungIntegrator {
public:
    MadelungIntegrator(const HydroState& initial, const Potential& potential, const PhysicalParams& params,
                       const MadelungOptions& options = {});

    /// Throws CflViolation if dt breaks either bound and NodeFormation when
    /// the density develops an interior node.
    void step(double dt);
    /// Uniform steps no larger than dt_max (and within the stability bounds)
    /// landing exactly on t + span.
    void advance(double span, double dt_max);

    /// Largest dt meeting (2 beta/m) dt / dx^2 <= 0.5 and max|v| dt <= 0.5 dx.
    double stable_step() const;
    HydroState state() const;
    double time() const { return t_; }

private:
    void rhs(const std::vector<double>& L, const std::vector<double>& S, std::vector<double>& dL,
             std::vector<double>& dS) const;
    double max_speed() const;
    void close_tails(std::vector<double>& L, std::vector<double>& S) const;

    Grid1D grid_;
    Potential potential_;
    PhysicalParams params_;
    MadelungOptions options_;
    std::vector<double> potential_values_;
    std::vector<double> log_rho_;
    std::vector<double> phase_;
    double t_ = 0.0;
};

HydroState step_madelung(const HydroState& h, double dt, const Potential& potential, const PhysicalParams& params);

struct HamiltonJacobiResidual {
    std::vector<double> t;
    std::vector<std::vector<double>> residual;  // NaN off the mask
    double linf = 0.0;
};

/// r = 2 beta dS/dt + (2 beta^2/m) (dS/dx)^2 + Q + V on every interior slice
/// of an equally spaced series.  Whole-turn jumps of S between slices are
/// removed before differencing.
HamiltonJacobiResidual hamilton_jacobi_residual(std::span<const HydroState> series, const Potential& potential,
                                                const PhysicalParams& params, double mask_rel = 1e-3);

}  // namespace sedqm
