#pragma once

#include <span>
#include <vector>

#include "sedqm/phase_stats.hpp"
#include "sedqm/schrod.hpp"

namespace sedqm {

struct EnergyForms {
    double curvature_form;  // integral rho [-(hbar^2/8m) d^2 ln rho + V]
    double gradient_form;   // (hbar^2/8m) integral rho (d ln rho)^2 + integral rho V
};

/// Mean energy of a node-free density with hbar = 2 beta.  The boundary
/// check requires rho at the grid edges below 1e-8 * max(rho).
EnergyForms energy_functional(const Grid1D& grid, std::span<const double> rho, const Potential& potential,
                              const PhysicalParams& params, bool check_boundary = true);

/// 3-point Dirichlet Hamiltonian with walls one cell outside the lattice.
std::vector<double> apply_hamiltonian(const Grid1D& grid, std::span<const double> psi, std::span<const double> v,
                                      const PhysicalParams& params);

struct VariationalOptions {
    double tol = 1e-7;
    std::size_t max_iterations = 2000000;
};

struct VariationalResult {
    WaveFunction psi;
    double energy = 0.0;
    std::vector<double> history;  // Rayleigh quotient per iteration
    double residual = 0.0;
    std::size_t iterations = 0;
    /// max|psi| at the two edge points relative to max|psi|; flagged above
    /// 1e-8 for smooth (non-free) potentials.
    double wall_amplitude = 0.0;
    bool boundary_flag = false;
};

/// Normalised contraction psi <- (I - eta (H - V_min)) psi with eta chosen so
/// the operator is positive semidefinite: psi stays non-negative and the
/// Rayleigh quotient cannot increase.
VariationalResult minimize_ground_state(const Potential& potential, const Grid1D& grid, const PhysicalParams& params,
                                        const VariationalOptions& options = {});

/// ||H psi - E psi||_2 (continuum-normalised: sqrt(sum r^2 dx)).
double eigen_residual(std::span<const double> psi, double energy, const Potential& potential, const Grid1D& grid,
                      const PhysicalParams& params);

struct Eigenpair {
    double energy;
    std::vector<double> psi;  // sum psi^2 dx = 1, positive at the centre
};

/// Lowest `count` eigenpairs of the same discrete operator by a dense
/// symmetric tridiagonal eigensolve.
std::vector<Eigenpair> tridiagonal_eigenpairs(const Potential& potential, const Grid1D& grid,
                                              const PhysicalParams& params, std::size_t count = 1);

}  // namespace sedqm
