#pragma once

#include <limits>
#include <string>
#include <vector>

#include "sedqm/phase_stats.hpp"
#include "sedqm/schrod.hpp"

namespace sedqm {

struct WignerGrid {
    Grid1D x;
    Grid1D p;
    std::vector<double> values;  // row-major in x
    std::string source;
    /// Largest |Im| of the transform integral before it was discarded.
    double max_imag = 0.0;

    double at(std::size_t i, std::size_t j) const { return values[i * p.n + j]; }
};

/// W(x, p) = (1/(pi hbar)) sum_y psi(x+y) psi*(x-y) exp(-2ipy/hbar) dy with y on
/// the x-lattice and hbar = 2 beta.  Box grids need |psi| < 1e-8 at the edges.
WignerGrid wigner_transform(const WaveFunction& wf, const Grid1D& p_grid, const std::string& source = "");

/// Q~(x, z) = psi(x + beta z) psi*(x - beta z).  beta*dz must be a whole
/// number of x-steps; points beyond the grid and |z| > z_window are zero.
CharacteristicGrid characteristic_from_wavefunction(const WaveFunction& wf, const Grid1D& z_grid,
                                                    double z_window = std::numeric_limits<double>::infinity());

/// Q(x, p) = (1/2 pi) integral Q~(x, z) exp(-ipz) dz (trapezoid in z).  The
/// z-grid must be symmetric about 0 and Q~ Hermitian to `symmetry_tol`
/// relative to max|Q~|.  The result may be negative.
PhaseDensity inverse_characteristic(const CharacteristicGrid& q, const Grid1D& p_grid, double symmetry_tol = 1e-8);

struct MarginalErrors {
    double position;
    double momentum;
};

/// L-infinity errors of the W marginals against |psi|^2 and the momentum
/// density |phi(p)|^2, phi(p) = (2 pi hbar)^(-1/2) integral psi e^(-ipx/hbar) dx.
MarginalErrors marginals_check(const WignerGrid& w, const WaveFunction& wf);

std::vector<double> momentum_density(const WaveFunction& wf, const Grid1D& p_grid);

struct NegativityReport {
    double min_value;
    double x_at_min;
    double p_at_min;
    double negative_volume;  // integral of |min(W, 0)|
};

NegativityReport negativity_report(const Grid1D& x, const Grid1D& p, const std::vector<double>& values);
inline NegativityReport negativity_report(const WignerGrid& w) { return negativity_report(w.x, w.p, w.values); }

/// (2 pi hbar) integral W_a W_b; equals |<a|b>|^2 for pure states.
double wigner_overlap(const WignerGrid& a, const WignerGrid& b, double hbar);

/// Pointwise standard deviation of a product-Gaussian KDE at its peak,
/// sqrt(max Q * R(K) / (n h_x h_p)) with R(K) = 1/(4 pi).
double kde_noise_floor(const PhaseDensity& q);

}  // namespace sedqm
