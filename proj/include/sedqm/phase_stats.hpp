#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "sedqm/numerics.hpp"
#include "sedqm/params.hpp"

namespace sedqm {

enum class DensityMethod { histogram, kde };

struct DensityMetadata {
    DensityMethod method = DensityMethod::kde;
    double bandwidth_x = 0.0;  // kernel std (kde) or bin width (histogram)
    double bandwidth_p = 0.0;
    std::size_t sample_count = 0;
    double coverage = 1.0;
    /// Fewer than 100 samples: the estimate is produced but carries wide
    /// uncertainty.
    bool low_sample_count = false;
};

/// Gridded phase-space density Q(x, p), row-major in x (values[i*np + j]).
struct PhaseDensity {
    Grid1D x;
    Grid1D p;
    std::vector<double> values;
    DensityMetadata meta;

    double at(std::size_t i, std::size_t j) const { return values[i * p.n + j]; }
};

/// Q~(x, z) = integral Q(x, p) exp(i p z) dp, row-major in x.
struct CharacteristicGrid {
    Grid1D x;
    Grid1D z;
    std::vector<std::complex<double>> values;

    std::complex<double> at(std::size_t i, std::size_t k) const { return values[i * z.n + k]; }
};

struct LocalMoments {
    Grid1D x;
    std::vector<double> rho;
    std::vector<double> mean_p;
    std::vector<double> mean_p2;
    std::vector<double> var_p;
    std::vector<std::uint8_t> mask;
};

/// Normalised (trapezoidal integral 1) density estimate.  KDE uses a product
/// Gaussian kernel with Silverman bandwidths unless explicit ones are given.
PhaseDensity estimate_density(std::span<const double> xs, std::span<const double> ps, const Grid1D& x_grid,
                              const Grid1D& p_grid, DensityMethod method = DensityMethod::kde,
                              double bandwidth_x = 0.0, double bandwidth_p = 0.0);

/// Silverman's rule for a d-dimensional product Gaussian kernel.
double silverman_bandwidth(std::span<const double> samples, int dims);

/// Requires max|z| * dp <= pi/4.
CharacteristicGrid characteristic_fn(const PhaseDensity& q, const Grid1D& z_grid);

std::vector<double> marginal_rho(const PhaseDensity& q);

/// Local moments <p>_x, <p^2>_x and sigma_p^2 of a gridded density; the
/// values need not be non-negative (Wigner grids are accepted).
LocalMoments local_moments(const Grid1D& x, const Grid1D& p, std::span<const double> values,
                           double mask_rel = 1e-3);
LocalMoments local_moments(const PhaseDensity& q, double mask_rel = 1e-3);

/// Kernel estimate of rho(x) and of the conditional momentum moments from
/// samples: Gaussian kernel in x, local-linear conditional mean of p, and
/// the kernel-weighted residual variance as sigma_p^2.  Optional per-sample
/// weights (bootstrap multiplicities).
LocalMoments local_moments_from_samples(std::span<const double> xs, std::span<const double> ps,
                                        std::span<const double> weights, const Grid1D& x_grid,
                                        double bandwidth, double mask_rel = 1e-3);

struct DispersionResidual {
    std::vector<double> residual;  // NaN outside the mask
    std::vector<double> predicted_var;  // -beta^2 d^2 ln rho
    double l2 = 0.0;
    double linf = 0.0;
    double rms = 0.0;
    std::size_t mask_points = 0;
    /// Gaps between supported regions (nodes), excluded from the residual.
    std::vector<Segment> excluded;
};

/// d^2 ln rho by fourth-order centred differences per supported segment,
/// dropping to one-sided formulas at segment edges; NaN outside the mask.
std::vector<double> log_density_curvature(const Grid1D& x, std::span<const double> rho,
                                          std::span<const std::uint8_t> mask);

/// d^2 ln rho from samples by a local-likelihood quadratic fit of ln rho with
/// a Gaussian kernel of width h.  The fit has the closed form
/// 1/h^2 - 1/v(x), v(x) the kernel-weighted variance of the samples about x,
/// and is unbiased for Gaussian densities at any h.  NaN off the mask.
std::vector<double> log_density_curvature_from_samples(std::span<const double> xs, std::span<const double> weights,
                                                       const Grid1D& grid, double bandwidth,
                                                       std::span<const std::uint8_t> mask);

/// r(x) = sigma_p^2(x) + beta^2 d^2 ln rho(x) on the mask.
DispersionResidual dispersion_identity_residual(const LocalMoments& m, double beta);

struct HierarchyResiduals {
    std::vector<double> t;  // times of interior slices
    std::vector<std::vector<double>> continuity;  // NaN outside the mask
    std::vector<std::vector<double>> momentum;
    double continuity_linf = 0.0;
    double momentum_linf = 0.0;
};

/// Residuals of the decoupled pair of moment equations on each interior
/// slice of an equally spaced time series: second-order centred differences
/// in t, fourth-order centred in x.
HierarchyResiduals hierarchy_residuals(std::span<const LocalMoments> series, double t0, double dt,
                                       const Potential& potential, double mass);

struct MomentumFluctuation {
    double curvature_form;  // -beta^2 int rho d^2 ln rho
    double gradient_form;   //  beta^2 int rho (d ln rho)^2
};

/// Both forms of the phase-space averaged momentum variance; they agree when
/// surface terms vanish.  Box grids must have rho at the edges below
/// edge_rel * max(rho).
MomentumFluctuation avg_momentum_fluctuation(const Grid1D& x, std::span<const double> rho, double beta,
                                             double edge_rel = 1e-8);

}  // namespace sedqm
