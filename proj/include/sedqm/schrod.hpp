#pragma once

#include <complex>
#include <memory>
#include <span>
#include <vector>

#include "sedqm/hydro.hpp"
#include "sedqm/numerics.hpp"
#include "sedqm/params.hpp"

namespace sedqm {

class ComplexFft;
class SineTransform;

using cplx = std::complex<double>;

/// psi on a uniform grid.  hbar is always 2 beta.
struct WaveFunction {
    Grid1D grid;
    std::vector<cplx> psi;
    double t = 0.0;
    double beta = 0.5;
    double mass = 1.0;

    double hbar() const { return 2.0 * beta; }
    std::vector<double> density() const;
    double norm() const;  // integral of |psi|^2
};

/// Fraction of the norm carried by the outer eighth of the discrete
/// spectrum (FFT for periodic grids, DST-I for box grids).
double spectral_tail_fraction(const WaveFunction& wf);

/// Strang splitting V/2, kinetic, V/2 with the kinetic factor applied in the
/// Fourier basis (periodic) or the sine basis (box: walls one cell outside
/// the lattice).  Phases are cached for a fixed dt.
class SplitStepPropagator {
public:
    SplitStepPropagator(const Grid1D& grid, const Potential& potential, double beta, double mass, double dt);
    ~SplitStepPropagator();
    SplitStepPropagator(const SplitStepPropagator&) = delete;
    SplitStepPropagator& operator=(const SplitStepPropagator&) = delete;

    double dt() const { return dt_; }
    void step(WaveFunction& wf);
    void advance(WaveFunction& wf, std::size_t steps);

private:
    Grid1D grid_;
    double dt_;
    std::vector<cplx> half_potential_;
    std::vector<cplx> kinetic_;
    std::unique_ptr<ComplexFft> fft_;
    std::unique_ptr<SineTransform> dst_;
};

/// One step; refuses states whose spectral tail exceeds 1e-10 of the norm.
WaveFunction step_schrodinger(const WaveFunction& wf, double dt, const Potential& potential);

/// <H> with the kinetic part evaluated spectrally.
double energy_expectation(const WaveFunction& wf, const Potential& potential);

/// d psi / dx by FFT; box grids are padded with the wall zero so the
/// period is (n + 1) dx.
std::vector<cplx> spectral_derivative(const Grid1D& grid, std::span<const cplx> psi);

struct PolarDecomposition {
    HydroState state;
    std::vector<std::uint8_t> mask;
    std::size_t components = 0;
    /// Supported runs with a continuous phase; split at mask gaps and at
    /// sign changes between neighbouring points.
    std::vector<Segment> segments;
    /// True when the support splits into several components, each with its
    /// own anchor.
    bool disconnected = false;
};

/// rho = |psi|^2 and S unwrapped along the grid.  Each supported component
/// is anchored at its point nearest the grid centre (principal value of
/// arg psi there); unsupported points continue the unwrapping of the
/// nearest component.
PolarDecomposition polar_decompose(const WaveFunction& wf, double mask_rel = 1e-3);

/// v = (2 beta/m) dS/dx from the unwrapped phase; NaN off the mask.
std::vector<double> flow_velocity(const WaveFunction& wf, double mask_rel = 1e-3);
/// u = (beta/m) d ln rho / dx; NaN off the mask.
std::vector<double> stochastic_velocity(const WaveFunction& wf, double mask_rel = 1e-3);

/// |-i hbar psi' - m (v - i u) psi| with psi' spectral and v, u from the
/// polar decomposition; NaN off the mask.
std::vector<double> momentum_identity_residual(const WaveFunction& wf, double mask_rel = 1e-3);

WaveFunction wavefunction_from_hydro(const HydroState& h, double beta, double mass, double mask_rel = 1e-3);

/// Analytic states (hbar = 2 beta).
WaveFunction ho_eigenstate(unsigned n, const Grid1D& grid, double beta, double mass, double omega, double t = 0.0);
WaveFunction coherent_state(const Grid1D& grid, double beta, double mass, double omega, double x0, double p0,
                            double t = 0.0);
/// Free Gaussian packet of initial position spread sigma0 and mean momentum p0.
WaveFunction gaussian_packet(const Grid1D& grid, double beta, double mass, double x0, double p0, double sigma0,
                             double t = 0.0);

}  // namespace sedqm
