#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sedqm/common.hpp"

namespace sedqm {

/// Physical parameters shared by every module.
///
/// The field charge never appears on its own: the driving term e*E(t) is
/// represented as coupling*E(t).  beta carries the action scale of the
/// reduced description; hbar is kept separately so that an uncalibrated run
/// (beta != hbar/2) can be expressed.
struct PhysicalParams {
    double mass = 1.0;
    double hbar = 1.0;
    double beta = 0.5;
    double damping_time = 1e-3;  // tau
    double coupling = 0.0;       // kappa
    double light_speed = 1.0;
    double reference_frequency = 1.0;  // omega_0 of the preset, informational
    bool quantum_calibrated = true;

    void validate() const;
};

/// Presets: "dimensionless-ho" and "electron-like" (Gaussian units, for
/// documentation of scales only).
PhysicalParams default_params(std::string_view preset);

/// kappa with kappa^2 = 3 m c^3 tau / 2, i.e. the charge e for which tau is
/// the radiation-reaction time.  Together with the field spectrum this fixes
/// the stationary oscillator energy at hbar*omega_0/2.
double calibrated_coupling(const PhysicalParams& params);

/// V(x), f(x) = -V'(x) and f'(x) = -V''(x) at one point.
struct ForceSample {
    double value;
    double force;
    double force_slope;
};

class Potential {
public:
    struct Free {};
    struct Harmonic {
        double omega0;
        double mass;
    };
    /// V = a x^2 + b x^4
    struct Quartic {
        double a;
        double b;
    };
    struct Tabulated;

    static Potential free();
    static Potential harmonic(double omega0, double mass = 1.0);
    static Potential quartic(double a, double b);
    /// Cubic B-spline through values on a uniform grid.
    static Potential tabulated(const Grid1D& grid, std::vector<double> values);

    /// Constant offset added to V (f and f' unchanged).
    Potential shifted(double offset) const;

    ForceSample eval(double x) const;
    double value(double x) const { return eval(x).value; }
    std::vector<double> sample(const Grid1D& grid) const;

    std::string kind() const;
    bool analytic() const;
    const Harmonic* as_harmonic() const { return std::get_if<Harmonic>(&model_); }

private:
    using Model = std::variant<Free, Harmonic, Quartic, std::shared_ptr<const Tabulated>>;
    explicit Potential(Model m) : model_(std::move(m)) {}

    Model model_;
    double offset_ = 0.0;
};

ForceSample eval_force(const Potential& potential, double x);

}  // namespace sedqm
