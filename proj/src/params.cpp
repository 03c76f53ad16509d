#include "sedqm/params.hpp"

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <cmath>
#include <sstream>

namespace sedqm {

struct Potential::Tabulated {
    Grid1D grid;
    std::vector<double> values;
    boost::math::interpolators::cardinal_cubic_b_spline<double> spline;
};

void PhysicalParams::validate() const {
    auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidArgument, what); };
    if (!(mass > 0)) fail("mass must be positive");
    if (!(hbar > 0)) fail("hbar must be positive");
    if (!(beta > 0)) fail("beta must be positive");
    if (!(damping_time >= 0)) fail("damping_time must be non-negative");
    if (!(coupling >= 0)) fail("coupling must be non-negative");
    if (!(light_speed > 0)) fail("light_speed must be positive");
    if (quantum_calibrated && std::abs(beta - 0.5 * hbar) > 1e-12 * hbar)
        fail("quantum-calibrated parameters require beta = hbar/2");
}

double calibrated_coupling(const PhysicalParams& p) {
    const double c = p.light_speed;
    return std::sqrt(1.5 * p.mass * c * c * c * p.damping_time);
}

PhysicalParams default_params(std::string_view preset) {
    PhysicalParams p;
    if (preset == "dimensionless-ho") {
        p.mass = 1.0;
        p.hbar = 1.0;
        p.beta = 0.5;
        p.damping_time = 1e-3;
        p.light_speed = 1.0;
        p.reference_frequency = 1.0;
        p.coupling = calibrated_coupling(p);
        p.quantum_calibrated = true;
        return p;
    }
    if (preset == "electron-like") {
        // CGS-Gaussian, CODATA 2018
        constexpr double e = 4.803204712570263e-10;  // statC
        constexpr double m = 9.1093837015e-28;       // g
        constexpr double c = 2.99792458e10;          // cm/s
        constexpr double hbar = 1.054571817e-27;     // erg s
        p.mass = m;
        p.hbar = hbar;
        p.beta = 0.5 * hbar;
        p.light_speed = c;
        p.damping_time = 2.0 * e * e / (3.0 * m * c * c * c);
        p.coupling = e;
        p.reference_frequency = 2.0670687e16;  // Rydberg angular frequency, rad/s
        p.quantum_calibrated = true;
        return p;
    }
    throw Error(ErrorCode::UnknownPreset, "unknown preset '" + std::string(preset) + "'");
}

Potential Potential::free() { return Potential(Free{}); }

Potential Potential::harmonic(double omega0, double mass) {
    if (!(omega0 > 0) || !(mass > 0))
        throw Error(ErrorCode::InvalidArgument, "harmonic potential needs omega0 > 0 and mass > 0");
    return Potential(Harmonic{omega0, mass});
}

Potential Potential::quartic(double a, double b) {
    if (!std::isfinite(a) || !std::isfinite(b))
        throw Error(ErrorCode::InvalidArgument, "quartic coefficients must be finite");
    return Potential(Quartic{a, b});
}

Potential Potential::tabulated(const Grid1D& grid, std::vector<double> values) {
    if (values.size() != grid.n || grid.n < 4)
        throw Error(ErrorCode::InvalidArgument, "tabulated potential needs >= 4 values matching the grid");
    for (double v : values)
        if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "tabulated potential must be finite");
    auto tab = std::make_shared<Tabulated>(Tabulated{
        grid, values,
        boost::math::interpolators::cardinal_cubic_b_spline<double>(values.begin(), values.end(), grid.min,
                                                                   grid.dx)});
    return Potential(std::shared_ptr<const Tabulated>(std::move(tab)));
}

Potential Potential::shifted(double offset) const {
    Potential out = *this;
    out.offset_ += offset;
    return out;
}

ForceSample Potential::eval(double x) const {
    ForceSample s = std::visit(
        [x](const auto& m) -> ForceSample {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, Free>) {
                return {0.0, 0.0, 0.0};
            } else if constexpr (std::is_same_v<T, Harmonic>) {
                const double k = m.mass * m.omega0 * m.omega0;
                return {0.5 * k * x * x, -k * x, -k};
            } else if constexpr (std::is_same_v<T, Quartic>) {
                const double x2 = x * x;
                return {m.a * x2 + m.b * x2 * x2, -(2.0 * m.a * x + 4.0 * m.b * x2 * x),
                        -(2.0 * m.a + 12.0 * m.b * x2)};
            } else {
                const double lo = m->grid.min;
                const double hi = m->grid.max();
                const double slack = 1e-12 * (hi - lo);
                if (!(x >= lo - slack && x <= hi + slack)) {
                    std::ostringstream os;
                    os << "x = " << x << " outside tabulated potential range [" << lo << ", " << hi << "]";
                    throw Error(ErrorCode::OutOfRange, os.str());
                }
                const double xc = std::min(std::max(x, lo), hi);
                return {m->spline(xc), -m->spline.prime(xc), -m->spline.double_prime(xc)};
            }
        },
        model_);
    s.value += offset_;
    return s;
}

std::vector<double> Potential::sample(const Grid1D& grid) const {
    std::vector<double> v(grid.n);
    for (std::size_t i = 0; i < grid.n; ++i) v[i] = value(grid[i]);
    return v;
}

std::string Potential::kind() const {
    return std::visit(
        [](const auto& m) -> std::string {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, Free>) return "free";
            else if constexpr (std::is_same_v<T, Harmonic>) return "harmonic";
            else if constexpr (std::is_same_v<T, Quartic>) return "quartic";
            else return "tabulated";
        },
        model_);
}

bool Potential::analytic() const { return kind() != "tabulated"; }

ForceSample eval_force(const Potential& potential, double x) { return potential.eval(x); }

}  // namespace sedqm
