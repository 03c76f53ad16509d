#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "sedqm/varmin.hpp"

using namespace sedqm;

namespace {

// hbar = m = omega = 1
PhysicalParams unit_params() {
    PhysicalParams p;
    p.mass = 1.0;
    p.beta = 0.5;
    p.hbar = 1.0;
    return p;
}

std::vector<double> gaussian_rho(const Grid1D& g, double s2, double c = 0.0) {
    std::vector<double> rho(g.n);
    for (std::size_t i = 0; i < g.n; ++i)
        rho[i] = std::exp(-(g[i] - c) * (g[i] - c) / (2.0 * s2)) / std::sqrt(2.0 * pi * s2);
    return rho;
}

std::vector<double> real_part(const WaveFunction& wf) {
    std::vector<double> out(wf.psi.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = wf.psi[i].real();
    return out;
}

const Grid1D wide = Grid1D::linspace(-8.0, 8.0, 641);

}  // namespace

TEST_CASE("energy functional on Gaussian densities") {
    const auto P = unit_params();
    const auto V = Potential::harmonic(1.0);
    // ground-state width s^2 = 1/2
    const auto e0 = energy_functional(wide, gaussian_rho(wide, 0.5), V, P);
    CHECK(std::abs(e0.curvature_form - 0.5) <= 1e-8);
    CHECK(std::abs(e0.gradient_form - 0.5) <= 1e-8);
    CHECK(std::abs(e0.curvature_form - e0.gradient_form) <= 1e-8);
    // E(s) = 1/(8 s^2) + s^2/2
    for (double s2 : {0.3, 1.0, 2.0}) {
        const Grid1D g = Grid1D::linspace(-14.0, 14.0, 1121);
        const auto e = energy_functional(g, gaussian_rho(g, s2), V, P);
        CHECK(std::abs(e.curvature_form - (1.0 / (8.0 * s2) + s2 / 2.0)) <= 1e-8);
        CHECK(std::abs(e.gradient_form - (1.0 / (8.0 * s2) + s2 / 2.0)) <= 1e-8);
    }
}

TEST_CASE("uniform density has no quantum kinetic term") {
    const auto P = unit_params();
    const Grid1D g = Grid1D::linspace(0.0, 2.0, 101);
    const std::vector<double> rho(g.n, 0.5);
    const auto e = energy_functional(g, rho, Potential::free(), P, false);
    CHECK(std::abs(e.curvature_form) <= 1e-12);
    CHECK(std::abs(e.gradient_form) <= 1e-12);
    CHECK_THROWS_AS(energy_functional(g, rho, Potential::free(), P), Error);
}

TEST_CASE("harmonic ground state") {
    const auto P = unit_params();
    const auto V = Potential::harmonic(1.0);
    const VariationalOptions opt{1e-7, 2000000};
    const auto r = minimize_ground_state(V, wide, P, opt);
    CHECK(std::abs(r.energy - 0.5) <= 1e-4);
    CHECK(r.residual <= opt.tol);
    CHECK(!r.boundary_flag);
    double dev = 0.0, mn = 0.0, norm = 0.0;
    for (std::size_t i = 0; i < wide.n; ++i) {
        const double psi = r.psi.psi[i].real();
        dev = std::max(dev, std::abs(psi - std::pow(pi, -0.25) * std::exp(-0.5 * wide[i] * wide[i])));
        mn = std::min(mn, psi);
        norm += psi * psi * wide.dx;
        CHECK(r.psi.psi[i].imag() == 0.0);
    }
    CHECK(dev <= 1e-4);
    CHECK(mn >= 0.0);
    CHECK(norm == doctest::Approx(1.0).epsilon(1e-12));
    // replay of the postcondition
    CHECK(eigen_residual(real_part(r.psi), r.energy, V, wide, P) <= opt.tol);
    const auto oracle = tridiagonal_eigenpairs(V, wide, P);
    CHECK(std::abs(r.energy - oracle[0].energy) <= 10.0 * opt.tol);
}

TEST_CASE("particle in a box") {
    const auto P = unit_params();
    const Grid1D g = Grid1D::box_interior(0.0, 1.0, 255);
    const auto r = minimize_ground_state(Potential::free(), g, P);
    CHECK(std::abs(r.energy - pi * pi / 2.0) <= 1e-3);
    double dev = 0.0;
    for (std::size_t i = 0; i < g.n; ++i)
        dev = std::max(dev, std::abs(r.psi.psi[i].real() - std::sqrt(2.0) * std::sin(pi * g[i])));
    CHECK(dev <= 1e-3);
    CHECK(!r.boundary_flag);
}

TEST_CASE("quartic ground state agrees with the dense eigensolve") {
    const auto P = unit_params();
    const auto V = Potential::quartic(0.0, 1.0);
    const Grid1D g = Grid1D::linspace(-5.0, 5.0, 401);
    const VariationalOptions opt{1e-7, 2000000};
    const auto r = minimize_ground_state(V, g, P, opt);
    const auto oracle = tridiagonal_eigenpairs(V, g, P);
    CHECK(std::abs(r.energy - oracle[0].energy) <= 10.0 * opt.tol);
    // continuum value of -1/2 d^2 + x^4
    CHECK(std::abs(oracle[0].energy - 0.667986) <= 1e-3);
    CHECK(eigen_residual(oracle[0].psi, oracle[0].energy, V, g, P) <= 1e-10);
}

TEST_CASE("Rayleigh quotient never increases along the iteration") {
    const auto P = unit_params();
    for (const auto& V : {Potential::harmonic(1.0), Potential::quartic(-1.0, 0.5)}) {
        const auto r = minimize_ground_state(V, Grid1D::linspace(-6.0, 6.0, 241), P);
        REQUIRE(r.history.size() == r.iterations + 1);
        bool monotone = true;
        for (std::size_t k = 1; k < r.history.size(); ++k)
            if (r.history[k] > r.history[k - 1] + 1e-13 * std::abs(r.history[k - 1])) monotone = false;
        CHECK(monotone);
        CHECK(r.history.back() == r.energy);
    }
}

TEST_CASE("random smooth trial densities stay above the converged energy") {
    const auto P = unit_params();
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> width(0.5, 1.5), shift(-0.5, 0.5), amp(-0.25, 0.25), freq(0.5, 3.0);
    for (const auto& V : {Potential::harmonic(1.0), Potential::quartic(0.0, 1.0)}) {
        const auto ground = minimize_ground_state(V, wide, P);
        double lowest = std::numeric_limits<double>::infinity();
        for (int trial = 0; trial < 50; ++trial) {
            const double s = width(rng), c = shift(rng), a = amp(rng), k = freq(rng);
            std::vector<double> rho(wide.n);
            for (std::size_t i = 0; i < wide.n; ++i) {
                const double psi = std::exp(-(wide[i] - c) * (wide[i] - c) / (2.0 * s * s)) * (1.0 + a * std::cos(k * wide[i]));
                rho[i] = psi * psi;
            }
            const double z = integrate(wide, rho);
            for (double& v : rho) v /= z;
            const auto e = energy_functional(wide, rho, V, P);
            lowest = std::min(lowest, std::min(e.curvature_form, e.gradient_form));
        }
        CHECK(lowest >= ground.energy);
    }
}

TEST_CASE("eigen residual grows linearly along an orthogonal direction") {
    const auto P = unit_params();
    const auto V = Potential::harmonic(1.0);
    const Grid1D g = Grid1D::linspace(-8.0, 8.0, 321);
    const auto pairs = tridiagonal_eigenpairs(V, g, P, 2);
    const double gap = pairs[1].energy - pairs[0].energy;
    for (double eps : {1e-4, 1e-3, 1e-2}) {
        std::vector<double> psi(g.n);
        for (std::size_t i = 0; i < g.n; ++i) psi[i] = pairs[0].psi[i] + eps * pairs[1].psi[i];
        CHECK(eigen_residual(psi, pairs[0].energy, V, g, P) == doctest::Approx(eps * gap).epsilon(1e-6));
    }
}

TEST_CASE("potentials unbounded below on the grid are rejected") {
    const auto P = unit_params();
    CHECK_THROWS_AS(minimize_ground_state(Potential::quartic(1.0, -0.1), Grid1D::linspace(-6.0, 6.0, 121), P), Error);
    CHECK_THROWS_AS(minimize_ground_state(Potential::harmonic(1.0), Grid1D::periodic(-3.0, 6.0, 64), P), Error);
    const VariationalOptions tiny{1e-12, 3};
    CHECK_THROWS_AS(minimize_ground_state(Potential::harmonic(1.0), wide, P, tiny), Error);
}

TEST_CASE("narrow domain raises the wall flag") {
    const auto P = unit_params();
    const auto r = minimize_ground_state(Potential::harmonic(1.0), Grid1D::linspace(-2.0, 2.0, 81), P);
    CHECK(r.boundary_flag);
    CHECK(r.wall_amplitude > 1e-8);
}
