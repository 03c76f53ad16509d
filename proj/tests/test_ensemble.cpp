#include <doctest.h>

#include <cmath>
#include <random>

#include "sedqm/ensemble.hpp"

using namespace sedqm;

namespace {

// Stationary <H> of the damped, driven oscillator x'' + G x' + w0^2 x = kappa E / m,
// summed over the modes: each contributes kappa^2 c_j^2 / m^2 times |chi_j|^2.
double stationary_energy(const ModeSet& modes, const PhysicalParams& p, double w0) {
    const double g = p.damping_time * w0 * w0;
    double h = 0.0;
    for (std::size_t j = 0; j < modes.size(); ++j) {
        const double w = modes.omega[j];
        const double chi2 = 1.0 / ((w0 * w0 - w * w) * (w0 * w0 - w * w) + g * g * w * w);
        const double drive = p.coupling * p.coupling * modes.amplitude[j] * modes.amplitude[j] / (p.mass * p.mass);
        h += 0.5 * p.mass * (w * w + w0 * w0) * drive * chi2;
    }
    return h;
}

PhysicalParams params_with_tau(double tau) {
    auto p = default_params("dimensionless-ho");
    p.damping_time = tau;
    p.coupling = calibrated_coupling(p);
    return p;
}

Ensemble quick_ensemble(double tau, std::size_t n, std::size_t modes, std::uint64_t seed) {
    Ensemble e;
    e.params = params_with_tau(tau);
    e.potential = Potential::harmonic(1.0, 1.0);
    e.modes = std::make_shared<const ModeSet>(build_mode_set({0.9, 1.1, modes, seed, false}, e.params));
    e.members.assign(n, ParticleState{});
    return e;
}

std::vector<double> linspace(double a, double b, std::size_t n) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
    return v;
}

}  // namespace

TEST_CASE("calibrated field gives hbar w0 / 2 for the finite mode sum") {
    const auto p = default_params("dimensionless-ho");
    const auto modes = build_mode_set({0.9, 1.1, 1000, 1, false}, p);
    CHECK(stationary_energy(modes, p, 1.0) == doctest::Approx(0.5).epsilon(5e-3));
}

TEST_CASE("ballistic step") {
    const auto p = params_with_tau(0.0);
    const auto s = step_trajectory(ParticleState{0.0, 1.0, 0.0}, 0.1, Potential::free(), p);
    CHECK(s.x == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(s.p == 1.0);
    CHECK(s.t == doctest::Approx(0.1));
}

TEST_CASE("conservative oscillator returns after one period") {
    const auto p = params_with_tau(0.0);
    const auto V = Potential::harmonic(1.0);
    ParticleState s{1.0, 0.0, 0.0};
    const double dt = 2 * pi / 1000;
    for (int k = 0; k < 1000; ++k) s = step_trajectory(s, dt, V, p);
    CHECK(std::abs(s.x - 1.0) <= 1e-8);
    CHECK(std::abs(s.p) <= 1e-8);
}

TEST_CASE("conservative energy drift over 100 periods") {
    const auto p = params_with_tau(0.0);
    const auto V = Potential::harmonic(1.0);
    auto drift = [&](double dt, int& steps) {
        ParticleState s{0.3, -0.8, 0.0};
        const double e0 = 0.5 * (s.x * s.x + s.p * s.p);
        steps = static_cast<int>(std::ceil(200 * pi / dt));
        for (int k = 0; k < steps; ++k) s = rk4_step(s, dt, 0, 0, 0, V, p);
        return std::abs(0.5 * (s.x * s.x + s.p * s.p) - e0) / e0;
    };
    int steps = 0;
    // production step for a band reaching 1.1 w0
    CHECK(drift(desk_time_step(1.1), steps) <= 1e-6);
    // at the coarsest allowed step the loss matches the exact RK4 energy factor
    // |R(i y)|^2 = 1 - y^6/72 + y^8/576 per step, y = w dt
    const double y = max_time_step(1.1);
    const double d = drift(y, steps);
    const double oracle = 1.0 - std::pow(1.0 - std::pow(y, 6) / 72.0 + std::pow(y, 8) / 576.0, steps);
    CHECK(d == doctest::Approx(oracle).epsilon(1e-6));
}

TEST_CASE("weakly damped energy envelope") {
    const auto p = params_with_tau(1e-3);
    const auto V = Potential::harmonic(1.0);
    ParticleState s{1.0, 0.0, 0.0};
    const double dt = 2 * pi / 200;
    const int steps = 200 * 80;
    for (int k = 0; k < steps; ++k) s = step_trajectory(s, dt, V, p);
    const double e = 0.5 * (s.x * s.x + s.p * s.p);
    CHECK(e == doctest::Approx(0.5 * std::exp(-1e-3 * s.t)).epsilon(0.01));
}

TEST_CASE("step size precondition") {
    auto e = quick_ensemble(0.01, 1, 10, 1);
    const auto r = e.realization(0);
    CHECK_THROWS_AS(step_trajectory(ParticleState{}, r, 0.3, e.potential, e.params), Error);
    CHECK_NOTHROW(step_trajectory(ParticleState{}, r, 0.28, e.potential, e.params));
}

TEST_CASE("free single member follows the ballistic orbit") {
    Ensemble e;
    e.params = params_with_tau(0.0);
    e.members = {ParticleState{0.5, 2.0, 0.0}};
    const std::vector<double> times{1.0, 2.5, 4.0};
    const auto snaps = evolve_ensemble(e, 5.0, 0.1, times);
    REQUIRE(snaps.size() == 3);
    for (std::size_t k = 0; k < 3; ++k) CHECK(snaps[k].x[0] == doctest::Approx(0.5 + 2.0 * times[k]).epsilon(1e-13));
    CHECK(e.members[0].t == 5.0);
    CHECK(e.members[0].x == doctest::Approx(10.5));
}

TEST_CASE("evolve preconditions") {
    auto e = quick_ensemble(0.01, 2, 100, 1);
    const double rec = e.modes->recurrence_time();
    try {
        evolve_ensemble(e, rec * 1.01, 0.2, std::vector<double>{});
        FAIL("expected recurrence error");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::Recurrence);
    }
    CHECK_THROWS_AS(evolve_ensemble(e, 10.0, 0.2, std::vector<double>{5.0, 3.0}), Error);
    CHECK_THROWS_AS(evolve_ensemble(e, 10.0, 0.2, std::vector<double>{11.0}), Error);
}

TEST_CASE("mean energy examples") {
    Ensemble e;
    e.params = params_with_tau(0.0);
    e.potential = Potential::harmonic(1.0);
    e.members.assign(4, ParticleState{});
    CHECK(mean_energy(e) == 0.0);
    e.members = {ParticleState{1.0, 0.0, 0.0}, ParticleState{-1.0, 0.0, 0.0}};
    CHECK(mean_energy(e) == 0.5);
}

TEST_CASE("driven ensemble: determinism, symmetry, linear response and stationary energy") {
    // tau = 0.01 so that 10 relaxation times fit in a short run
    auto e = quick_ensemble(0.01, 2000, 200, 3);
    const auto times = linspace(600.0, 1200.0, 31);
    auto copy = e;
    const auto snaps = evolve_ensemble(e, 1200.0, 0.25, times, {1});

    EvolveOptions opts;
    opts.threads = 3;
    const auto again = evolve_ensemble(copy, 1200.0, 0.25, times, opts);
    bool identical = true;
    for (std::size_t k = 0; k < snaps.size(); ++k) identical = identical && snaps[k].x == again[k].x && snaps[k].p == again[k].p;
    CHECK(identical);

    const Snapshot& last = snaps.back();
    double mx = 0, mx2 = 0;
    for (double x : last.x) {
        mx += x;
        mx2 += x * x;
    }
    mx /= 2000;
    const double se = std::sqrt((mx2 / 2000 - mx * mx) / 2000);
    CHECK(std::abs(mx) <= 3 * se);

    const double oracle = stationary_energy(*e.modes, e.params, 1.0);
    double h = 0;
    for (const auto& s : snaps) h += mean_energy(s, e.potential, e.params);
    h /= static_cast<double>(snaps.size());
    CHECK(h == doctest::Approx(oracle).epsilon(0.06));

    // consecutive windows agree within 5%
    double w1 = 0, w2 = 0;
    for (std::size_t k = 0; k < 15; ++k) w1 += mean_energy(snaps[k], e.potential, e.params);
    for (std::size_t k = 16; k < 31; ++k) w2 += mean_energy(snaps[k], e.potential, e.params);
    CHECK(std::abs(w2 - w1) / w1 < 0.05);

    const auto bal = balance_report(snaps, e.potential, e.params);
    CHECK(bal.dissipated_power < 0);
    CHECK(std::abs(bal.imbalance) <= 0.15);
    CHECK(bal.absorbed_power == doctest::Approx(-bal.dissipated_power).epsilon(0.15));

    // doubling kappa quadruples <x^2> exactly for the same realizations
    auto strong = quick_ensemble(0.01, 200, 200, 3);
    auto weak = strong;
    strong.params.coupling *= 2.0;
    const std::vector<double> t1{300.0};
    const auto a = evolve_ensemble(weak, 300.0, 0.25, t1);
    const auto b = evolve_ensemble(strong, 300.0, 0.25, t1);
    double xa = 0, xb = 0;
    for (std::size_t i = 0; i < 200; ++i) {
        xa += a[0].x[i] * a[0].x[i];
        xb += b[0].x[i] * b[0].x[i];
    }
    CHECK(xb / xa == doctest::Approx(4.0).epsilon(1e-10));
}

TEST_CASE("balance report limits without the field") {
    Ensemble e;
    e.params = params_with_tau(0.0);
    e.potential = Potential::harmonic(1.0);
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int i = 0; i < 500; ++i) e.members.push_back(ParticleState{g(rng), g(rng), 0.0});
    auto conservative = e;
    const auto times = linspace(0.0, 50.0, 11);
    const auto s0 = evolve_ensemble(conservative, 50.0, 0.05, times);
    const auto r0 = balance_report(s0, e.potential, e.params);
    CHECK(r0.dissipated_power == 0.0);
    // RK4 loss rate (w dt)^6 / 72 per step, i.e. <H> w^6 dt^5 / 72 per unit time
    CHECK(std::abs(r0.energy_slope) <= 1.1 * r0.mean_energy * std::pow(0.05, 5) / 72.0);

    e.params = params_with_tau(1e-3);
    const auto times2 = linspace(0.0, 2000.0, 41);
    const auto s1 = evolve_ensemble(e, 2000.0, 0.2, times2);
    const auto r1 = balance_report(s1, e.potential, e.params);
    CHECK(r1.imbalance == doctest::Approx(-1.0).epsilon(0.05));
    CHECK(fit_decay_rate(s1, e.potential, e.params) == doctest::Approx(1e-3).epsilon(0.05));

    std::vector<Snapshot> short_window(s1.begin(), s1.begin() + 5);
    CHECK_THROWS_AS(balance_report(short_window, e.potential, e.params), Error);
}

TEST_CASE("beta calibration on synthetic ensembles") {
    const auto p = default_params("dimensionless-ho");
    const auto V = Potential::harmonic(1.0);
    const auto grid = Grid1D::linspace(-3.0, 3.0, 121);
    std::mt19937_64 rng(99);
    std::normal_distribution<double> g(0.0, std::sqrt(0.5));
    std::vector<Snapshot> snaps(4);
    for (auto& s : snaps)
        for (int i = 0; i < 2500; ++i) {
            s.x.push_back(g(rng));
            s.p.push_back(g(rng));
        }
    const auto est = calibrate_beta(snaps, grid, V, p);
    CHECK(est.beta == doctest::Approx(0.5).epsilon(0.1));
    CHECK(std::abs(est.beta - 0.5) <= 0.05);
    CHECK(est.std_error > 0);
    CHECK(est.residual_rms <= 3 * est.noise_floor);

    auto det = snaps;
    for (auto& s : det)
        for (std::size_t i = 0; i < s.x.size(); ++i) s.p[i] = 0.3 * s.x[i];
    CHECK(calibrate_beta(det, grid, V, p).beta <= 1e-6);

    std::vector<Snapshot> small(1);
    small[0].x.assign(snaps[0].x.begin(), snaps[0].x.begin() + 1000);
    small[0].p.assign(snaps[0].p.begin(), snaps[0].p.begin() + 1000);
    try {
        calibrate_beta(small, grid, V, p);
        FAIL("expected too-few-samples");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::TooFewSamples);
    }

    auto drifting = snaps;
    for (std::size_t k = 2; k < 4; ++k)
        for (auto& x : drifting[k].x) x *= 1.3;
    try {
        calibrate_beta(drifting, grid, V, p);
        FAIL("expected non-stationary");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NonStationary);
    }
}
