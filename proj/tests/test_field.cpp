#include <doctest.h>

#include <cmath>
#include <numeric>

#include "sedqm/field.hpp"
#include "sedqm/numerics.hpp"

using namespace sedqm;

namespace {
PhysicalParams unit_params() { return default_params("dimensionless-ho"); }

std::shared_ptr<const ModeSet> single_mode(double omega, double c) {
    auto m = std::make_shared<ModeSet>();
    m->omega = {omega};
    m->amplitude = {c};
    m->spacing = 1e-3;
    m->seed = 3;
    m->uniform = false;
    return m;
}
}  // namespace

TEST_CASE("spectral density values") {
    const auto p = unit_params();
    CHECK(spectral_density(1.0, p) == doctest::Approx(0.0506605918211689).epsilon(1e-12));
    CHECK(spectral_density(2.0, p) == doctest::Approx(8.0 * spectral_density(1.0, p)).epsilon(1e-14));
    CHECK_THROWS_AS(spectral_density(0.0, p), Error);
}

TEST_CASE("mode set spacing and amplitude ratio") {
    const auto m = build_mode_set({0.9, 1.1, 1000, 1, false}, unit_params());
    CHECK(m.size() == 1000);
    CHECK(m.spacing == doctest::Approx(0.2 / 999).epsilon(1e-13));
    CHECK(m.omega.front() == doctest::Approx(0.9));
    CHECK(m.omega.back() == doctest::Approx(1.1));
    CHECK(m.amplitude.back() / m.amplitude.front() == doctest::Approx(std::pow(1.1 / 0.9, 1.5)).epsilon(1e-12));
    CHECK_THROWS_AS(build_mode_set({0.9, 1.1, 1, 1, false}, unit_params()), Error);
    CHECK_THROWS_AS(build_mode_set({1.1, 0.9, 10, 1, false}, unit_params()), Error);
}

TEST_CASE("jittered modes stay within a quarter spacing") {
    const auto m = build_mode_set({0.9, 1.1, 200, 5, true}, unit_params());
    CHECK_FALSE(m.uniform);
    for (std::size_t j = 0; j < m.size(); ++j) {
        const double nominal = 0.9 + static_cast<double>(j) * m.spacing;
        CHECK(std::abs(m.omega[j] - nominal) <= 0.25 * m.spacing + 1e-15);
    }
}

TEST_CASE("realizations are deterministic and standard normal") {
    auto modes = std::make_shared<const ModeSet>(build_mode_set({0.9, 1.1, 50, 42, false}, unit_params()));
    const auto a = sample_realization(modes, 17);
    const auto b = sample_realization(modes, 17);
    CHECK(a.a == b.a);
    CHECK(a.b == b.b);
    CHECK(sample_realization(modes, 18).a != a.a);

    CompensatedSum s, s2;
    const int R = 10000;
    for (int r = 0; r < R; ++r) {
        const double v = sample_realization(modes, static_cast<std::uint64_t>(r)).a[7];
        s.add(v);
        s2.add(v * v);
    }
    const double mean = s.value() / R;
    const double var = s2.value() / R - mean * mean;
    CHECK(std::abs(mean) <= 3.0 / std::sqrt(R));
    CHECK(std::abs(var - 1.0) <= 0.05);
}

TEST_CASE("field evaluation") {
    auto modes = std::make_shared<const ModeSet>(build_mode_set({0.9, 1.1, 20, 1, false}, unit_params()));
    auto r = sample_realization(modes, 0);
    std::fill(r.a.begin(), r.a.end(), 0.0);
    std::fill(r.b.begin(), r.b.end(), 0.0);
    CHECK(eval_field(r, 0.0) == 0.0);
    CHECK(eval_field(r, 12.3) == 0.0);

    FieldRealization one{single_mode(1.0, 2.0), 0, {1.0}, {0.0}};
    CHECK(eval_field(one, 0.0) == 2.0);
    FieldRealization mixed{single_mode(1.0, 2.0), 0, {0.3}, {-0.8}};
    CHECK(eval_field(mixed, 0.7) == doctest::Approx(eval_field(mixed, 0.7 + 2 * pi)).epsilon(1e-13));
}

TEST_CASE("chirp-z tabulation agrees with direct evaluation") {
    for (bool jitter : {false, true}) {
        auto modes = std::make_shared<const ModeSet>(build_mode_set({0.9, 1.1, 1000, 9, jitter}, unit_params()));
        const auto r = sample_realization(modes, 4);
        FieldTabulator tab(modes, 512);
        std::vector<double> out(1500);
        const double t0 = 12345.6, h = 0.09;
        tab.tabulate(r, t0, h, out);
        double scale = std::sqrt(modes->variance()), worst = 0.0;
        for (std::size_t k = 0; k < out.size(); k += 7)
            worst = std::max(worst, std::abs(out[k] - eval_field(r, t0 + static_cast<double>(k) * h)));
        CHECK(worst <= 1e-9 * scale);
    }
}

TEST_CASE("autocorrelation at zero lag matches the mode-sum variance and band integral") {
    auto modes = std::make_shared<const ModeSet>(build_mode_set({0.9, 1.1, 1000, 2, false}, unit_params()));
    std::vector<FieldRealization> rs;
    for (std::uint64_t i = 0; i < 200; ++i) rs.push_back(sample_realization(modes, i));
    const std::vector<double> lags{0.0, 3.0, 10.0};
    const auto est = estimate_autocorrelation(rs, lags, 8);
    CHECK(std::abs(est[0].value - modes->variance()) <= 3.0 * est[0].std_error);
    for (std::size_t k = 1; k < lags.size(); ++k)
        CHECK(std::abs(est[k].value - analytic_autocorrelation(*modes, lags[k])) <= 4.0 * est[k].std_error);

    // (4 pi / 3) * integral of w^3 / (2 pi^2) over [0.9, 1.1]
    const double band = 4.0 * pi / 3.0 / (2.0 * pi * pi) * (std::pow(1.1, 4) - std::pow(0.9, 4)) / 4.0;
    const double edge = field_psd(1.1, unit_params()) * modes->spacing;
    CHECK(std::abs(modes->variance() - band) <= edge);

    std::vector<FieldRealization> few(rs.begin(), rs.begin() + 50);
    CHECK_THROWS_AS(estimate_autocorrelation(few, lags), Error);
}

TEST_CASE("single-mode correlation") {
    auto m = single_mode(1.3, 0.7);
    std::vector<FieldRealization> rs;
    auto base = std::make_shared<ModeSet>(*m);
    base->spacing = 2 * pi / 1000.0;  // so averaging spans a recurrence period
    std::shared_ptr<const ModeSet> cm = base;
    for (std::uint64_t i = 0; i < 400; ++i) rs.push_back(sample_realization(cm, i));
    const std::vector<double> lags{0.0, 0.5, 2.0};
    const auto est = estimate_autocorrelation(rs, lags, 16);
    for (std::size_t k = 0; k < lags.size(); ++k) {
        const double expect = 0.49 * std::cos(1.3 * lags[k]);
        CHECK(std::abs(est[k].value - expect) <= 4.0 * est[k].std_error + 1e-12);
    }
}

TEST_CASE("field values are Gaussian across realizations") {
    auto modes = std::make_shared<const ModeSet>(build_mode_set({0.9, 1.1, 100, 8, false}, unit_params()));
    const int R = 10000;
    std::vector<double> e(R);
    for (int r = 0; r < R; ++r) e[r] = eval_field(sample_realization(modes, static_cast<std::uint64_t>(r)), 77.0);
    const double mean = std::accumulate(e.begin(), e.end(), 0.0) / R;
    double m2 = 0, m3 = 0, m4 = 0;
    for (double v : e) {
        const double d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= R;
    m3 /= R;
    m4 /= R;
    const double skew = m3 / std::pow(m2, 1.5);
    const double kurt = m4 / (m2 * m2);
    // Jarque-Bera statistic against the chi^2(2) 1% critical value
    const double jb = R / 6.0 * (skew * skew + 0.25 * (kurt - 3.0) * (kurt - 3.0));
    CHECK(jb < 9.21);
}

TEST_CASE("periodogram follows the cubic spectral shape") {
    const auto p = unit_params();
    auto modes = std::make_shared<const ModeSet>(build_mode_set({0.9, 1.1, 64, 21, false}, p));
    const double T = modes->recurrence_time();
    const std::size_t nt = 8192;
    const double h = T / static_cast<double>(nt);
    FieldTabulator tab(modes, 2048);
    std::vector<double> series(nt);
    std::vector<double> power(modes->size(), 0.0);
    const int R = 400;
    for (int r = 0; r < R; ++r) {
        tab.tabulate(sample_realization(modes, static_cast<std::uint64_t>(r)), 0.0, h, series);
        for (std::size_t j = 0; j < modes->size(); ++j) {
            std::complex<double> acc{};
            for (std::size_t k = 0; k < nt; ++k)
                acc += series[k] * std::polar(1.0, -modes->omega[j] * static_cast<double>(k) * h);
            power[j] += std::norm(2.0 * acc / static_cast<double>(nt)) / 2.0;
        }
    }
    for (std::size_t j = 0; j < modes->size(); ++j) {
        const double expect = field_psd(modes->omega[j], p) * modes->spacing;
        CHECK(std::abs(power[j] / R / expect - 1.0) <= 0.2);
    }
}
