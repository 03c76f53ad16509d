#include "sedqm/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <random>
#include <thread>

#include "sedqm/phase_stats.hpp"

namespace sedqm {

FieldRealization Ensemble::realization(std::size_t member) const {
    if (!modes) throw Error(ErrorCode::InvalidArgument, "ensemble has no field");
    return sample_realization(modes, member);
}

double total_force(const ForceSample& f, double p, double field, const PhysicalParams& params) {
    return f.force + params.damping_time / params.mass * p * f.force_slope + params.coupling * field;
}

ParticleState rk4_step(const ParticleState& s, double dt, double e0, double e_half, double e1,
                       const Potential& potential, const PhysicalParams& params) {
    const double m = params.mass;
    auto rhs = [&](double x, double p, double e, double& dx, double& dp) {
        dx = p / m;
        dp = total_force(potential.eval(x), p, e, params);
    };
    double k1x, k1p, k2x, k2p, k3x, k3p, k4x, k4p;
    rhs(s.x, s.p, e0, k1x, k1p);
    rhs(s.x + 0.5 * dt * k1x, s.p + 0.5 * dt * k1p, e_half, k2x, k2p);
    rhs(s.x + 0.5 * dt * k2x, s.p + 0.5 * dt * k2p, e_half, k3x, k3p);
    rhs(s.x + dt * k3x, s.p + dt * k3p, e1, k4x, k4p);
    ParticleState out;
    out.x = s.x + dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
    out.p = s.p + dt / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
    out.t = s.t + dt;
    return out;
}

double max_time_step(double omega_max) { return 2.0 * pi / omega_max / 20.0; }

double desk_time_step(double omega_max) { return 2.0 * pi / omega_max / 160.0; }

namespace {

void check_step(double dt, double limit) {
    if (!(dt > 0)) throw Error(ErrorCode::InvalidArgument, "time step must be positive");
    if (dt > limit * (1.0 + 1e-12))
        throw Error(ErrorCode::Resolution, "time step " + std::to_string(dt) + " exceeds (2 pi / omega_max) / 20 = " +
                                               std::to_string(limit));
}

double step_limit(const Potential& potential, const ModeSet* modes) {
    if (modes) return max_time_step(modes->omega_max());
    if (const auto* h = potential.as_harmonic()) return max_time_step(h->omega0);
    return std::numeric_limits<double>::infinity();
}

}  // namespace

ParticleState step_trajectory(const ParticleState& s, const FieldRealization& r, double dt,
                              const Potential& potential, const PhysicalParams& params) {
    check_step(dt, max_time_step(r.modes->omega_max()));
    return rk4_step(s, dt, eval_field(r, s.t), eval_field(r, s.t + 0.5 * dt), eval_field(r, s.t + dt), potential,
                    params);
}

ParticleState step_trajectory(const ParticleState& s, double dt, const Potential& potential,
                              const PhysicalParams& params) {
    check_step(dt, step_limit(potential, nullptr));
    return rk4_step(s, dt, 0.0, 0.0, 0.0, potential, params);
}

std::vector<Snapshot> evolve_ensemble(Ensemble& e, double t_final, double dt, std::span<const double> snapshot_times,
                                      const EvolveOptions& options) {
    if (e.members.empty()) throw Error(ErrorCode::InvalidArgument, "ensemble must have at least one member");
    const double t0 = e.time();
    for (const auto& m : e.members)
        if (m.t != t0) throw Error(ErrorCode::InvalidArgument, "ensemble members must share the same time");
    if (!(t_final >= t0)) throw Error(ErrorCode::InvalidArgument, "t_final precedes the ensemble time");
    check_step(dt, step_limit(e.potential, e.modes.get()));
    for (std::size_t k = 0; k < snapshot_times.size(); ++k) {
        if (snapshot_times[k] < t0 || snapshot_times[k] > t_final)
            throw Error(ErrorCode::OutOfRange, "snapshot time outside [t0, t_final]");
        if (k > 0 && !(snapshot_times[k] > snapshot_times[k - 1]))
            throw Error(ErrorCode::InvalidArgument, "snapshot times must be strictly increasing");
    }
    if (e.modes && !(e.modes->recurrence_time() > t_final - t0))
        throw Error(ErrorCode::Recurrence, "mode-set recurrence time " + std::to_string(e.modes->recurrence_time()) +
                                               " does not exceed the simulated span " +
                                               std::to_string(t_final - t0));

    std::vector<double> stops(snapshot_times.begin(), snapshot_times.end());
    if (stops.empty() || stops.back() < t_final) stops.push_back(t_final);
    const std::size_t n_snap = snapshot_times.size();
    const std::size_t n = e.members.size();

    std::vector<Snapshot> snaps(n_snap);
    for (std::size_t k = 0; k < n_snap; ++k) {
        snaps[k].t = snapshot_times[k];
        snaps[k].x.resize(n);
        snaps[k].p.resize(n);
    }

    constexpr std::size_t block_steps = 8192;
    auto run_member = [&](std::size_t i, FieldTabulator* tab, std::vector<double>& field) {
        ParticleState s = e.members[i];
        FieldRealization r;
        if (e.modes) r = e.realization(i);
        double t_a = t0;
        for (std::size_t k = 0; k < stops.size(); ++k) {
            const double t_b = stops[k];
            if (t_b > t_a) {
                const auto steps = static_cast<std::size_t>(std::max(1.0, std::ceil((t_b - t_a) / dt - 1e-9)));
                const double h = (t_b - t_a) / static_cast<double>(steps);
                for (std::size_t start = 0; start < steps; start += block_steps) {
                    const std::size_t len = std::min(block_steps, steps - start);
                    const double tb0 = t_a + static_cast<double>(start) * h;
                    if (tab) {
                        field.resize(2 * len + 1);
                        tab->tabulate(r, tb0, 0.5 * h, field);
                    }
                    for (std::size_t q = 0; q < len; ++q) {
                        const double e0 = tab ? field[2 * q] : 0.0;
                        const double eh = tab ? field[2 * q + 1] : 0.0;
                        const double e1 = tab ? field[2 * q + 2] : 0.0;
                        s = rk4_step(s, h, e0, eh, e1, e.potential, e.params);
                        s.t = t_a + static_cast<double>(start + q + 1) * h;
                    }
                }
                s.t = t_b;
                t_a = t_b;
            }
            if (k < n_snap) {
                snaps[k].x[i] = s.x;
                snaps[k].p[i] = s.p;
            }
        }
        if (!std::isfinite(s.x) || !std::isfinite(s.p))
            throw Error(ErrorCode::InvalidArgument, "trajectory " + std::to_string(i) + " diverged");
        e.members[i] = s;
    };

    unsigned threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        try {
            std::unique_ptr<FieldTabulator> tab;
            if (e.modes) tab = std::make_unique<FieldTabulator>(e.modes);
            std::vector<double> field;
            for (std::size_t i = next++; i < n; i = next++) run_member(i, tab.get(), field);
        } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next = n;
        }
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < threads; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);
    return snaps;
}

double mean_energy(const Ensemble& e) {
    if (e.members.empty()) throw Error(ErrorCode::InvalidArgument, "empty ensemble");
    CompensatedSum s;
    for (const auto& m : e.members) s.add(m.p * m.p / (2.0 * e.params.mass) + e.potential.value(m.x));
    return s.value() / static_cast<double>(e.members.size());
}

double mean_energy(const Snapshot& snap, const Potential& potential, const PhysicalParams& params) {
    if (snap.x.empty()) throw Error(ErrorCode::InvalidArgument, "empty snapshot");
    CompensatedSum s;
    for (std::size_t i = 0; i < snap.x.size(); ++i)
        s.add(snap.p[i] * snap.p[i] / (2.0 * params.mass) + potential.value(snap.x[i]));
    return s.value() / static_cast<double>(snap.x.size());
}

BalanceReport balance_report(std::span<const Snapshot> window, const Potential& potential,
                             const PhysicalParams& params, double epsilon) {
    if (window.size() < 10) throw Error(ErrorCode::TooFewSamples, "balance window needs >= 10 snapshots");
    std::vector<double> t(window.size()), h(window.size());
    CompensatedSum diss, hsum;
    for (std::size_t k = 0; k < window.size(); ++k) {
        const Snapshot& s = window[k];
        t[k] = s.t;
        h[k] = mean_energy(s, potential, params);
        hsum.add(h[k]);
        CompensatedSum d;
        for (std::size_t i = 0; i < s.x.size(); ++i) d.add(potential.eval(s.x[i]).force_slope * s.p[i] * s.p[i]);
        diss.add(params.damping_time / (params.mass * params.mass) * d.value() / static_cast<double>(s.x.size()));
    }
    const auto fit = fit_line(t, h);
    BalanceReport r;
    const double k = static_cast<double>(window.size());
    r.mean_energy = hsum.value() / k;
    r.energy_slope = fit.slope;
    r.energy_slope_std_error = fit.slope_std_error;
    r.dissipated_power = diss.value() / k;
    r.absorbed_power = fit.slope - r.dissipated_power;
    r.imbalance = (r.absorbed_power - std::abs(r.dissipated_power)) / std::max(std::abs(r.dissipated_power), epsilon);
    return r;
}

double fit_decay_rate(std::span<const Snapshot> snapshots, const Potential& potential,
                      const PhysicalParams& params) {
    if (snapshots.size() < 2) throw Error(ErrorCode::TooFewSamples, "decay fit needs >= 2 snapshots");
    std::vector<double> t, lh;
    for (const auto& s : snapshots) {
        const double h = mean_energy(s, potential, params);
        if (!(h > 0)) throw Error(ErrorCode::InvalidArgument, "decay fit needs positive mean energy");
        t.push_back(s.t);
        lh.push_back(std::log(h));
    }
    return -fit_line(t, lh).slope;
}

namespace {

struct BetaFit {
    double beta2 = 0.0;
    std::vector<double> residual;  // over region points
    std::vector<double> var;
    std::vector<double> predicted;
};

BetaFit fit_beta(std::span<const double> xs, std::span<const double> ps, std::span<const double> weights,
                 const Grid1D& grid, double h, const std::vector<std::size_t>* region_in,
                 std::vector<std::size_t>* region_out, double fit_rel) {
    const auto m = local_moments_from_samples(xs, ps, weights, grid, h, 1e-3);
    const auto curv = log_density_curvature_from_samples(xs, weights, grid, h, m.mask);
    std::vector<std::size_t> region;
    if (region_in) {
        region = *region_in;
    } else {
        double peak = 0.0;
        for (double r : m.rho) peak = std::max(peak, r);
        for (std::size_t i = 0; i < grid.n; ++i)
            if (m.rho[i] > fit_rel * peak && std::isfinite(curv[i]) && std::isfinite(m.var_p[i]))
                region.push_back(i);
    }
    CompensatedSum sab, saa;
    for (std::size_t i : region) {
        const double a = std::isfinite(curv[i]) ? -curv[i] : 0.0;
        const double b = std::isfinite(m.var_p[i]) ? m.var_p[i] : 0.0;
        sab.add(a * b);
        saa.add(a * a);
    }
    BetaFit f;
    f.beta2 = saa.value() > 0 ? sab.value() / saa.value() : 0.0;
    for (std::size_t i : region) {
        const double a = std::isfinite(curv[i]) ? -curv[i] : 0.0;
        const double b = std::isfinite(m.var_p[i]) ? m.var_p[i] : 0.0;
        f.var.push_back(b);
        f.predicted.push_back(f.beta2 * a);
        f.residual.push_back(b - f.beta2 * a);
    }
    if (region_out) *region_out = std::move(region);
    return f;
}

}  // namespace

BetaEstimate calibrate_beta(std::span<const Snapshot> snapshots, const Grid1D& grid, const Potential& potential,
                            const PhysicalParams& params, const CalibrationOptions& options) {
    if (snapshots.empty()) throw Error(ErrorCode::TooFewSamples, "calibrate_beta needs at least one snapshot");
    const std::size_t n = snapshots.front().x.size();
    for (const auto& s : snapshots)
        if (s.x.size() != n || s.p.size() != n)
            throw Error(ErrorCode::InvalidArgument, "snapshots must hold the same members");
    if (n < options.min_members)
        throw Error(ErrorCode::TooFewSamples, "calibrate_beta needs >= " + std::to_string(options.min_members) +
                                                  " members, got " + std::to_string(n));
    if (snapshots.size() >= 2) {
        const std::size_t half = snapshots.size() / 2;
        CompensatedSum a, b;
        for (std::size_t k = 0; k < half; ++k) a.add(mean_energy(snapshots[k], potential, params));
        for (std::size_t k = half; k < snapshots.size(); ++k) b.add(mean_energy(snapshots[k], potential, params));
        const double ea = a.value() / static_cast<double>(half);
        const double eb = b.value() / static_cast<double>(snapshots.size() - half);
        const double drift = std::abs(eb - ea) / std::max(std::abs(ea), std::abs(eb));
        if (drift > options.drift_threshold)
            throw Error(ErrorCode::NonStationary, "mean energy drifts by " + std::to_string(drift * 100.0) +
                                                      "% between window halves");
    }
    std::vector<double> xs, ps;
    xs.reserve(n * snapshots.size());
    ps.reserve(n * snapshots.size());
    for (const auto& s : snapshots) {
        xs.insert(xs.end(), s.x.begin(), s.x.end());
        ps.insert(ps.end(), s.p.begin(), s.p.end());
    }
    double h = options.bandwidth;
    if (!(h > 0)) {
        CompensatedSum sx, sxx;
        for (double x : xs) sx.add(x);
        const double mean = sx.value() / static_cast<double>(xs.size());
        for (double x : xs) sxx.add((x - mean) * (x - mean));
        h = options.bandwidth_scale * std::sqrt(sxx.value() / static_cast<double>(xs.size()));
    }
    if (!(h > 0)) throw Error(ErrorCode::InvalidArgument, "degenerate sample positions");

    std::vector<std::size_t> region;
    const auto base = fit_beta(xs, ps, {}, grid, h, nullptr, &region, options.fit_rel);
    if (region.size() < 5) throw Error(ErrorCode::MaskTooSmall, "fewer than 5 grid points in the fit region");

    BetaEstimate est;
    est.beta_squared = base.beta2;
    est.beta = std::sqrt(std::max(0.0, base.beta2));
    est.bandwidth = h;
    est.fit_points = region.size();
    for (std::size_t i : region) est.x.push_back(grid[i]);
    est.var_p = base.var;
    est.predicted_var = base.predicted;
    CompensatedSum rr;
    for (double r : base.residual) rr.add(r * r);
    est.residual_rms = std::sqrt(rr.value() / static_cast<double>(region.size()));

    if (options.bootstrap >= 2) {
        std::vector<double> betas;
        std::vector<CompensatedSum> r1(region.size()), r2(region.size());
        std::vector<double> weights(xs.size());
        std::vector<double> mult(n);
        for (std::size_t b = 0; b < options.bootstrap; ++b) {
            std::mt19937_64 rng(stream_seed(options.seed, b));
            std::uniform_int_distribution<std::size_t> pick(0, n - 1);
            std::fill(mult.begin(), mult.end(), 0.0);
            for (std::size_t k = 0; k < n; ++k) mult[pick(rng)] += 1.0;
            for (std::size_t s = 0; s < snapshots.size(); ++s)
                std::copy(mult.begin(), mult.end(), weights.begin() + static_cast<std::ptrdiff_t>(s * n));
            const auto f = fit_beta(xs, ps, weights, grid, h, &region, nullptr, options.fit_rel);
            betas.push_back(std::sqrt(std::max(0.0, f.beta2)));
            for (std::size_t i = 0; i < region.size(); ++i) {
                r1[i].add(f.residual[i]);
                r2[i].add(f.residual[i] * f.residual[i]);
            }
        }
        const double B = static_cast<double>(options.bootstrap);
        const double mb = compensated_sum(betas) / B;
        CompensatedSum vb;
        for (double v : betas) vb.add((v - mb) * (v - mb));
        est.std_error = std::sqrt(vb.value() / (B - 1.0));
        CompensatedSum floor2;
        for (std::size_t i = 0; i < region.size(); ++i) {
            const double mean = r1[i].value() / B;
            floor2.add(std::max(0.0, (r2[i].value() / B - mean * mean) * B / (B - 1.0)));
        }
        est.noise_floor = std::sqrt(floor2.value() / static_cast<double>(region.size()));
    }
    return est;
}

}  // namespace sedqm
