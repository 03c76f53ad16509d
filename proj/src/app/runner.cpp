#include "sedqm/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

#include "sedqm/ensemble.hpp"
#include "sedqm/hydro.hpp"
#include "sedqm/io.hpp"
#include "sedqm/phase_stats.hpp"
#include "sedqm/schrod.hpp"
#include "sedqm/varmin.hpp"
#include "sedqm/wigner.hpp"

#ifndef SEDQM_VERSION
#define SEDQM_VERSION "0.0.0"
#endif

namespace sedqm {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

class Run {
public:
    explicit Run(const RunConfig& c) : cfg(c), dir(fs::path(c.output_dir) / c.experiment) {}

    template <class F>
    void stage(const std::string& name, F&& body) {
        current_ = name;
        const auto t0 = std::chrono::steady_clock::now();
        body();
        timing_[name] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }

    void diag(const std::string& key, json value) { diagnostics_[key] = std::move(value); }

    void check(const std::string& name, double value, const std::string& relation, double threshold) {
        const bool ok = relation == "<=" ? value <= threshold : value >= threshold;
        checks.push_back({name, value, threshold, relation, ok && std::isfinite(value)});
    }

    fs::path file(const std::string& name) {
        outputs_.push_back(name);
        return dir / name;
    }

    json manifest(const std::string& status, const std::string& error) const {
        json c = json::array();
        for (const auto& k : checks)
            c.push_back({{"name", k.name}, {"value", k.value}, {"relation", k.relation}, {"threshold", k.threshold},
                         {"pass", k.pass}});
        json m{{"experiment", cfg.experiment},
               {"version", SEDQM_VERSION},
               {"config", cfg.to_json()},
               {"status", status},
               {"diagnostics", diagnostics_},
               {"checks", c},
               {"outputs", outputs_},
               {"timing", timing_}};
        m["failed_stage"] = status == "error" ? json(current_) : json(nullptr);
        m["error"] = error.empty() ? json(nullptr) : json(error);
        return m;
    }

    const RunConfig& cfg;
    fs::path dir;
    std::vector<Check> checks;

private:
    std::string current_ = "setup";
    json diagnostics_ = json::object();
    json timing_ = json::object();
    std::vector<std::string> outputs_;
};

double linf(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

std::vector<double> iota(std::size_t n) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<double>(i);
    return v;
}

std::vector<double> axis(const Grid1D& g) {
    std::vector<double> v(g.n);
    for (std::size_t i = 0; i < g.n; ++i) v[i] = g[i];
    return v;
}

std::vector<double> real_part(const WaveFunction& wf) {
    std::vector<double> v(wf.psi.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = wf.psi[i].real();
    return v;
}

// ---- sed-relax and balance -------------------------------------------------

void relaxation(Run& run, bool calibrate) {
    const auto& c = run.cfg;
    const auto V = c.potential.build(c.params.mass);
    const double w0 = c.potential.omega;
    const double target_energy = 0.5 * c.params.hbar * w0;
    const EvolveOptions eo{c.threads};

    std::shared_ptr<const ModeSet> modes;
    run.stage("field", [&] {
        if (!c.field_enabled) return;
        SpectralConfig sc = c.field;
        sc.seed = stream_seed(c.seed, 0);
        modes = std::make_shared<const ModeSet>(build_mode_set(sc, c.params));
        run.diag("field_modes", modes->size());
        run.diag("field_variance", modes->variance());
        run.diag("recurrence_time", modes->recurrence_time());
    });

    std::vector<Snapshot> snaps;
    run.stage("evolve", [&] {
        Ensemble e;
        e.params = c.params;
        e.potential = V;
        e.modes = modes;
        e.members.assign(c.members, ParticleState{});
        std::vector<double> times;
        for (std::size_t k = 0;; ++k) {
            const double t = static_cast<double>(k) * c.snapshot_interval;
            if (t > c.t_final * (1.0 - 1e-12)) break;
            times.push_back(t);
        }
        times.push_back(c.t_final);
        snaps = evolve_ensemble(e, c.t_final, c.dt, times, eo);
        std::vector<double> t, h;
        for (const auto& s : snaps) {
            t.push_back(s.t);
            h.push_back(mean_energy(s, V, c.params));
        }
        io::write_csv(run.file("energy_trace.csv"), {"t", "mean_energy"}, {t, h});
        const auto& last = snaps.back();
        io::write_csv(run.file("snapshot_final.csv"), {"member_id", "x", "p"}, {iota(c.members), last.x, last.p});
        run.diag("dt", c.dt);
    });

    std::vector<Snapshot> window;
    for (const auto& s : snaps)
        if (s.t >= c.window_start) window.push_back(s);

    run.stage("balance", [&] {
        const auto b = balance_report(window, V, c.params);
        run.diag("window_snapshots", window.size());
        run.diag("mean_energy", b.mean_energy);
        run.diag("energy_slope", b.energy_slope);
        run.diag("energy_slope_std_error", b.energy_slope_std_error);
        run.diag("absorbed_power", b.absorbed_power);
        run.diag("dissipated_power", b.dissipated_power);
        run.diag("imbalance", b.imbalance);
        run.check("stationary_energy_rel_error", std::abs(b.mean_energy - target_energy) / target_energy, "<=", 0.10);
        run.check("balance_abs_imbalance", std::abs(b.imbalance), "<=", 0.15);
    });

    if (calibrate) {
        run.stage("calibrate", [&] {
            CalibrationOptions co;
            co.seed = stream_seed(c.seed, 1);
            const auto est = calibrate_beta(window, c.x.grid(), V, c.params, co);
            run.diag("beta", est.beta);
            run.diag("beta_std_error", est.std_error);
            run.diag("beta_bandwidth", est.bandwidth);
            run.diag("beta_fit_points", est.fit_points);
            run.diag("dispersion_residual_rms", est.residual_rms);
            run.diag("dispersion_noise_floor", est.noise_floor);
            const double expected = 0.5 * c.params.hbar;
            run.check("beta_rel_error", std::abs(est.beta - expected) / expected, "<=", 0.15);
            run.check("dispersion_residual_over_noise_floor", est.residual_rms / est.noise_floor, "<=", 3.0);
            io::write_csv(run.file("beta_profile.csv"), {"x", "var_p", "predicted_var"},
                          {est.x, est.var_p, est.predicted_var});
        });
    }

    run.stage("control", [&] {
        // field off; phases spread evenly on the E = hbar w0 orbit
        Ensemble e;
        e.params = c.params;
        e.potential = V;
        const double energy = c.params.hbar * w0, m = c.params.mass;
        for (std::size_t k = 0; k < c.control_members; ++k) {
            const double phi = 2.0 * pi * static_cast<double>(k) / static_cast<double>(c.control_members);
            e.members.push_back({std::sqrt(2.0 * energy / m) / w0 * std::cos(phi),
                                 -std::sqrt(2.0 * m * energy) * std::sin(phi), 0.0});
        }
        std::vector<double> times;
        for (int k = 0; k <= 100; ++k) times.push_back(c.control_span * k / 100.0);
        const auto cs = evolve_ensemble(e, c.control_span, c.dt, times, eo);
        const double rate = fit_decay_rate(cs, V, c.params);
        const double expected = c.params.damping_time * w0 * w0;
        run.diag("control_decay_rate", rate);
        run.diag("control_expected_rate", expected);
        run.check("control_decay_rate_rel_error", std::abs(rate - expected) / expected, "<=", 0.05);
        std::vector<double> t, h;
        for (const auto& s : cs) {
            t.push_back(s.t);
            h.push_back(mean_energy(s, V, c.params));
        }
        io::write_csv(run.file("control_decay.csv"), {"t", "mean_energy"}, {t, h});
    });
}

// ---- equivalence -------------------------------------------------------------

void equivalence(Run& run) {
    const auto& c = run.cfg;
    const auto V = c.potential.build(c.params.mass);
    const double beta = c.params.beta, m = c.params.mass, w = c.potential.omega;
    const auto& s = c.state;
    const auto g = c.x.grid();

    std::vector<double> rho_h, rho_s, rho_exact;
    run.stage("madelung", [&] {
        MadelungIntegrator mi(polar_decompose(coherent_state(g, beta, m, w, s.x0, s.p0)).state, V, c.params);
        mi.advance(c.t_final, mi.stable_step());
        rho_h = mi.state().rho;
        rho_exact = coherent_state(g, beta, m, w, s.x0, s.p0, c.t_final).density();
    });
    run.stage("schrodinger", [&] {
        // same lattice, walls one cell beyond the ends
        const auto gb = Grid1D::box_interior(g.min - g.dx, g.max() + g.dx, g.n);
        auto wf = coherent_state(gb, beta, m, w, s.x0, s.p0);
        const auto steps = static_cast<std::size_t>(std::ceil(c.t_final / (2.0 * pi / w / 8000.0)));
        SplitStepPropagator prop(gb, V, beta, m, c.t_final / static_cast<double>(steps));
        prop.advance(wf, steps);
        rho_s = wf.density();
        const double err = linf(rho_h, rho_s);
        run.diag("linf_hydro_vs_schrodinger", err);
        run.diag("linf_hydro_vs_exact", linf(rho_h, rho_exact));
        run.diag("linf_schrodinger_vs_exact", linf(rho_s, rho_exact));
        run.check("linf_hydro_vs_schrodinger", err, "<=", 1e-3);
        io::write_csv(run.file("density.csv"), {"x", "rho_hydro", "rho_schrodinger", "rho_exact"},
                      {axis(g), rho_h, rho_s, rho_exact});
    });
    run.stage("refinement", [&] {
        std::vector<double> ns, dxs, errs;
        for (std::size_t n : c.refinement) {
            const auto gr = Grid1D::linspace(c.x.min, c.x.max, n);
            MadelungIntegrator mi(polar_decompose(coherent_state(gr, beta, m, w, s.x0, s.p0)).state, V, c.params);
            mi.advance(c.t_final, mi.stable_step());
            ns.push_back(static_cast<double>(n));
            dxs.push_back(gr.dx);
            errs.push_back(linf(mi.state().rho, coherent_state(gr, beta, m, w, s.x0, s.p0, c.t_final).density()));
        }
        double order = std::numeric_limits<double>::infinity();
        json orders = json::array();
        for (std::size_t i = 1; i < errs.size(); ++i) {
            const double o = std::log(errs[i - 1] / errs[i]) / std::log(dxs[i - 1] / dxs[i]);
            orders.push_back(o);
            order = std::min(order, o);
        }
        run.diag("refinement_errors", errs);
        run.diag("refinement_orders", orders);
        // advertised rate O(dx^2 + dt^2)
        run.check("refinement_min_observed_order", order, ">=", 1.8);
        io::write_csv(run.file("refinement.csv"), {"n", "dx", "linf_error"}, {ns, dxs, errs});
    });
    run.stage("closure", [&] {
        // non-Gaussian node-free data: the tail continuation is no longer exact
        const auto gb = Grid1D::box_interior(g.min - g.dx, g.max() + g.dx, g.n);
        auto shaped = [&](const Grid1D& gr) {
            auto wf = coherent_state(gr, beta, m, w, s.x0, s.p0);
            for (std::size_t i = 0; i < gr.n; ++i) wf.psi[i] *= 1.0 + 0.3 * std::sin(gr[i]);
            const double scale = 1.0 / std::sqrt(wf.norm());
            for (auto& v : wf.psi) v *= scale;
            return wf;
        };
        MadelungIntegrator mi(polar_decompose(shaped(g)).state, V, c.params);
        mi.advance(c.t_final, mi.stable_step());
        auto wf = shaped(gb);
        const auto steps = static_cast<std::size_t>(std::ceil(c.t_final / (2.0 * pi / w / 8000.0)));
        SplitStepPropagator prop(gb, V, beta, m, c.t_final / static_cast<double>(steps));
        prop.advance(wf, steps);
        run.diag("non_gaussian_linf_hydro_vs_schrodinger", linf(mi.state().rho, wf.density()));
    });
}

// ---- wigner-contrast ---------------------------------------------------------

void wigner_contrast(Run& run) {
    const auto& c = run.cfg;
    const double beta = c.params.beta, m = c.params.mass, w = c.potential.omega, hbar = c.params.hbar;
    const auto xg = c.x.grid();
    const auto pg = c.p.grid();
    const auto zg = Grid1D::symmetric(c.z_step, c.z_half);
    const unsigned n = c.state.n;
    const auto psi0 = ho_eigenstate(0, xg, beta, m, w);
    const auto psin = ho_eigenstate(n, xg, beta, m, w);

    WignerGrid wn;
    run.stage("wigner", [&] {
        const auto w0 = wigner_transform(psi0, pg, "ho-0");
        wn = wigner_transform(psin, pg, "ho-" + std::to_string(n));
        const auto r0 = negativity_report(w0);
        const auto rn = negativity_report(wn);
        const auto m0 = marginals_check(w0, psi0);
        const auto mn = marginals_check(wn, psin);
        run.diag("ground_min", r0.min_value);
        run.diag("ground_negative_volume", r0.negative_volume);
        run.diag("state_min", rn.min_value);
        run.diag("state_min_at", {rn.x_at_min, rn.p_at_min});
        run.diag("state_negative_volume", rn.negative_volume);
        run.diag("state_max_imag", wn.max_imag);
        run.diag("purity", wigner_overlap(wn, wn, hbar));
        run.check("ground_wigner_min", r0.min_value, ">=", -1e-9);
        if (n == 1) run.check("first_excited_min_dev", std::abs(rn.min_value + 1.0 / pi), "<=", 1e-3);
        run.check("marginal_position_error", std::max(m0.position, mn.position), "<=", 1e-6);
        run.check("marginal_momentum_error", std::max(m0.momentum, mn.momentum), "<=", 1e-6);
        io::write_grid(run.file("wigner_ground.grd"), xg, pg, w0.values);
        io::write_grid(run.file("wigner_state.grd"), xg, pg, wn.values);
    });

    PhaseDensity q_ens, q_psi;
    run.stage("ensemble", [&] {
        // stationary ensemble of the oscillator: independent Gaussians with the ground-state widths
        std::mt19937_64 rng(stream_seed(c.seed, 2));
        std::normal_distribution<double> nx(0.0, std::sqrt(hbar / (2.0 * m * w)));
        std::normal_distribution<double> np(0.0, std::sqrt(m * hbar * w / 2.0));
        std::vector<double> xs(c.members), ps(c.members);
        for (std::size_t k = 0; k < c.members; ++k) {
            xs[k] = nx(rng);
            ps[k] = np(rng);
        }
        const auto q = estimate_density(xs, ps, xg, pg);
        q_ens = inverse_characteristic(characteristic_fn(q, zg), pg);
        const double floor = kde_noise_floor(q);
        const double mn = *std::min_element(q_ens.values.begin(), q_ens.values.end());
        run.diag("ensemble_min", mn);
        run.diag("ensemble_noise_floor", floor);
        run.diag("kde_bandwidth", {q.meta.bandwidth_x, q.meta.bandwidth_p});
        run.check("ensemble_min_over_noise_floor", mn / floor, ">=", -3.0);
        io::write_grid(run.file("q_ensemble.grd"), xg, pg, q_ens.values);
    });
    run.stage("psi-characteristic", [&] {
        q_psi = inverse_characteristic(characteristic_from_wavefunction(psin, zg), pg);
        const double mn = *std::min_element(q_psi.values.begin(), q_psi.values.end());
        run.diag("psi_reconstruction_min", mn);
        if (n == 1) run.check("psi_reconstruction_min", mn, "<=", -0.3);
        io::write_grid(run.file("q_psi.grd"), xg, pg, q_psi.values);
        io::write_grid_csv(run.file("contrast.csv"), xg, pg, {"q_ensemble", "q_psi", "wigner"},
                           {q_ens.values, q_psi.values, wn.values});
    });
}

// ---- ground-state ------------------------------------------------------------

void ground_state(Run& run) {
    const auto& c = run.cfg;
    const bool box = c.potential.kind == "box";
    const auto V = c.potential.build(c.params.mass);
    const auto g = box ? Grid1D::box_interior(0.0, c.potential.length, c.x.n) : c.x.grid();
    const double hbar = c.params.hbar, m = c.params.mass;

    VariationalResult res;
    run.stage("variational", [&] {
        res = minimize_ground_state(V, g, c.params, {c.tol, 2000000});
        run.diag("energy", res.energy);
        run.diag("residual", res.residual);
        run.diag("iterations", res.iterations);
        run.diag("wall_amplitude", res.wall_amplitude);
        run.diag("boundary_flag", res.boundary_flag);
        double rise = 0.0;
        for (std::size_t k = 1; k < res.history.size(); ++k)
            rise = std::max(rise, (res.history[k] - res.history[k - 1]) / std::abs(res.history[k - 1]));
        run.check("residual", res.residual, "<=", c.tol);
        run.check("history_max_relative_rise", rise, "<=", 1e-13);
        if (c.potential.kind == "harmonic")
            run.check("harmonic_energy_error", std::abs(res.energy - 0.5 * hbar * c.potential.omega), "<=", 1e-4);
        if (box) {
            const double L = c.potential.length;
            run.check("box_energy_error", std::abs(res.energy - pi * pi * hbar * hbar / (2.0 * m * L * L)), "<=",
                      1e-3);
        }
        io::write_csv(run.file("history.csv"), {"iteration", "energy"}, {iota(res.history.size()), res.history});
    });
    run.stage("oracle", [&] {
        const auto ep = tridiagonal_eigenpairs(V, g, c.params, 1).front();
        run.diag("oracle_energy", ep.energy);
        run.check("oracle_energy_diff", std::abs(res.energy - ep.energy), "<=", 10.0 * c.tol);
        io::write_csv(run.file("psi.csv"), {"x", "psi", "psi_oracle"}, {axis(g), real_part(res.psi), ep.psi});
    });
    run.stage("trials", [&] {
        std::mt19937_64 rng(stream_seed(c.seed, 3));
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const double centre = 0.5 * (g.min + g.max()), half = 0.5 * (g.max() - g.min);
        double lowest = std::numeric_limits<double>::infinity();
        std::vector<double> rho(g.n);
        for (std::size_t t = 0; t < c.trials; ++t) {
            const double a = 0.5 * u(rng) - 0.25, k = 0.5 + 2.5 * u(rng);
            const double shift = (u(rng) - 0.5) * (box ? 0.0 : 0.1 * half);
            const double width = (0.08 + 0.1 * u(rng)) * half;
            // box envelopes sin^power so that rho meets the edge-decay precondition
            const double power = 2.5 + 1.5 * u(rng);
            for (std::size_t i = 0; i < g.n; ++i) {
                const double y = g[i] - centre;
                const double env = box ? std::pow(std::sin(pi * g[i] / c.potential.length), power)
                                       : std::exp(-(y - shift) * (y - shift) / (2.0 * width * width));
                const double psi = env * (1.0 + a * std::cos(k * y));
                rho[i] = psi * psi;
            }
            const double z = integrate(g, rho);
            for (double& r : rho) r /= z;
            const auto e = energy_functional(g, rho, V, c.params);
            lowest = std::min(lowest, std::min(e.curvature_form, e.gradient_form));
        }
        run.diag("trial_lowest_energy", lowest);
        run.check("variational_bound_margin", lowest - res.energy, ">=", 0.0);
    });
}

// ---- qpot --------------------------------------------------------------------

void qpot(Run& run) {
    const auto& c = run.cfg;
    const double beta = c.params.beta, m = c.params.mass, w = c.potential.omega;
    const auto V = c.potential.build(m);
    const auto g = c.x.grid();
    const auto rho = ho_eigenstate(0, g, beta, m, w).density();

    run.stage("single", [&] {
        const auto q = quantum_potential(g, rho, beta, m);
        const auto v = V.sample(g);
        std::vector<double> qv(g.n);
        double dev = 0.0;
        for (std::size_t i = 0; i < g.n; ++i) {
            qv[i] = q[i] + v[i];
            if (std::isfinite(qv[i])) dev = std::max(dev, std::abs(qv[i] - 0.5 * c.params.hbar * w));
        }
        run.check("ground_q_plus_v_dev", dev, "<=", 1e-6);
        io::write_csv(run.file("qpot.csv"), {"x", "rho", "q", "q_plus_v"}, {axis(g), rho, q, qv});

        const auto ring = Grid1D::periodic(0.0, 2.0 * pi, 128);
        std::vector<double> flat(ring.n, 1.0 / (2.0 * pi));
        const auto qp = quantum_potential(ring, flat, beta, m);
        double qmax = 0.0;
        for (double x : qp) qmax = std::max(qmax, std::abs(x));
        run.check("plane_wave_q_max", qmax, "<=", 1e-10);
    });
    run.stage("two-particle", [&] {
        const std::vector<double> ones(g.n * g.n, 1.0);
        const auto single = quantum_potential(g, rho, beta, m);
        const auto two = quantum_potential_two_particle(g, g, rho, rho, ones, beta, m);
        double dev = 0.0;
        for (std::size_t i = 0; i < g.n; ++i)
            for (std::size_t j = 0; j < g.n; ++j)
                if (std::isfinite(single[i])) dev = std::max(dev, std::abs(two[i * g.n + j] - single[i]));
        run.check("two_particle_reduction_dev", dev, "<=", 1e-12);
        // correlated pair: rho12 = exp(-(x1 - x2)^2 / 2)
        std::vector<double> corr(g.n * g.n);
        for (std::size_t i = 0; i < g.n; ++i)
            for (std::size_t j = 0; j < g.n; ++j) corr[i * g.n + j] = std::exp(-0.5 * (g[i] - g[j]) * (g[i] - g[j]));
        const auto qc = quantum_potential_two_particle(g, g, rho, rho, corr, beta, m);
        io::write_grid(run.file("qpot_two_particle.grd"), g, g, qc);
        io::write_grid_csv(run.file("qpot_two_particle.csv"), g, g, {"q1"}, {qc});
    });
}

void remove_previous_outputs(const fs::path& dir) {
    const auto manifest = dir / "manifest.json";
    if (!fs::exists(manifest)) return;
    try {
        const auto old = json::parse(io::read_text(manifest));
        for (const auto& f : old.at("outputs")) fs::remove(dir / f.get<std::string>());
    } catch (const std::exception&) {
    }
    fs::remove(manifest);
}

}  // namespace

RunResult run_experiment(const RunConfig& config) {
    Run run(config);
    fs::create_directories(run.dir);
    remove_previous_outputs(run.dir);
    RunResult result;
    result.directory = run.dir;
    std::string status = "pass", error;
    try {
        const auto& e = config.experiment;
        if (e == "sed-relax") relaxation(run, true);
        else if (e == "balance") relaxation(run, false);
        else if (e == "equivalence") equivalence(run);
        else if (e == "wigner-contrast") wigner_contrast(run);
        else if (e == "ground-state") ground_state(run);
        else if (e == "qpot") qpot(run);
        else throw Error(ErrorCode::Config, "experiment: unknown experiment '" + e + "'");
        const bool ok = std::all_of(run.checks.begin(), run.checks.end(), [](const Check& k) { return k.pass; });
        status = ok ? "pass" : "fail";
        result.exit_code = ok ? 0 : 1;
    } catch (const std::exception& ex) {
        status = "error";
        error = ex.what();
        result.exit_code = 3;
    }
    result.manifest = run.manifest(status, error);
    result.checks = run.checks;
    io::write_text(run.dir / "manifest.json", result.manifest.dump(2) + "\n");
    return result;
}

}  // namespace sedqm
