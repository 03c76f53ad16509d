#include "sedqm/hydro.hpp"

#include <algorithm>
#include <cmath>

namespace sedqm {

namespace {

// Derivatives of ln rho per supported segment; NaN outside.
void log_derivatives(const Grid1D& grid, std::span<const double> rho, std::span<const std::uint8_t> mask,
                     int accuracy, std::vector<double>& d1, std::vector<double>& d2) {
    d1.assign(grid.n, nan);
    d2.assign(grid.n, nan);
    const auto segs = mask_segments(mask);
    const bool ring = grid.bc == Boundary::periodic && segs.size() == 1 && segs[0].size() == grid.n;
    for (const auto& seg : segs) {
        if (seg.size() < 4) continue;
        std::vector<double> L(seg.size());
        for (std::size_t i = 0; i < seg.size(); ++i) L[i] = std::log(rho[seg.begin + i]);
        const Boundary bc = ring ? Boundary::periodic : Boundary::box;
        const auto a = derivative(L, grid.dx, 1, accuracy, bc);
        const auto b = derivative(L, grid.dx, 2, accuracy, bc);
        std::copy(a.begin(), a.end(), d1.begin() + static_cast<std::ptrdiff_t>(seg.begin));
        std::copy(b.begin(), b.end(), d2.begin() + static_cast<std::ptrdiff_t>(seg.begin));
    }
}

double wrap_pi(double a) { return a - 2.0 * pi * std::round(a / (2.0 * pi)); }

// Removes whole-turn jumps between neighbours inside each supported segment.
std::vector<double> unwrap_on_mask(std::span<const double> s, std::span<const std::uint8_t> mask) {
    std::vector<double> out(s.begin(), s.end());
    for (const auto& seg : mask_segments(mask))
        for (std::size_t i = seg.begin + 1; i < seg.end; ++i) out[i] = out[i - 1] + wrap_pi(s[i] - s[i - 1]);
    return out;
}

}  // namespace

std::vector<double> quantum_potential(const Grid1D& grid, std::span<const double> rho, double beta, double mass,
                                      double mask_rel) {
    if (rho.size() != grid.n) throw Error(ErrorCode::GridMismatch, "density size does not match grid");
    const auto mask = support_mask(rho, mask_rel);
    std::vector<double> d1, d2;
    log_derivatives(grid, rho, mask, 6, d1, d2);
    std::vector<double> q(grid.n, nan);
    std::size_t valid = 0;
    const double c = beta * beta / mass;
    for (std::size_t i = 0; i < grid.n; ++i) {
        if (std::isnan(d2[i])) continue;
        q[i] = -c * d2[i] - 0.5 * c * d1[i] * d1[i];
        ++valid;
    }
    if (valid == 0) throw Error(ErrorCode::MaskTooSmall, "quantum potential: empty support mask");
    return q;
}

std::vector<double> quantum_potential_two_particle(const Grid1D& x1, const Grid1D& x2, std::span<const double> rho1,
                                                   std::span<const double> rho2, std::span<const double> rho12,
                                                   double beta, double mass, double mask_rel) {
    if (rho1.size() != x1.n || rho2.size() != x2.n || rho12.size() != x1.n * x2.n)
        throw Error(ErrorCode::GridMismatch, "two-particle densities do not match their grids");
    for (double r : rho12)
        if (!(r > 0)) throw Error(ErrorCode::InvalidArgument, "correlation factor rho12 must be positive");
    const auto q1 = quantum_potential(x1, rho1, beta, mass, mask_rel);
    const auto mask1 = support_mask(rho1, mask_rel);
    std::vector<double> l1d1, l1d2;
    log_derivatives(x1, rho1, mask1, 6, l1d1, l1d2);
    const double c = 2.0 * beta * beta / mass;
    const std::size_t n1 = x1.n, n2 = x2.n;
    std::vector<double> out(n1 * n2, nan);
    std::vector<double> col(n1);
    std::vector<std::uint8_t> all(n1, 1);
    std::vector<double> c1, c2;
    for (std::size_t j = 0; j < n2; ++j) {
        for (std::size_t i = 0; i < n1; ++i) col[i] = rho12[i * n2 + j];
        log_derivatives(x1, col, all, 6, c1, c2);
        for (std::size_t i = 0; i < n1; ++i) {
            if (std::isnan(q1[i])) continue;
            const double cross = 0.5 * c2[i] + 0.25 * c1[i] * c1[i] + 0.5 * l1d1[i] * c1[i];
            out[i * n2 + j] = q1[i] - c * cross;
        }
    }
    return out;
}

std::vector<double> flow_velocity(const Grid1D& grid, std::span<const double> phase, double beta, double mass) {
    auto v = derivative(phase, grid.dx, 1, 4, grid.bc);
    for (double& x : v) x *= 2.0 * beta / mass;
    return v;
}

MadelungIntegrator::MadelungIntegrator(const HydroState& initial, const Potential& potential,
                                       const PhysicalParams& params, const MadelungOptions& options)
    : grid_(initial.grid), potential_(potential), params_(params), options_(options), t_(initial.t) {
    if (initial.rho.size() != grid_.n || initial.phase.size() != grid_.n)
        throw Error(ErrorCode::GridMismatch, "hydro state arrays do not match the grid");
    if (grid_.n < 8) throw Error(ErrorCode::InvalidArgument, "hydro grid needs at least 8 points");
    for (double r : initial.rho)
        if (!(r > 0))
            throw Error(ErrorCode::NodeFormation,
                        "density must be strictly positive for hydrodynamic stepping; use the Schrodinger backend");
    if (find_interior_node(initial.rho, options_.node_rel) >= 0)
        throw Error(ErrorCode::NodeFormation, "initial density has an interior node; use the Schrodinger backend");
    potential_values_ = potential_.sample(grid_);
    log_rho_.resize(grid_.n);
    for (std::size_t i = 0; i < grid_.n; ++i) log_rho_[i] = std::log(initial.rho[i]);
    phase_ = initial.phase;
    close_tails(log_rho_, phase_);
}

void MadelungIntegrator::rhs(const std::vector<double>& L, const std::vector<double>& S, std::vector<double>& dL,
                             std::vector<double>& dS) const {
    const double b = params_.beta, m = params_.mass;
    const auto L1 = derivative(L, grid_.dx, 1, 4, grid_.bc);
    const auto L2 = derivative(L, grid_.dx, 2, 4, grid_.bc);
    const auto S1 = derivative(S, grid_.dx, 1, 4, grid_.bc);
    const auto S2 = derivative(S, grid_.dx, 2, 4, grid_.bc);
    dL.resize(grid_.n);
    dS.resize(grid_.n);
    for (std::size_t i = 0; i < grid_.n; ++i) {
        const double v = 2.0 * b / m * S1[i];
        const double dv = 2.0 * b / m * S2[i];
        const double q = -b * b / m * L2[i] - 0.5 * b * b / m * L1[i] * L1[i];
        dL[i] = -(v * L1[i] + dv);
        dS[i] = -(2.0 * b * b / m * S1[i] * S1[i] + potential_values_[i] + q) / (2.0 * b);
    }
}

void MadelungIntegrator::close_tails(std::vector<double>& L, std::vector<double>& S) const {
    const std::size_t n = grid_.n;
    const auto peak = static_cast<std::size_t>(std::max_element(L.begin(), L.end()) - L.begin());
    const double floor = L[peak] + std::log(options_.mask_rel);
    std::size_t a = peak, b = peak + 1;
    while (a > 0 && L[a - 1] > floor) --a;
    while (b < n && L[b] > floor) ++b;
    if (b - a < 3) throw Error(ErrorCode::NodeFormation, "supported core shrank below three points");
    // quadratic in the outward cell count k through the three outermost core
    // points e, e - dir, e - 2 dir; the log-density continuation may not curve up
    auto extend = [&](std::vector<double>& f, std::size_t e, long dir, bool concave) {
        const auto at = [&](long k) { return static_cast<std::size_t>(static_cast<long>(e) + dir * k); };
        double c = 0.5 * (f[at(-2)] - 2.0 * f[at(-1)] + f[e]);
        if (concave) c = std::min(c, 0.0);
        const double slope = f[e] - f[at(-1)] + c;
        const long count = dir < 0 ? static_cast<long>(e) : static_cast<long>(n - 1 - e);
        for (long k = 1; k <= count; ++k) f[at(k)] = f[e] + slope * static_cast<double>(k) + c * static_cast<double>(k * k);
    };
    if (grid_.bc == Boundary::periodic && a == 0 && b == n) return;
    for (auto* f : {&L, &S}) {
        if (a > 0) extend(*f, a, -1, f == &L);
        if (b < n) extend(*f, b - 1, 1, f == &L);
    }
}

double MadelungIntegrator::max_speed() const {
    std::vector<double> rho(grid_.n);
    for (std::size_t i = 0; i < grid_.n; ++i) rho[i] = std::exp(log_rho_[i]);
    const auto mask = support_mask(rho, options_.mask_rel);
    const auto v = flow_velocity(grid_, phase_, params_.beta, params_.mass);
    double vmax = 0.0;
    for (std::size_t i = 0; i < grid_.n; ++i)
        if (mask[i]) vmax = std::max(vmax, std::abs(v[i]));
    return vmax;
}

double MadelungIntegrator::stable_step() const {
    const double dispersive = 0.5 * grid_.dx * grid_.dx * params_.mass / (2.0 * params_.beta);
    const double vmax = max_speed();
    const double advective = vmax > 0 ? 0.5 * grid_.dx / vmax : std::numeric_limits<double>::infinity();
    return std::min(dispersive, advective);
}

void MadelungIntegrator::step(double dt) {
    if (!(dt > 0)) throw Error(ErrorCode::InvalidArgument, "time step must be positive");
    const double disp = 2.0 * params_.beta / params_.mass * dt / (grid_.dx * grid_.dx);
    if (disp > 0.5 * (1.0 + 1e-12))
        throw Error(ErrorCode::CflViolation,
                    "dispersive bound violated: (2 beta/m) dt/dx^2 = " + std::to_string(disp) + " > 0.5");
    const double adv = max_speed() * dt;
    if (adv > 0.5 * grid_.dx * (1.0 + 1e-12))
        throw Error(ErrorCode::CflViolation, "advective bound violated: max|v| dt exceeds dx/2");

    const std::size_t n = grid_.n;
    std::vector<double> k1L, k1S, k2L, k2S, k3L, k3S, k4L, k4S, L(n), S(n);
    rhs(log_rho_, phase_, k1L, k1S);
    for (std::size_t i = 0; i < n; ++i) {
        L[i] = log_rho_[i] + 0.5 * dt * k1L[i];
        S[i] = phase_[i] + 0.5 * dt * k1S[i];
    }
    close_tails(L, S);
    rhs(L, S, k2L, k2S);
    for (std::size_t i = 0; i < n; ++i) {
        L[i] = log_rho_[i] + 0.5 * dt * k2L[i];
        S[i] = phase_[i] + 0.5 * dt * k2S[i];
    }
    close_tails(L, S);
    rhs(L, S, k3L, k3S);
    for (std::size_t i = 0; i < n; ++i) {
        L[i] = log_rho_[i] + dt * k3L[i];
        S[i] = phase_[i] + dt * k3S[i];
    }
    close_tails(L, S);
    rhs(L, S, k4L, k4S);
    for (std::size_t i = 0; i < n; ++i) {
        log_rho_[i] += dt / 6.0 * (k1L[i] + 2.0 * k2L[i] + 2.0 * k3L[i] + k4L[i]);
        phase_[i] += dt / 6.0 * (k1S[i] + 2.0 * k2S[i] + 2.0 * k3S[i] + k4S[i]);
    }
    close_tails(log_rho_, phase_);
    t_ += dt;

    std::vector<double> rho(n);
    for (std::size_t i = 0; i < n; ++i) {
        rho[i] = std::exp(log_rho_[i]);
        if (!std::isfinite(log_rho_[i]) || !std::isfinite(phase_[i]))
            throw Error(ErrorCode::NodeFormation, "hydrodynamic state became singular; use the Schrodinger backend");
    }
    const long node = find_interior_node(rho, options_.node_rel);
    if (node >= 0)
        throw Error(ErrorCode::NodeFormation, "density node forming near x = " + std::to_string(grid_[static_cast<std::size_t>(node)]) +
                                                  "; the Madelung form is singular there, use the Schrodinger backend");
}

void MadelungIntegrator::advance(double span, double dt_max) {
    if (span <= 0) return;
    const double dt_cap = std::min(dt_max, stable_step());
    const auto steps = static_cast<std::size_t>(std::ceil(span / dt_cap - 1e-9));
    const double dt = span / static_cast<double>(std::max<std::size_t>(steps, 1));
    const double t_end = t_ + span;
    for (std::size_t k = 0; k < steps; ++k) step(dt);
    t_ = t_end;
}

HydroState MadelungIntegrator::state() const {
    HydroState h{grid_, std::vector<double>(grid_.n), phase_, t_};
    for (std::size_t i = 0; i < grid_.n; ++i) h.rho[i] = std::exp(log_rho_[i]);
    return h;
}

HydroState step_madelung(const HydroState& h, double dt, const Potential& potential, const PhysicalParams& params) {
    MadelungIntegrator integ(h, potential, params);
    integ.step(dt);
    return integ.state();
}

HamiltonJacobiResidual hamilton_jacobi_residual(std::span<const HydroState> series, const Potential& potential,
                                                const PhysicalParams& params, double mask_rel) {
    if (series.size() < 3) throw Error(ErrorCode::InvalidArgument, "Hamilton-Jacobi residual needs >= 3 slices");
    const Grid1D& g = series.front().grid;
    for (const auto& s : series)
        if (!s.grid.same_as(g) || s.rho.size() != g.n || s.phase.size() != g.n)
            throw Error(ErrorCode::GridMismatch, "Hamilton-Jacobi residual needs identical grids");
    const double b = params.beta, m = params.mass;
    const auto V = potential.sample(g);

    std::vector<std::vector<double>> S(series.size());
    std::vector<std::vector<std::uint8_t>> masks(series.size());
    for (std::size_t k = 0; k < series.size(); ++k) {
        masks[k] = support_mask(series[k].rho, mask_rel);
        S[k] = unwrap_on_mask(series[k].phase, masks[k]);
    }

    HamiltonJacobiResidual out;
    for (std::size_t k = 1; k + 1 < series.size(); ++k) {
        const double dt = 0.5 * (series[k + 1].t - series[k - 1].t);
        if (!(dt > 0)) throw Error(ErrorCode::InvalidArgument, "slice times must increase");
        // anchor: supported point nearest the grid centre
        std::size_t anchor = g.center_index();
        for (std::size_t d = 0; d < g.n; ++d) {
            if (anchor + d < g.n && masks[k][anchor + d]) { anchor += d; break; }
            if (anchor >= d && masks[k][anchor - d]) { anchor -= d; break; }
        }
        auto aligned = [&](std::size_t j) {
            const double shift = 2.0 * pi * std::round((S[k][anchor] - S[j][anchor]) / (2.0 * pi));
            std::vector<double> s = S[j];
            for (double& v : s) v += shift;
            return s;
        };
        const auto Sm = aligned(k - 1), Sp = aligned(k + 1);
        const auto q = quantum_potential(g, series[k].rho, b, m, mask_rel);
        std::vector<double> r(g.n, nan);
        for (const auto& seg : mask_segments(masks[k])) {
            if (seg.size() < 4) continue;
            std::vector<double> s(S[k].begin() + static_cast<std::ptrdiff_t>(seg.begin),
                                  S[k].begin() + static_cast<std::ptrdiff_t>(seg.end));
            const bool ring = g.bc == Boundary::periodic && seg.size() == g.n;
            const auto s1 = derivative(s, g.dx, 1, 4, ring ? Boundary::periodic : Boundary::box);
            for (std::size_t i = seg.begin; i < seg.end; ++i) {
                if (!masks[k - 1][i] || !masks[k + 1][i] || std::isnan(q[i])) continue;
                const double dsdt = (Sp[i] - Sm[i]) / (2.0 * dt);
                const double sx = s1[i - seg.begin];
                r[i] = 2.0 * b * dsdt + 2.0 * b * b / m * sx * sx + q[i] + V[i];
                out.linf = std::max(out.linf, std::abs(r[i]));
            }
        }
        out.t.push_back(series[k].t);
        out.residual.push_back(std::move(r));
    }
    return out;
}

}  // namespace sedqm
