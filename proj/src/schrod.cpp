#include "sedqm/schrod.hpp"

#include <algorithm>
#include <cmath>

#include "sedqm/fft.hpp"

namespace sedqm {

std::vector<double> WaveFunction::density() const {
    std::vector<double> rho(psi.size());
    for (std::size_t i = 0; i < psi.size(); ++i) rho[i] = std::norm(psi[i]);
    return rho;
}

double WaveFunction::norm() const { return integrate(grid, density()); }

namespace {

// Angular wavenumber of spectral index k.
double wavenumber(const Grid1D& g, std::size_t k) {
    if (g.bc == Boundary::box) return pi * static_cast<double>(k + 1) / (static_cast<double>(g.n + 1) * g.dx);
    const long n = static_cast<long>(g.n);
    const long kk = static_cast<long>(k) <= n / 2 ? static_cast<long>(k) : static_cast<long>(k) - n;
    return 2.0 * pi * static_cast<double>(kk) / (static_cast<double>(n) * g.dx);
}

std::vector<cplx> spectrum(const Grid1D& g, std::span<const cplx> psi) {
    std::vector<cplx> c(psi.begin(), psi.end());
    if (g.bc == Boundary::box) {
        SineTransform(g.n).apply(c);
    } else {
        ComplexFft(g.n).forward(c);
    }
    return c;
}

double phase_of(cplx z) { return std::arg(z); }

double wrap_pi(double a) { return a - 2.0 * pi * std::round(a / (2.0 * pi)); }

}  // namespace

double spectral_tail_fraction(const WaveFunction& wf) {
    const Grid1D& g = wf.grid;
    const auto c = spectrum(g, wf.psi);
    CompensatedSum total, tail;
    for (std::size_t k = 0; k < g.n; ++k) {
        const double w = std::norm(c[k]);
        total.add(w);
        bool outer;
        if (g.bc == Boundary::box) {
            outer = 8 * (k + 1) > 7 * g.n;
        } else {
            const std::size_t dist = std::min(k, g.n - k);  // distance from zero frequency
            outer = 8 * dist > 7 * (g.n / 2);
        }
        if (outer) tail.add(w);
    }
    return total.value() > 0 ? tail.value() / total.value() : 0.0;
}

SplitStepPropagator::SplitStepPropagator(const Grid1D& grid, const Potential& potential, double beta, double mass,
                                         double dt)
    : grid_(grid), dt_(dt) {
    if (!(dt > 0)) throw Error(ErrorCode::InvalidArgument, "time step must be positive");
    if (!(beta > 0) || !(mass > 0)) throw Error(ErrorCode::InvalidArgument, "beta and mass must be positive");
    if (grid.n < 4) throw Error(ErrorCode::InvalidArgument, "grid too small");
    const auto V = potential.sample(grid);
    half_potential_.resize(grid.n);
    kinetic_.resize(grid.n);
    for (std::size_t i = 0; i < grid.n; ++i) half_potential_[i] = std::polar(1.0, -V[i] * dt / (4.0 * beta));
    double scale = 1.0;
    if (grid.bc == Boundary::box) {
        dst_ = std::make_unique<SineTransform>(grid.n);
        scale = 1.0 / (2.0 * static_cast<double>(grid.n + 1));
    } else {
        fft_ = std::make_unique<ComplexFft>(grid.n);
        scale = 1.0 / static_cast<double>(grid.n);
    }
    for (std::size_t k = 0; k < grid.n; ++k) {
        const double kk = wavenumber(grid, k);
        kinetic_[k] = scale * std::polar(1.0, -beta * kk * kk * dt / mass);
    }
}

SplitStepPropagator::~SplitStepPropagator() = default;

void SplitStepPropagator::step(WaveFunction& wf) {
    if (!wf.grid.same_as(grid_) || wf.psi.size() != grid_.n)
        throw Error(ErrorCode::GridMismatch, "wavefunction grid differs from the propagator grid");
    auto& psi = wf.psi;
    for (std::size_t i = 0; i < grid_.n; ++i) psi[i] *= half_potential_[i];
    if (dst_) {
        dst_->apply(psi);
        for (std::size_t k = 0; k < grid_.n; ++k) psi[k] *= kinetic_[k];
        dst_->apply(psi);
    } else {
        fft_->forward(psi);
        for (std::size_t k = 0; k < grid_.n; ++k) psi[k] *= kinetic_[k];
        fft_->backward(psi);
    }
    for (std::size_t i = 0; i < grid_.n; ++i) psi[i] *= half_potential_[i];
    wf.t += dt_;
}

void SplitStepPropagator::advance(WaveFunction& wf, std::size_t steps) {
    const double t0 = wf.t;
    for (std::size_t s = 0; s < steps; ++s) step(wf);
    wf.t = t0 + static_cast<double>(steps) * dt_;
}

WaveFunction step_schrodinger(const WaveFunction& wf, double dt, const Potential& potential) {
    const double tail = spectral_tail_fraction(wf);
    if (tail >= 1e-10)
        throw Error(ErrorCode::Resolution, "grid does not resolve the state: outer spectral eighth holds " +
                                               std::to_string(tail) + " of the norm (limit 1e-10)");
    SplitStepPropagator prop(wf.grid, potential, wf.beta, wf.mass, dt);
    WaveFunction out = wf;
    prop.step(out);
    return out;
}

double energy_expectation(const WaveFunction& wf, const Potential& potential) {
    const Grid1D& g = wf.grid;
    const auto c = spectrum(g, wf.psi);
    CompensatedSum kin, tot;
    for (std::size_t k = 0; k < g.n; ++k) {
        const double kk = wavenumber(g, k);
        kin.add(std::norm(c[k]) * kk * kk);
        tot.add(std::norm(c[k]));
    }
    const double hbar = wf.hbar();
    const double kinetic = hbar * hbar / (2.0 * wf.mass) * kin.value() / tot.value();
    const auto V = potential.sample(g);
    const auto rho = wf.density();
    std::vector<double> vr(g.n);
    for (std::size_t i = 0; i < g.n; ++i) vr[i] = V[i] * rho[i];
    return kinetic + integrate(g, vr) / integrate(g, rho);
}

std::vector<cplx> spectral_derivative(const Grid1D& grid, std::span<const cplx> psi) {
    const bool box = grid.bc == Boundary::box;
    const std::size_t n = box ? grid.n + 1 : grid.n;
    std::vector<cplx> c(n, cplx{});
    std::copy(psi.begin(), psi.end(), c.begin());
    ComplexFft fft(n);
    fft.forward(c);
    const long nn = static_cast<long>(n);
    for (std::size_t k = 0; k < n; ++k) {
        long kk = static_cast<long>(k) <= nn / 2 ? static_cast<long>(k) : static_cast<long>(k) - nn;
        if (n % 2 == 0 && kk == nn / 2) kk = 0;  // Nyquist mode has no odd derivative
        const double w = 2.0 * pi * static_cast<double>(kk) / (static_cast<double>(n) * grid.dx);
        c[k] *= cplx{0.0, w} / static_cast<double>(n);
    }
    fft.backward(c);
    c.resize(grid.n);
    return c;
}

PolarDecomposition polar_decompose(const WaveFunction& wf, double mask_rel) {
    const Grid1D& g = wf.grid;
    PolarDecomposition out;
    out.state.grid = g;
    out.state.t = wf.t;
    out.state.rho = wf.density();
    out.mask = support_mask(out.state.rho, mask_rel);
    // a node between two lattice points shows up as a phase jump of exactly pi
    std::vector<Segment> segs;
    for (const auto& seg : mask_segments(out.mask)) {
        std::size_t start = seg.begin;
        for (std::size_t i = seg.begin + 1; i < seg.end; ++i) {
            const double jump = std::abs(wrap_pi(phase_of(wf.psi[i]) - phase_of(wf.psi[i - 1])));
            if (jump > pi * (1.0 - 1e-9)) {
                segs.push_back({start, i});
                start = i;
            }
        }
        segs.push_back({start, seg.end});
    }
    if (segs.empty()) throw Error(ErrorCode::MaskTooSmall, "wavefunction has no support");
    out.components = segs.size();
    out.disconnected = segs.size() > 1;
    out.segments = segs;
    auto& S = out.state.phase;
    S.assign(g.n, 0.0);
    const std::size_t c = g.center_index();
    for (std::size_t s = 0; s < segs.size(); ++s) {
        const Segment& seg = segs[s];
        std::size_t anchor = std::clamp(c, seg.begin, seg.end - 1);
        S[anchor] = phase_of(wf.psi[anchor]);
        // territory of this component: up to the midpoints of neighbouring gaps
        const std::size_t lo = s == 0 ? 0 : (segs[s - 1].end + seg.begin) / 2;
        const std::size_t hi = s + 1 == segs.size() ? g.n : (seg.end + segs[s + 1].begin) / 2;
        for (std::size_t i = anchor + 1; i < hi; ++i) {
            const double a = wf.psi[i] == cplx{} ? S[i - 1] : S[i - 1] + wrap_pi(phase_of(wf.psi[i]) - S[i - 1]);
            S[i] = a;
        }
        for (std::size_t i = anchor; i-- > lo;) {
            const double a = wf.psi[i] == cplx{} ? S[i + 1] : S[i + 1] + wrap_pi(phase_of(wf.psi[i]) - S[i + 1]);
            S[i] = a;
        }
    }
    return out;
}

std::vector<double> flow_velocity(const WaveFunction& wf, double mask_rel) {
    const auto pd = polar_decompose(wf, mask_rel);
    std::vector<double> v(wf.grid.n, nan);
    for (const auto& seg : pd.segments) {
        if (seg.size() < 4) continue;
        std::vector<double> s(pd.state.phase.begin() + static_cast<std::ptrdiff_t>(seg.begin),
                              pd.state.phase.begin() + static_cast<std::ptrdiff_t>(seg.end));
        const bool ring = wf.grid.bc == Boundary::periodic && seg.size() == wf.grid.n;
        const auto d = derivative(s, wf.grid.dx, 1, 6, ring ? Boundary::periodic : Boundary::box);
        for (std::size_t i = 0; i < seg.size(); ++i) v[seg.begin + i] = 2.0 * wf.beta / wf.mass * d[i];
    }
    return v;
}

std::vector<double> stochastic_velocity(const WaveFunction& wf, double mask_rel) {
    const auto rho = wf.density();
    const auto mask = support_mask(rho, mask_rel);
    std::vector<double> u(wf.grid.n, nan);
    for (const auto& seg : mask_segments(mask)) {
        if (seg.size() < 4) continue;
        std::vector<double> L(seg.size());
        for (std::size_t i = 0; i < seg.size(); ++i) L[i] = std::log(rho[seg.begin + i]);
        const bool ring = wf.grid.bc == Boundary::periodic && seg.size() == wf.grid.n;
        const auto d = derivative(L, wf.grid.dx, 1, 6, ring ? Boundary::periodic : Boundary::box);
        for (std::size_t i = 0; i < seg.size(); ++i) u[seg.begin + i] = wf.beta / wf.mass * d[i];
    }
    return u;
}

std::vector<double> momentum_identity_residual(const WaveFunction& wf, double mask_rel) {
    const auto dpsi = spectral_derivative(wf.grid, wf.psi);
    const auto v = flow_velocity(wf, mask_rel);
    const auto u = stochastic_velocity(wf, mask_rel);
    std::vector<double> r(wf.grid.n, nan);
    const double hbar = wf.hbar();
    for (std::size_t i = 0; i < wf.grid.n; ++i) {
        if (std::isnan(v[i]) || std::isnan(u[i])) continue;
        const cplx lhs = cplx{0.0, -hbar} * dpsi[i];
        const cplx rhs = wf.mass * cplx{v[i], -u[i]} * wf.psi[i];
        r[i] = std::abs(lhs - rhs);
    }
    return r;
}

WaveFunction wavefunction_from_hydro(const HydroState& h, double beta, double mass, double mask_rel) {
    if (h.rho.size() != h.grid.n || h.phase.size() != h.grid.n)
        throw Error(ErrorCode::GridMismatch, "hydro state arrays do not match the grid");
    const auto segs = mask_segments(support_mask(h.rho, mask_rel));
    if (segs.size() != 1)
        throw Error(ErrorCode::DisconnectedSupport, "density support is not connected; the phase is ambiguous");
    WaveFunction wf{h.grid, std::vector<cplx>(h.grid.n), h.t, beta, mass};
    for (std::size_t i = 0; i < h.grid.n; ++i) wf.psi[i] = std::polar(std::sqrt(std::max(0.0, h.rho[i])), h.phase[i]);
    return wf;
}

WaveFunction ho_eigenstate(unsigned n, const Grid1D& grid, double beta, double mass, double omega, double t) {
    const double hbar = 2.0 * beta;
    const double s = std::sqrt(mass * omega / hbar);
    WaveFunction wf{grid, std::vector<cplx>(grid.n), t, beta, mass};
    const cplx time_factor = std::polar(1.0, -omega * (static_cast<double>(n) + 0.5) * t);
    const double norm0 = std::pow(mass * omega / (pi * hbar), 0.25);
    for (std::size_t i = 0; i < grid.n; ++i) {
        const double xi = s * grid[i];
        double prev = 0.0;
        double cur = norm0 * std::exp(-0.5 * xi * xi);
        for (unsigned k = 0; k < n; ++k) {
            const double kd = static_cast<double>(k);
            const double next = std::sqrt(2.0 / (kd + 1.0)) * xi * cur - std::sqrt(kd / (kd + 1.0)) * prev;
            prev = cur;
            cur = next;
        }
        wf.psi[i] = cur * time_factor;
    }
    return wf;
}

WaveFunction coherent_state(const Grid1D& grid, double beta, double mass, double omega, double x0, double p0,
                            double t) {
    const double hbar = 2.0 * beta;
    const double xc = x0 * std::cos(omega * t) + p0 / (mass * omega) * std::sin(omega * t);
    const double pc = p0 * std::cos(omega * t) - mass * omega * x0 * std::sin(omega * t);
    const double a = mass * omega / (2.0 * hbar);
    const double norm0 = std::pow(mass * omega / (pi * hbar), 0.25);
    WaveFunction wf{grid, std::vector<cplx>(grid.n), t, beta, mass};
    for (std::size_t i = 0; i < grid.n; ++i) {
        const double x = grid[i];
        const double d = x - xc;
        const double ph = (pc * x - 0.5 * pc * xc) / hbar - 0.5 * omega * t;
        wf.psi[i] = norm0 * std::exp(-a * d * d) * std::polar(1.0, ph);
    }
    return wf;
}

WaveFunction gaussian_packet(const Grid1D& grid, double beta, double mass, double x0, double p0, double sigma0,
                             double t) {
    const double hbar = 2.0 * beta;
    const double tau = hbar * t / (2.0 * mass * sigma0 * sigma0);
    const cplx one_i{1.0, tau};
    const cplx pref = std::pow(2.0 * pi * sigma0 * sigma0, -0.25) / std::sqrt(one_i);
    const double v = p0 / mass;
    WaveFunction wf{grid, std::vector<cplx>(grid.n), t, beta, mass};
    for (std::size_t i = 0; i < grid.n; ++i) {
        const double x = grid[i];
        const double d = x - x0 - v * t;
        const cplx expo = -d * d / (4.0 * sigma0 * sigma0 * one_i) +
                          cplx{0.0, p0 * (x - x0) / hbar - p0 * p0 * t / (2.0 * mass * hbar)};
        wf.psi[i] = pref * std::exp(expo);
    }
    return wf;
}

}  // namespace sedqm
