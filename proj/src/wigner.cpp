#include "sedqm/wigner.hpp"

#include <algorithm>
#include <cmath>

namespace sedqm {

WignerGrid wigner_transform(const WaveFunction& wf, const Grid1D& p_grid, const std::string& source) {
    const Grid1D& g = wf.grid;
    if (wf.psi.size() != g.n) throw Error(ErrorCode::GridMismatch, "wavefunction size does not match grid");
    if (g.bc == Boundary::box) {
        double peak = 0.0;
        for (const auto& v : wf.psi) peak = std::max(peak, std::abs(v));
        if (std::abs(wf.psi.front()) >= 1e-8 || std::abs(wf.psi.back()) >= 1e-8)
            throw Error(ErrorCode::BoundaryDecay,
                        "wavefunction does not vanish at the grid edges (|psi| >= 1e-8); widen the x-grid");
    }
    const double hbar = wf.hbar();
    const long n = static_cast<long>(g.n);
    WignerGrid w{g, p_grid, std::vector<double>(g.n * p_grid.n), source, 0.0};
    std::vector<cplx> f;
    for (long i = 0; i < n; ++i) {
        long kmax;
        if (g.bc == Boundary::periodic)
            kmax = (n - 1) / 2;
        else
            kmax = std::min(i, n - 1 - i);
        f.resize(static_cast<std::size_t>(2 * kmax + 1));
        for (long k = -kmax; k <= kmax; ++k) {
            const auto ip = static_cast<std::size_t>(((i + k) % n + n) % n);
            const auto im = static_cast<std::size_t>(((i - k) % n + n) % n);
            f[static_cast<std::size_t>(k + kmax)] = wf.psi[ip] * std::conj(wf.psi[im]);
        }
        for (std::size_t j = 0; j < p_grid.n; ++j) {
            const double theta = -2.0 * p_grid[j] * g.dx / hbar;
            const cplx rot = std::polar(1.0, theta);
            // phase factor e^{i theta k} by recurrence from k = -kmax, resynchronised
            cplx acc{};
            cplx ph = std::polar(1.0, -theta * static_cast<double>(kmax));
            for (long k = -kmax; k <= kmax; ++k) {
                if ((k + kmax) % 64 == 0) ph = std::polar(1.0, theta * static_cast<double>(k));
                acc += f[static_cast<std::size_t>(k + kmax)] * ph;
                ph *= rot;
            }
            acc *= g.dx / (pi * hbar);
            w.values[static_cast<std::size_t>(i) * p_grid.n + j] = acc.real();
            w.max_imag = std::max(w.max_imag, std::abs(acc.imag()));
        }
    }
    return w;
}

CharacteristicGrid characteristic_from_wavefunction(const WaveFunction& wf, const Grid1D& z_grid, double z_window) {
    const Grid1D& g = wf.grid;
    const double ratio = wf.beta * z_grid.dx / g.dx;
    const double zmin_ratio = wf.beta * z_grid.min / g.dx;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 || std::abs(zmin_ratio - std::round(zmin_ratio)) > 1e-9)
        throw Error(ErrorCode::GridMismatch, "beta * z must fall on the x-lattice");
    const long n = static_cast<long>(g.n);
    CharacteristicGrid q{g, z_grid, std::vector<cplx>(g.n * z_grid.n, cplx{})};
    for (long i = 0; i < n; ++i)
        for (std::size_t k = 0; k < z_grid.n; ++k) {
            const double z = z_grid[k];
            if (std::abs(z) > z_window) continue;
            const long s = std::lround(wf.beta * z / g.dx);
            long a = i + s, b = i - s;
            if (g.bc == Boundary::periodic) {
                a = ((a % n) + n) % n;
                b = ((b % n) + n) % n;
            } else if (a < 0 || a >= n || b < 0 || b >= n) {
                continue;
            }
            q.values[static_cast<std::size_t>(i) * z_grid.n + k] =
                wf.psi[static_cast<std::size_t>(a)] * std::conj(wf.psi[static_cast<std::size_t>(b)]);
        }
    return q;
}

PhaseDensity inverse_characteristic(const CharacteristicGrid& q, const Grid1D& p_grid, double symmetry_tol) {
    const Grid1D& z = q.z;
    if (z.n % 2 == 0 || std::abs(z.min + z.max()) > 1e-9 * std::max(1.0, std::abs(z.min)))
        throw Error(ErrorCode::SymmetryViolation, "z-grid must be symmetric about 0 with an odd point count");
    double peak = 0.0, asym = 0.0;
    for (std::size_t i = 0; i < q.x.n; ++i)
        for (std::size_t k = 0; k < z.n; ++k) {
            peak = std::max(peak, std::abs(q.at(i, k)));
            asym = std::max(asym, std::abs(std::conj(q.at(i, k)) - q.at(i, z.n - 1 - k)));
        }
    if (asym > symmetry_tol * std::max(peak, 1e-300))
        throw Error(ErrorCode::SymmetryViolation,
                    "characteristic function is not Hermitian in z (deviation " + std::to_string(asym) + ")");
    PhaseDensity out{q.x, p_grid, std::vector<double>(q.x.n * p_grid.n), {}};
    std::vector<double> c(p_grid.n * z.n), s(p_grid.n * z.n);
    for (std::size_t j = 0; j < p_grid.n; ++j)
        for (std::size_t k = 0; k < z.n; ++k) {
            const double a = p_grid[j] * z[k];
            c[j * z.n + k] = std::cos(a) * quadrature_weight(z, k);
            s[j * z.n + k] = std::sin(a) * quadrature_weight(z, k);
        }
    for (std::size_t i = 0; i < q.x.n; ++i)
        for (std::size_t j = 0; j < p_grid.n; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < z.n; ++k) {
                const cplx v = q.at(i, k);
                // Re[v e^{-ipz}] = Re v cos + Im v sin
                acc += v.real() * c[j * z.n + k] + v.imag() * s[j * z.n + k];
            }
            out.values[i * p_grid.n + j] = acc / (2.0 * pi);
        }
    return out;
}

std::vector<double> momentum_density(const WaveFunction& wf, const Grid1D& p_grid) {
    const double hbar = wf.hbar();
    std::vector<double> out(p_grid.n);
    for (std::size_t j = 0; j < p_grid.n; ++j) {
        cplx acc{};
        for (std::size_t i = 0; i < wf.grid.n; ++i)
            acc += quadrature_weight(wf.grid, i) * wf.psi[i] * std::polar(1.0, -p_grid[j] * wf.grid[i] / hbar);
        out[j] = std::norm(acc) / (2.0 * pi * hbar);
    }
    return out;
}

MarginalErrors marginals_check(const WignerGrid& w, const WaveFunction& wf) {
    if (!w.x.same_as(wf.grid) || wf.psi.size() != w.x.n)
        throw Error(ErrorCode::GridMismatch, "Wigner grid and wavefunction grid differ");
    const auto rho = wf.density();
    MarginalErrors e{0.0, 0.0};
    for (std::size_t i = 0; i < w.x.n; ++i) {
        CompensatedSum s;
        for (std::size_t j = 0; j < w.p.n; ++j) s.add(quadrature_weight(w.p, j) * w.at(i, j));
        e.position = std::max(e.position, std::abs(s.value() - rho[i]));
    }
    const auto pd = momentum_density(wf, w.p);
    for (std::size_t j = 0; j < w.p.n; ++j) {
        CompensatedSum s;
        for (std::size_t i = 0; i < w.x.n; ++i) s.add(quadrature_weight(w.x, i) * w.at(i, j));
        e.momentum = std::max(e.momentum, std::abs(s.value() - pd[j]));
    }
    return e;
}

NegativityReport negativity_report(const Grid1D& x, const Grid1D& p, const std::vector<double>& values) {
    if (values.size() != x.n * p.n) throw Error(ErrorCode::GridMismatch, "values do not match grids");
    NegativityReport r{std::numeric_limits<double>::infinity(), 0.0, 0.0, 0.0};
    CompensatedSum neg;
    for (std::size_t i = 0; i < x.n; ++i)
        for (std::size_t j = 0; j < p.n; ++j) {
            const double v = values[i * p.n + j];
            if (v < r.min_value) {
                r.min_value = v;
                r.x_at_min = x[i];
                r.p_at_min = p[j];
            }
            if (v < 0) neg.add(-v * quadrature_weight(x, i) * quadrature_weight(p, j));
        }
    r.negative_volume = neg.value();
    return r;
}

double wigner_overlap(const WignerGrid& a, const WignerGrid& b, double hbar) {
    if (!a.x.same_as(b.x) || !a.p.same_as(b.p)) throw Error(ErrorCode::GridMismatch, "Wigner grids differ");
    CompensatedSum s;
    for (std::size_t i = 0; i < a.x.n; ++i)
        for (std::size_t j = 0; j < a.p.n; ++j)
            s.add(quadrature_weight(a.x, i) * quadrature_weight(a.p, j) * a.at(i, j) * b.at(i, j));
    return 2.0 * pi * hbar * s.value();
}

double kde_noise_floor(const PhaseDensity& q) {
    double peak = 0.0;
    for (double v : q.values) peak = std::max(peak, v);
    const double n = static_cast<double>(q.meta.sample_count);
    const double h = q.meta.bandwidth_x * q.meta.bandwidth_p;
    if (!(n > 0) || !(h > 0)) return nan;
    return std::sqrt(peak / (4.0 * pi) / (n * h));
}

}  // namespace sedqm
