#include "sedqm/phase_stats.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

namespace sedqm {

namespace {

double integrate_2d(const Grid1D& x, const Grid1D& p, std::span<const double> v) {
    CompensatedSum s;
    for (std::size_t i = 0; i < x.n; ++i) {
        const double wi = quadrature_weight(x, i);
        for (std::size_t j = 0; j < p.n; ++j) s.add(wi * quadrature_weight(p, j) * v[i * p.n + j]);
    }
    return s.value();
}

double sample_std(std::span<const double> v) {
    const double n = static_cast<double>(v.size());
    const double mean = compensated_sum(v) / n;
    CompensatedSum s;
    for (double x : v) s.add((x - mean) * (x - mean));
    return std::sqrt(s.value() / std::max(1.0, n - 1.0));
}

double quantile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

bool in_cell_range(const Grid1D& g, double v) {
    return v >= g.min - 0.5 * g.dx && v <= g.max() + 0.5 * g.dx;
}

}  // namespace

double silverman_bandwidth(std::span<const double> samples, int dims) {
    if (samples.size() < 2) return 0.0;
    std::vector<double> v(samples.begin(), samples.end());
    const double sd = sample_std(samples);
    const double iqr = (quantile(v, 0.75) - quantile(v, 0.25)) / 1.349;
    double sigma = iqr > 0 ? std::min(sd, iqr) : sd;
    const double n = static_cast<double>(samples.size());
    const double d = static_cast<double>(dims);
    return sigma * std::pow(4.0 / ((d + 2.0) * n), 1.0 / (d + 4.0));
}

PhaseDensity estimate_density(std::span<const double> xs, std::span<const double> ps, const Grid1D& x_grid,
                              const Grid1D& p_grid, DensityMethod method, double bandwidth_x,
                              double bandwidth_p) {
    if (xs.size() != ps.size() || xs.empty())
        throw Error(ErrorCode::InvalidArgument, "estimate_density needs matching non-empty sample arrays");
    const std::size_t n = xs.size();
    std::size_t inside = 0;
    for (std::size_t s = 0; s < n; ++s)
        if (in_cell_range(x_grid, xs[s]) && in_cell_range(p_grid, ps[s])) ++inside;
    const double coverage = static_cast<double>(inside) / static_cast<double>(n);
    if (coverage < 0.99)
        throw Error(ErrorCode::Coverage, "phase-space grid covers only " + std::to_string(coverage * 100.0) +
                                             "% of the samples (need >= 99%)");

    PhaseDensity q{x_grid, p_grid, std::vector<double>(x_grid.n * p_grid.n, 0.0), {}};
    q.meta.method = method;
    q.meta.sample_count = n;
    q.meta.coverage = coverage;
    q.meta.low_sample_count = n < 100;

    if (method == DensityMethod::histogram) {
        q.meta.bandwidth_x = x_grid.dx;
        q.meta.bandwidth_p = p_grid.dx;
        for (std::size_t s = 0; s < n; ++s) {
            if (!in_cell_range(x_grid, xs[s]) || !in_cell_range(p_grid, ps[s])) continue;
            const auto i = static_cast<std::size_t>(
                std::clamp(std::lround((xs[s] - x_grid.min) / x_grid.dx), 0L, static_cast<long>(x_grid.n - 1)));
            const auto j = static_cast<std::size_t>(
                std::clamp(std::lround((ps[s] - p_grid.min) / p_grid.dx), 0L, static_cast<long>(p_grid.n - 1)));
            q.values[i * p_grid.n + j] += 1.0;
        }
    } else {
        double hx = bandwidth_x > 0 ? bandwidth_x : silverman_bandwidth(xs, 2);
        double hp = bandwidth_p > 0 ? bandwidth_p : silverman_bandwidth(ps, 2);
        if (!(hx > 0)) hx = x_grid.dx;
        if (!(hp > 0)) hp = p_grid.dx;
        q.meta.bandwidth_x = hx;
        q.meta.bandwidth_p = hp;
        constexpr std::size_t block = 4096;
        Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(x_grid.n),
                                                    static_cast<Eigen::Index>(p_grid.n));
        for (std::size_t start = 0; start < n; start += block) {
            const std::size_t len = std::min(block, n - start);
            Eigen::MatrixXd kx(x_grid.n, len), kp(p_grid.n, len);
            for (std::size_t s = 0; s < len; ++s) {
                for (std::size_t i = 0; i < x_grid.n; ++i) {
                    const double u = (x_grid[i] - xs[start + s]) / hx;
                    kx(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(s)) = std::exp(-0.5 * u * u);
                }
                for (std::size_t j = 0; j < p_grid.n; ++j) {
                    const double u = (p_grid[j] - ps[start + s]) / hp;
                    kp(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(s)) = std::exp(-0.5 * u * u);
                }
            }
            acc.noalias() += kx * kp.transpose();
        }
        for (std::size_t i = 0; i < x_grid.n; ++i)
            for (std::size_t j = 0; j < p_grid.n; ++j)
                q.values[i * p_grid.n + j] = acc(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    const double total = integrate_2d(x_grid, p_grid, q.values);
    if (total > 0)
        for (double& v : q.values) v /= total;
    return q;
}

std::vector<double> marginal_rho(const PhaseDensity& q) {
    std::vector<double> rho(q.x.n);
    for (std::size_t i = 0; i < q.x.n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < q.p.n; ++j) s += quadrature_weight(q.p, j) * q.at(i, j);
        rho[i] = s;
    }
    return rho;
}

CharacteristicGrid characteristic_fn(const PhaseDensity& q, const Grid1D& z_grid) {
    const double zmax = std::max(std::abs(z_grid.min), std::abs(z_grid.max()));
    if (zmax * q.p.dx > pi / 4.0 * (1.0 + 1e-12))
        throw Error(ErrorCode::Resolution, "p-grid too coarse for the z-range: need max|z| * dp <= pi/4");
    const std::size_t np = q.p.n, nz = z_grid.n;
    std::vector<double> c(np * nz), s(np * nz);
    for (std::size_t j = 0; j < np; ++j)
        for (std::size_t k = 0; k < nz; ++k) {
            const double z = z_grid[k];
            const double a = q.p[j] * z;
            c[j * nz + k] = z == 0.0 ? 1.0 : std::cos(a);
            s[j * nz + k] = z == 0.0 ? 0.0 : std::sin(a);
        }
    CharacteristicGrid out{q.x, z_grid, std::vector<std::complex<double>>(q.x.n * nz)};
    for (std::size_t i = 0; i < q.x.n; ++i)
        for (std::size_t k = 0; k < nz; ++k) {
            double re = 0.0, im = 0.0;
            for (std::size_t j = 0; j < np; ++j) {
                const double w = quadrature_weight(q.p, j) * q.at(i, j);
                re += w * c[j * nz + k];
                im += w * s[j * nz + k];
            }
            out.values[i * nz + k] = {re, im};
        }
    return out;
}

LocalMoments local_moments(const Grid1D& x, const Grid1D& p, std::span<const double> values, double mask_rel) {
    if (values.size() != x.n * p.n) throw Error(ErrorCode::GridMismatch, "density size does not match grids");
    LocalMoments m{x, std::vector<double>(x.n), std::vector<double>(x.n, nan), std::vector<double>(x.n, nan),
                   std::vector<double>(x.n, nan), {}};
    for (std::size_t i = 0; i < x.n; ++i) {
        CompensatedSum s0;
        for (std::size_t j = 0; j < p.n; ++j) s0.add(quadrature_weight(p, j) * values[i * p.n + j]);
        m.rho[i] = s0.value();
    }
    m.mask = support_mask(m.rho, mask_rel);
    for (std::size_t i = 0; i < x.n; ++i) {
        if (!m.mask[i]) continue;
        CompensatedSum s1, s2;
        for (std::size_t j = 0; j < p.n; ++j) {
            const double w = quadrature_weight(p, j) * values[i * p.n + j];
            s1.add(w * p[j]);
            s2.add(w * p[j] * p[j]);
        }
        m.mean_p[i] = s1.value() / m.rho[i];
        m.mean_p2[i] = s2.value() / m.rho[i];
        m.var_p[i] = m.mean_p2[i] - m.mean_p[i] * m.mean_p[i];
    }
    return m;
}

LocalMoments local_moments(const PhaseDensity& q, double mask_rel) {
    return local_moments(q.x, q.p, q.values, mask_rel);
}

LocalMoments local_moments_from_samples(std::span<const double> xs, std::span<const double> ps,
                                        std::span<const double> weights, const Grid1D& x_grid, double bandwidth,
                                        double mask_rel) {
    const std::size_t n = xs.size();
    if (ps.size() != n || (!weights.empty() && weights.size() != n) || n == 0)
        throw Error(ErrorCode::InvalidArgument, "sample arrays must be non-empty and of equal length");
    if (!(bandwidth > 0)) throw Error(ErrorCode::InvalidArgument, "bandwidth must be positive");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    std::vector<double> sx(n), sp(n), sw(n);
    CompensatedSum total;
    for (std::size_t k = 0; k < n; ++k) {
        sx[k] = xs[order[k]];
        sp[k] = ps[order[k]];
        sw[k] = weights.empty() ? 1.0 : weights[order[k]];
        total.add(sw[k]);
    }
    const double norm = total.value() * bandwidth * std::sqrt(2.0 * pi);
    const double reach = 6.0 * bandwidth;

    LocalMoments m{x_grid, std::vector<double>(x_grid.n, 0.0), std::vector<double>(x_grid.n, nan),
                   std::vector<double>(x_grid.n, nan), std::vector<double>(x_grid.n, nan), {}};
    struct Acc {
        double s0 = 0, s1 = 0, s2 = 0, t0 = 0, t1 = 0, u0 = 0;
    };
    std::vector<Acc> accs(x_grid.n);
    for (std::size_t g = 0; g < x_grid.n; ++g) {
        const double xg = x_grid[g];
        auto lo = std::lower_bound(sx.begin(), sx.end(), xg - reach) - sx.begin();
        auto hi = std::upper_bound(sx.begin(), sx.end(), xg + reach) - sx.begin();
        Acc a;
        for (auto k = lo; k < hi; ++k) {
            const std::size_t kk = static_cast<std::size_t>(k);
            const double d = sx[kk] - xg;
            const double u = d / bandwidth;
            const double w = sw[kk] * std::exp(-0.5 * u * u);
            a.s0 += w;
            a.s1 += w * d;
            a.s2 += w * d * d;
            a.t0 += w * sp[kk];
            a.t1 += w * sp[kk] * d;
            a.u0 += w * sp[kk] * sp[kk];
        }
        accs[g] = a;
        m.rho[g] = a.s0 / norm;
    }
    m.mask = support_mask(m.rho, mask_rel);
    for (std::size_t g = 0; g < x_grid.n; ++g) {
        if (!m.mask[g]) continue;
        const Acc& a = accs[g];
        const double det = a.s0 * a.s2 - a.s1 * a.s1;
        double c0, c1;
        if (det > 1e-12 * a.s0 * a.s2) {
            c0 = (a.s2 * a.t0 - a.s1 * a.t1) / det;
            c1 = (a.s0 * a.t1 - a.s1 * a.t0) / det;
        } else {
            c0 = a.t0 / a.s0;
            c1 = 0.0;
        }
        const double resid =
            (a.u0 - 2.0 * c0 * a.t0 - 2.0 * c1 * a.t1 + c0 * c0 * a.s0 + 2.0 * c0 * c1 * a.s1 + c1 * c1 * a.s2) /
            a.s0;
        m.mean_p[g] = c0;
        m.var_p[g] = std::max(0.0, resid);
        m.mean_p2[g] = m.var_p[g] + c0 * c0;
    }
    return m;
}

std::vector<double> log_density_curvature(const Grid1D& x, std::span<const double> rho,
                                          std::span<const std::uint8_t> mask) {
    std::vector<double> out(x.n, nan);
    const auto segs = mask_segments(mask);
    const bool whole_ring = x.bc == Boundary::periodic && segs.size() == 1 && segs[0].size() == x.n;
    for (const auto& seg : segs) {
        if (seg.size() < 4) continue;
        std::vector<double> L(seg.size());
        for (std::size_t i = 0; i < seg.size(); ++i) L[i] = std::log(rho[seg.begin + i]);
        const auto d2 = derivative(L, x.dx, 2, 4, whole_ring ? Boundary::periodic : Boundary::box);
        for (std::size_t i = 0; i < seg.size(); ++i) out[seg.begin + i] = d2[i];
    }
    return out;
}

std::vector<double> log_density_curvature_from_samples(std::span<const double> xs, std::span<const double> weights,
                                                       const Grid1D& grid, double bandwidth,
                                                       std::span<const std::uint8_t> mask) {
    const std::size_t n = xs.size();
    if (n == 0 || (!weights.empty() && weights.size() != n))
        throw Error(ErrorCode::InvalidArgument, "sample arrays must be non-empty and of equal length");
    if (!(bandwidth > 0)) throw Error(ErrorCode::InvalidArgument, "bandwidth must be positive");
    if (mask.size() != grid.n) throw Error(ErrorCode::GridMismatch, "mask does not match grid");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    std::vector<double> sx(n), sw(n);
    for (std::size_t k = 0; k < n; ++k) {
        sx[k] = xs[order[k]];
        sw[k] = weights.empty() ? 1.0 : weights[order[k]];
    }
    const double reach = 8.0 * bandwidth;
    std::vector<double> out(grid.n, nan);
    for (std::size_t g = 0; g < grid.n; ++g) {
        if (!mask[g]) continue;
        const double xg = grid[g];
        const auto lo = std::lower_bound(sx.begin(), sx.end(), xg - reach) - sx.begin();
        const auto hi = std::upper_bound(sx.begin(), sx.end(), xg + reach) - sx.begin();
        double s0 = 0, s1 = 0, s2 = 0;
        for (auto k = lo; k < hi; ++k) {
            const std::size_t kk = static_cast<std::size_t>(k);
            const double d = sx[kk] - xg;
            const double u = d / bandwidth;
            const double w = sw[kk] * std::exp(-0.5 * u * u);
            s0 += w;
            s1 += w * d;
            s2 += w * d * d;
        }
        if (!(s0 > 0)) continue;
        const double m1 = s1 / s0;
        const double v = s2 / s0 - m1 * m1;
        if (v > 0) out[g] = 1.0 / (bandwidth * bandwidth) - 1.0 / v;
    }
    return out;
}

DispersionResidual dispersion_identity_residual(const LocalMoments& m, double beta) {
    const auto curv = log_density_curvature(m.x, m.rho, m.mask);
    DispersionResidual r;
    r.residual.assign(m.x.n, nan);
    r.predicted_var.assign(m.x.n, nan);
    CompensatedSum l2, sq;
    for (std::size_t i = 0; i < m.x.n; ++i) {
        if (!m.mask[i] || std::isnan(curv[i]) || std::isnan(m.var_p[i])) continue;
        r.predicted_var[i] = -beta * beta * curv[i];
        r.residual[i] = m.var_p[i] - r.predicted_var[i];
        ++r.mask_points;
        l2.add(r.residual[i] * r.residual[i] * m.x.dx);
        sq.add(r.residual[i] * r.residual[i]);
        r.linf = std::max(r.linf, std::abs(r.residual[i]));
    }
    if (r.mask_points < 5)
        throw Error(ErrorCode::MaskTooSmall, "dispersion residual needs at least 5 supported grid points");
    r.l2 = std::sqrt(l2.value());
    r.rms = std::sqrt(sq.value() / static_cast<double>(r.mask_points));
    const auto segs = mask_segments(m.mask);
    for (std::size_t k = 1; k < segs.size(); ++k) r.excluded.push_back({segs[k - 1].end, segs[k].begin});
    return r;
}

HierarchyResiduals hierarchy_residuals(std::span<const LocalMoments> series, double t0, double dt,
                                       const Potential& potential, double mass) {
    if (series.size() < 3) throw Error(ErrorCode::InvalidArgument, "hierarchy residuals need >= 3 time slices");
    if (!(dt > 0)) throw Error(ErrorCode::InvalidArgument, "time step must be positive");
    const Grid1D& g = series.front().x;
    for (const auto& s : series)
        if (!s.x.same_as(g) || s.rho.size() != g.n)
            throw Error(ErrorCode::GridMismatch, "hierarchy residuals need identical grids in every slice");

    auto zero_outside = [](const std::vector<double>& v, const std::vector<std::uint8_t>& mask) {
        std::vector<double> o(v.size(), 0.0);
        for (std::size_t i = 0; i < v.size(); ++i)
            if (mask[i]) o[i] = v[i];
        return o;
    };
    std::vector<std::vector<double>> rho, j, k2;
    for (const auto& s : series) {
        std::vector<double> jj(g.n), kk(g.n);
        for (std::size_t i = 0; i < g.n; ++i) {
            jj[i] = s.mean_p[i] * s.rho[i];
            kk[i] = s.mean_p2[i] * s.rho[i];
        }
        rho.push_back(s.rho);
        j.push_back(zero_outside(jj, s.mask));
        k2.push_back(zero_outside(kk, s.mask));
    }
    std::vector<double> force(g.n);
    for (std::size_t i = 0; i < g.n; ++i) force[i] = potential.eval(g[i]).force;

    HierarchyResiduals out;
    for (std::size_t k = 1; k + 1 < series.size(); ++k) {
        const auto djdx = derivative(j[k], g.dx, 1, 4, g.bc);
        const auto dkdx = derivative(k2[k], g.dx, 1, 4, g.bc);
        std::vector<double> r1(g.n, nan), r2(g.n, nan);
        for (std::size_t i = 0; i < g.n; ++i) {
            const bool inner = g.bc == Boundary::periodic || (i > 1 && i + 2 < g.n);
            if (!inner) continue;
            bool ok = true;
            for (std::size_t s = k - 1; s <= k + 1; ++s) ok = ok && series[s].mask[i];
            for (std::size_t o = 1; o <= 2; ++o)
                ok = ok && series[k].mask[(i + g.n - o) % g.n] && series[k].mask[(i + o) % g.n];
            if (!ok) continue;
            const double drho_dt = (rho[k + 1][i] - rho[k - 1][i]) / (2.0 * dt);
            const double dj_dt = (j[k + 1][i] - j[k - 1][i]) / (2.0 * dt);
            r1[i] = drho_dt + djdx[i] / mass;
            r2[i] = dj_dt + dkdx[i] / mass - force[i] * rho[k][i];
            out.continuity_linf = std::max(out.continuity_linf, std::abs(r1[i]));
            out.momentum_linf = std::max(out.momentum_linf, std::abs(r2[i]));
        }
        out.t.push_back(t0 + static_cast<double>(k) * dt);
        out.continuity.push_back(std::move(r1));
        out.momentum.push_back(std::move(r2));
    }
    return out;
}

MomentumFluctuation avg_momentum_fluctuation(const Grid1D& x, std::span<const double> rho, double beta,
                                             double edge_rel) {
    if (rho.size() != x.n) throw Error(ErrorCode::GridMismatch, "density size does not match grid");
    double peak = 0.0;
    for (double r : rho) peak = std::max(peak, r);
    if (!(peak > 0)) throw Error(ErrorCode::InvalidArgument, "density must be positive somewhere");
    if (x.bc == Boundary::box && (rho.front() > edge_rel * peak || rho.back() > edge_rel * peak))
        throw Error(ErrorCode::BoundaryDecay,
                    "density does not vanish at the boundaries; surface terms cannot be dropped");
    std::vector<std::uint8_t> mask(x.n);
    for (std::size_t i = 0; i < x.n; ++i) mask[i] = rho[i] > 0 ? 1 : 0;
    const auto segs = mask_segments(mask);
    const bool whole_ring = x.bc == Boundary::periodic && segs.size() == 1 && segs[0].size() == x.n;
    CompensatedSum a, b;
    for (const auto& seg : segs) {
        if (seg.size() < 4) continue;
        std::vector<double> L(seg.size());
        for (std::size_t i = 0; i < seg.size(); ++i) L[i] = std::log(rho[seg.begin + i]);
        const Boundary bc = whole_ring ? Boundary::periodic : Boundary::box;
        const auto d1 = derivative(L, x.dx, 1, 6, bc);
        const auto d2 = derivative(L, x.dx, 2, 6, bc);
        for (std::size_t i = 0; i < seg.size(); ++i) {
            const double w = quadrature_weight(x, seg.begin + i) * rho[seg.begin + i];
            a.add(-w * d2[i]);
            b.add(w * d1[i] * d1[i]);
        }
    }
    return {beta * beta * a.value(), beta * beta * b.value()};
}

}  // namespace sedqm
