#include "sedqm/numerics.hpp"

#include <algorithm>
#include <array>

namespace sedqm {

namespace {

// Centred stencil coefficients for offsets 1..r (antisymmetric for the first
// derivative, symmetric plus a centre weight for the second).
struct Stencil {
    int half;
    std::array<double, 4> w;  // w[0] centre, w[k] offset k
};

Stencil centred(int deriv, int accuracy) {
    if (deriv == 1) {
        switch (accuracy) {
            case 2: return {1, {0.0, 0.5, 0, 0}};
            case 4: return {2, {0.0, 2.0 / 3.0, -1.0 / 12.0, 0}};
            case 6: return {3, {0.0, 3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0}};
        }
    } else {
        switch (accuracy) {
            case 2: return {1, {-2.0, 1.0, 0, 0}};
            case 4: return {2, {-5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0, 0}};
            case 6: return {3, {-49.0 / 18.0, 3.0 / 2.0, -3.0 / 20.0, 1.0 / 90.0}};
        }
    }
    throw Error(ErrorCode::InvalidArgument, "unsupported stencil accuracy");
}

}  // namespace

double compensated_sum(std::span<const double> values) {
    CompensatedSum s;
    for (double v : values) s.add(v);
    return s.value();
}

double quadrature_weight(const Grid1D& grid, std::size_t i) {
    if (grid.bc == Boundary::periodic) return grid.dx;
    return (i == 0 || i + 1 == grid.n) ? 0.5 * grid.dx : grid.dx;
}

double integrate(const Grid1D& grid, std::span<const double> f) {
    CompensatedSum s;
    for (std::size_t i = 0; i < f.size(); ++i) s.add(quadrature_weight(grid, i) * f[i]);
    return s.value();
}

std::vector<double> derivative(std::span<const double> f, double dx, int deriv, int accuracy,
                               Boundary bc) {
    if (deriv != 1 && deriv != 2)
        throw Error(ErrorCode::InvalidArgument, "derivative order must be 1 or 2");
    const std::size_t n = f.size();
    if (n < 4) throw Error(ErrorCode::InvalidArgument, "derivative needs at least 4 points");
    const double scale = deriv == 1 ? 1.0 / dx : 1.0 / (dx * dx);
    const Stencil full = centred(deriv, accuracy);
    std::vector<double> out(n);

    if (bc == Boundary::periodic) {
        const long N = static_cast<long>(n);
        for (long i = 0; i < N; ++i) {
            double acc = full.w[0] * f[static_cast<std::size_t>(i)];
            for (int k = 1; k <= full.half; ++k) {
                const double fp = f[static_cast<std::size_t>((i + k) % N)];
                const double fm = f[static_cast<std::size_t>((i - k + N) % N)];
                acc += deriv == 1 ? full.w[k] * (fp - fm) : full.w[k] * (fp + fm);
            }
            out[static_cast<std::size_t>(i)] = acc * scale;
        }
        return out;
    }

    for (std::size_t i = 0; i < n; ++i) {
        const int avail = static_cast<int>(std::min(i, n - 1 - i));
        if (avail == 0) {
            // second-order one-sided
            const int s = i == 0 ? 1 : -1;
            auto at = [&](int k) { return f[static_cast<std::size_t>(static_cast<long>(i) + s * k)]; };
            if (deriv == 1)
                out[i] = s * (-1.5 * at(0) + 2.0 * at(1) - 0.5 * at(2)) * scale;
            else
                out[i] = (2.0 * at(0) - 5.0 * at(1) + 4.0 * at(2) - at(3)) * scale;
            continue;
        }
        const Stencil st = avail >= full.half ? full : centred(deriv, 2 * avail);
        double acc = st.w[0] * f[i];
        for (int k = 1; k <= st.half; ++k) {
            const double fp = f[i + static_cast<std::size_t>(k)];
            const double fm = f[i - static_cast<std::size_t>(k)];
            acc += deriv == 1 ? st.w[k] * (fp - fm) : st.w[k] * (fp + fm);
        }
        out[i] = acc * scale;
    }
    return out;
}

std::vector<Segment> mask_segments(std::span<const std::uint8_t> mask) {
    std::vector<Segment> segs;
    std::size_t i = 0;
    while (i < mask.size()) {
        if (!mask[i]) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < mask.size() && mask[j]) ++j;
        segs.push_back({i, j});
        i = j;
    }
    return segs;
}

std::vector<std::uint8_t> support_mask(std::span<const double> rho, double rel) {
    double peak = 0.0;
    for (double r : rho) peak = std::max(peak, r);
    std::vector<std::uint8_t> mask(rho.size());
    for (std::size_t i = 0; i < rho.size(); ++i) mask[i] = rho[i] > rel * peak ? 1 : 0;
    return mask;
}

long find_interior_node(std::span<const double> rho, double rel) {
    const auto mask = support_mask(rho, rel);
    const auto segs = mask_segments(mask);
    if (segs.size() < 2) return -1;
    // first unsupported gap between two supported runs
    const auto& a = segs[0];
    const auto& b = segs[1];
    std::size_t best = a.end;
    for (std::size_t i = a.end; i < b.begin; ++i)
        if (rho[i] < rho[best]) best = i;
    return static_cast<long>(best);
}

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n) throw Error(ErrorCode::InvalidArgument, "fit_line needs >= 2 points");
    CompensatedSum sx, sy;
    for (std::size_t i = 0; i < n; ++i) {
        sx.add(x[i]);
        sy.add(y[i]);
    }
    const double mx = sx.value() / static_cast<double>(n);
    const double my = sy.value() / static_cast<double>(n);
    CompensatedSum sxx, sxy;
    for (std::size_t i = 0; i < n; ++i) {
        sxx.add((x[i] - mx) * (x[i] - mx));
        sxy.add((x[i] - mx) * (y[i] - my));
    }
    const double slope = sxy.value() / sxx.value();
    const double intercept = my - slope * mx;
    double se = 0.0;
    if (n > 2) {
        CompensatedSum rss;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = y[i] - intercept - slope * x[i];
            rss.add(r * r);
        }
        se = std::sqrt(rss.value() / static_cast<double>(n - 2) / sxx.value());
    }
    return {slope, intercept, se};
}

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
    return mix64(mix64(seed) ^ mix64(stream + 0x632be59bd9b4e019ULL));
}

}  // namespace sedqm
