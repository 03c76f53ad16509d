#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "sedqm/common.hpp"

namespace sedqm {

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double nan = std::numeric_limits<double>::quiet_NaN();

/// Neumaier-compensated accumulator.  Results depend only on the order of
/// the added terms.
class CompensatedSum {
public:
    void add(double v) {
        const double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v))
            comp_ += (sum_ - t) + v;
        else
            comp_ += (v - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

double compensated_sum(std::span<const double> values);

/// Trapezoidal rule on a box grid, plain Riemann sum on a periodic grid.
double integrate(const Grid1D& grid, std::span<const double> f);

/// Trapezoid weight of point i.
double quadrature_weight(const Grid1D& grid, std::size_t i);

/// Finite-difference derivative of order `deriv` (1 or 2) with centred
/// stencils of the requested `accuracy` (2, 4 or 6).  On box grids the
/// stencil drops to lower centred orders near the edges and to second-order
/// one-sided formulas at the two endpoints; periodic grids wrap.
std::vector<double> derivative(std::span<const double> f, double dx, int deriv, int accuracy,
                               Boundary bc = Boundary::box);

/// Maximal runs of consecutive true entries.
struct Segment {
    std::size_t begin;
    std::size_t end;  // one past the last index
    std::size_t size() const { return end - begin; }
};
std::vector<Segment> mask_segments(std::span<const std::uint8_t> mask);

/// mask[i] = rho[i] > rel * max(rho).
std::vector<std::uint8_t> support_mask(std::span<const double> rho, double rel);

/// Interior local minima of rho that fall below rel*max(rho) while rho is
/// supported on both sides.  Returns the index of the first one or -1.
long find_interior_node(std::span<const double> rho, double rel);

/// Ordinary least-squares slope and intercept of y against x.
struct LinearFit {
    double slope;
    double intercept;
    double slope_std_error;
};
LinearFit fit_line(std::span<const double> x, std::span<const double> y);

/// SplitMix64 finaliser; used to derive independent RNG streams from
/// (seed, stream id) pairs.
std::uint64_t mix64(std::uint64_t x);
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace sedqm
