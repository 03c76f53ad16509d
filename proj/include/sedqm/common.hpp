#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace sedqm {

enum class ErrorCode {
    UnknownPreset,
    InvalidArgument,
    OutOfRange,
    Resolution,
    Recurrence,
    TooFewSamples,
    Coverage,
    GridMismatch,
    MaskTooSmall,
    BoundaryDecay,
    SymmetryViolation,
    CflViolation,
    NodeFormation,
    DisconnectedSupport,
    NonStationary,
    Convergence,
    Config,
    Io,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

enum class Boundary { box, periodic };

/// Uniform one-dimensional lattice x_i = min + i*dx, i < n.
///
/// For `box` grids hard walls (when a solver needs them) sit one cell
/// outside the lattice, at min - dx and min + n*dx.  For `periodic` grids
/// the period is n*dx.
struct Grid1D {
    double min = 0.0;
    double dx = 1.0;
    std::size_t n = 0;
    Boundary bc = Boundary::box;

    double operator[](std::size_t i) const { return min + static_cast<double>(i) * dx; }
    double max() const { return (*this)[n - 1]; }
    double length() const { return static_cast<double>(n) * dx; }
    std::size_t size() const { return n; }

    /// Endpoints included.
    static Grid1D linspace(double lo, double hi, std::size_t n, Boundary bc = Boundary::box);
    /// n points covering [lo, lo + period), period = n*dx.
    static Grid1D periodic(double lo, double period, std::size_t n);
    /// n interior points of a box with walls at lo and hi.
    static Grid1D box_interior(double lo, double hi, std::size_t n);
    /// Symmetric grid k*step, k = -half..half (2*half+1 points).
    static Grid1D symmetric(double step, std::size_t half);

    /// Index of the point nearest the geometric centre.
    std::size_t center_index() const { return n / 2; }

    bool same_as(const Grid1D& other, double rel_tol = 1e-12) const;
};

}  // namespace sedqm
