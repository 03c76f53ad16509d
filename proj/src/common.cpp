#include "sedqm/common.hpp"

#include <cmath>

namespace sedqm {

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::UnknownPreset: return "UnknownPreset";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::OutOfRange: return "OutOfRange";
        case ErrorCode::Resolution: return "Resolution";
        case ErrorCode::Recurrence: return "Recurrence";
        case ErrorCode::TooFewSamples: return "TooFewSamples";
        case ErrorCode::Coverage: return "Coverage";
        case ErrorCode::GridMismatch: return "GridMismatch";
        case ErrorCode::MaskTooSmall: return "MaskTooSmall";
        case ErrorCode::BoundaryDecay: return "BoundaryDecay";
        case ErrorCode::SymmetryViolation: return "SymmetryViolation";
        case ErrorCode::CflViolation: return "CflViolation";
        case ErrorCode::NodeFormation: return "NodeFormation";
        case ErrorCode::DisconnectedSupport: return "DisconnectedSupport";
        case ErrorCode::NonStationary: return "NonStationary";
        case ErrorCode::Convergence: return "Convergence";
        case ErrorCode::Config: return "Config";
        case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

Grid1D Grid1D::linspace(double lo, double hi, std::size_t n, Boundary bc) {
    if (n < 2 || !(hi > lo))
        throw Error(ErrorCode::InvalidArgument, "linspace needs n >= 2 and hi > lo");
    return Grid1D{lo, (hi - lo) / static_cast<double>(n - 1), n, bc};
}

Grid1D Grid1D::periodic(double lo, double period, std::size_t n) {
    if (n < 2 || !(period > 0))
        throw Error(ErrorCode::InvalidArgument, "periodic grid needs n >= 2 and period > 0");
    return Grid1D{lo, period / static_cast<double>(n), n, Boundary::periodic};
}

Grid1D Grid1D::box_interior(double lo, double hi, std::size_t n) {
    if (n < 1 || !(hi > lo))
        throw Error(ErrorCode::InvalidArgument, "box needs n >= 1 and hi > lo");
    const double dx = (hi - lo) / static_cast<double>(n + 1);
    return Grid1D{lo + dx, dx, n, Boundary::box};
}

Grid1D Grid1D::symmetric(double step, std::size_t half) {
    if (!(step > 0))
        throw Error(ErrorCode::InvalidArgument, "symmetric grid needs step > 0");
    return Grid1D{-static_cast<double>(half) * step, step, 2 * half + 1, Boundary::box};
}

bool Grid1D::same_as(const Grid1D& o, double rel_tol) const {
    const double scale = std::max(std::abs(dx), std::abs(o.dx));
    return n == o.n && bc == o.bc && std::abs(dx - o.dx) <= rel_tol * scale &&
           std::abs(min - o.min) <= rel_tol * std::max(1.0, scale * static_cast<double>(n));
}

}  // namespace sedqm
