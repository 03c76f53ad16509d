#include "sedqm/varmin.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

namespace sedqm {

namespace {

double dot(std::span<const double> a, std::span<const double> b, double dx) {
    CompensatedSum s;
    for (std::size_t i = 0; i < a.size(); ++i) s.add(a[i] * b[i]);
    return s.value() * dx;
}

double kinetic_coefficient(const PhysicalParams& params, double dx) {
    const double hbar = 2.0 * params.beta;
    return hbar * hbar / (2.0 * params.mass * dx * dx);
}

}  // namespace

EnergyForms energy_functional(const Grid1D& grid, std::span<const double> rho, const Potential& potential,
                              const PhysicalParams& params, bool check_boundary) {
    const double edge = check_boundary ? 1e-8 : std::numeric_limits<double>::infinity();
    const auto mf = avg_momentum_fluctuation(grid, rho, params.beta, edge);
    const auto V = potential.sample(grid);
    std::vector<double> rv(grid.n);
    for (std::size_t i = 0; i < grid.n; ++i) rv[i] = rho[i] * V[i];
    const double pot = integrate(grid, rv);
    // (hbar^2 / 8m) = beta^2 / (2m) with hbar = 2 beta
    return {mf.curvature_form / (2.0 * params.mass) + pot, mf.gradient_form / (2.0 * params.mass) + pot};
}

std::vector<double> apply_hamiltonian(const Grid1D& grid, std::span<const double> psi, std::span<const double> v,
                                      const PhysicalParams& params) {
    const std::size_t n = grid.n;
    const double c = kinetic_coefficient(params, grid.dx);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double left = i > 0 ? psi[i - 1] : 0.0;
        const double right = i + 1 < n ? psi[i + 1] : 0.0;
        out[i] = -c * (left - 2.0 * psi[i] + right) + v[i] * psi[i];
    }
    return out;
}

VariationalResult minimize_ground_state(const Potential& potential, const Grid1D& grid, const PhysicalParams& params,
                                        const VariationalOptions& options) {
    if (grid.bc != Boundary::box) throw Error(ErrorCode::InvalidArgument, "variational solver uses box grids");
    if (grid.n < 3) throw Error(ErrorCode::InvalidArgument, "grid too small");
    if (!(options.tol > 0)) throw Error(ErrorCode::InvalidArgument, "tolerance must be positive");
    const std::size_t n = grid.n;
    const auto V = potential.sample(grid);
    const double interior_min = *std::min_element(V.begin() + 1, V.end() - 1);
    if (V.front() < interior_min || V.back() < interior_min)
        throw Error(ErrorCode::OutOfRange,
                    "potential decreases towards the grid edge; it is not bounded below on this domain");
    const double vmin = *std::min_element(V.begin(), V.end());
    const double vmax = *std::max_element(V.begin(), V.end());
    const double c = kinetic_coefficient(params, grid.dx);
    const double eta = 1.0 / (vmax - vmin + 4.0 * c);

    std::vector<double> psi(n);
    for (std::size_t i = 0; i < n; ++i)
        psi[i] = std::sin(pi * static_cast<double>(i + 1) / static_cast<double>(n + 1));
    auto normalise = [&](std::vector<double>& f) {
        const double s = std::sqrt(dot(f, f, grid.dx));
        for (double& v : f) v /= s;
    };
    normalise(psi);

    VariationalResult res;
    std::vector<double> r(n);
    for (std::size_t it = 0;; ++it) {
        const auto hpsi = apply_hamiltonian(grid, psi, V, params);
        const double e = dot(psi, hpsi, grid.dx);
        for (std::size_t i = 0; i < n; ++i) r[i] = hpsi[i] - e * psi[i];
        const double resid = std::sqrt(dot(r, r, grid.dx));
        res.history.push_back(e);
        res.energy = e;
        res.residual = resid;
        res.iterations = it;
        if (resid <= options.tol) break;
        if (it >= options.max_iterations)
            throw Error(ErrorCode::Convergence, "variational iteration did not reach the tolerance (residual " +
                                                    std::to_string(resid) + ")");
        for (std::size_t i = 0; i < n; ++i) psi[i] -= eta * (hpsi[i] - vmin * psi[i]);
        normalise(psi);
    }
    double peak = 0.0;
    for (double v : psi) peak = std::max(peak, std::abs(v));
    res.wall_amplitude = std::max(std::abs(psi.front()), std::abs(psi.back())) / peak;
    res.boundary_flag = potential.kind() != "free" && res.wall_amplitude >= 1e-8;
    res.psi = WaveFunction{grid, std::vector<cplx>(n), 0.0, params.beta, params.mass};
    for (std::size_t i = 0; i < n; ++i) res.psi.psi[i] = psi[i];
    return res;
}

double eigen_residual(std::span<const double> psi, double energy, const Potential& potential, const Grid1D& grid,
                      const PhysicalParams& params) {
    if (psi.size() != grid.n) throw Error(ErrorCode::GridMismatch, "psi does not match grid");
    const auto V = potential.sample(grid);
    const auto h = apply_hamiltonian(grid, psi, V, params);
    std::vector<double> r(grid.n);
    for (std::size_t i = 0; i < grid.n; ++i) r[i] = h[i] - energy * psi[i];
    return std::sqrt(dot(r, r, grid.dx));
}

std::vector<Eigenpair> tridiagonal_eigenpairs(const Potential& potential, const Grid1D& grid,
                                              const PhysicalParams& params, std::size_t count) {
    const auto n = static_cast<Eigen::Index>(grid.n);
    const auto V = potential.sample(grid);
    const double c = kinetic_coefficient(params, grid.dx);
    Eigen::VectorXd diag(n), sub(n - 1);
    for (Eigen::Index i = 0; i < n; ++i) diag(i) = 2.0 * c + V[static_cast<std::size_t>(i)];
    sub.setConstant(-c);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    if (solver.info() != Eigen::Success) throw Error(ErrorCode::Convergence, "tridiagonal eigensolve failed");
    std::vector<Eigenpair> out;
    for (std::size_t k = 0; k < std::min<std::size_t>(count, grid.n); ++k) {
        Eigenpair ep;
        ep.energy = solver.eigenvalues()(static_cast<Eigen::Index>(k));
        ep.psi.resize(grid.n);
        const auto col = solver.eigenvectors().col(static_cast<Eigen::Index>(k));
        double norm2 = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) norm2 += col(i) * col(i);
        const double scale = 1.0 / std::sqrt(norm2 * grid.dx);
        const double sign = col(n / 2) < 0 ? -1.0 : 1.0;
        for (Eigen::Index i = 0; i < n; ++i) ep.psi[static_cast<std::size_t>(i)] = sign * scale * col(i);
        out.push_back(std::move(ep));
    }
    return out;
}

}  // namespace sedqm
