#pragma once

#include <complex>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "sedqm/params.hpp"

namespace sedqm {

class ComplexFft;

struct SpectralConfig {
    double omega_min = 0.9;
    double omega_max = 1.1;
    std::size_t n_modes = 1000;
    std::uint64_t seed = 1;
    /// Random per-mode frequency offsets of up to a quarter spacing.
    bool jitter = false;

    void validate() const;
};

/// Zero-point spectral energy density hbar w^3 / (2 pi^2 c^3).
double spectral_density(double omega, const PhysicalParams& params);

/// One-sided power spectral density of the scalar (x-projected) field,
/// (4 pi / 3) * spectral_density.  <E^2> = integral of field_psd over w.
double field_psd(double omega, const PhysicalParams& params);

struct ModeSet {
    std::vector<double> omega;
    std::vector<double> amplitude;  // c_j, with c_j^2 = field_psd(w_j) * spacing
    double spacing = 0.0;
    std::uint64_t seed = 0;
    bool uniform = true;

    std::size_t size() const { return omega.size(); }
    double omega_max() const { return omega.back(); }
    /// 2 pi / spacing; a finite mode sum repeats after this time.
    double recurrence_time() const;
    /// sum_j c_j^2, the exact variance of E(t).
    double variance() const;
};

ModeSet build_mode_set(const SpectralConfig& cfg, const PhysicalParams& params);

/// E(t) = sum_j c_j (a_j cos w_j t + b_j sin w_j t) with standard normal
/// a_j, b_j drawn from a stream keyed by (mode-set seed, index).
struct FieldRealization {
    std::shared_ptr<const ModeSet> modes;
    std::uint64_t index = 0;
    std::vector<double> a;
    std::vector<double> b;
};

FieldRealization sample_realization(std::shared_ptr<const ModeSet> modes, std::uint64_t index);

double eval_field(const FieldRealization& r, double t);

/// Exact C(lag) = sum_j c_j^2 cos(w_j lag) of the finite mode sum.
double analytic_autocorrelation(const ModeSet& modes, double lag);

struct CorrelationEstimate {
    double lag;
    double value;
    double std_error;
};

/// Monte-Carlo <E(t) E(t + lag)>: each realization contributes its average
/// over `time_samples` start times spread over one recurrence period; the
/// standard error is taken across realizations.
std::vector<CorrelationEstimate> estimate_autocorrelation(std::span<const FieldRealization> realizations,
                                                          std::span<const double> lags,
                                                          std::size_t time_samples = 32);

/// Evaluates a realization on a uniform time lattice t0 + k h.
///
/// For uniformly spaced modes this is a chirp-z transform (two FFTs per
/// chunk of samples); jittered mode sets fall back to per-mode phase
/// rotation.  Both agree with eval_field to rounding.
class FieldTabulator {
public:
    explicit FieldTabulator(std::shared_ptr<const ModeSet> modes, std::size_t chunk = 4096);
    ~FieldTabulator();
    FieldTabulator(const FieldTabulator&) = delete;
    FieldTabulator& operator=(const FieldTabulator&) = delete;

    void tabulate(const FieldRealization& r, double t0, double h, std::span<double> out);

private:
    void prepare_kernel(double h);
    void tabulate_chunk(const FieldRealization& r, double t0, double h, std::span<double> out);
    void tabulate_direct(const FieldRealization& r, double t0, double h, std::span<double> out);

    std::shared_ptr<const ModeSet> modes_;
    std::size_t chunk_;
    std::size_t fft_len_;
    std::unique_ptr<ComplexFft> fft_;
    std::vector<std::complex<double>> kernel_;
    std::vector<std::complex<double>> work_;
    double kernel_h_ = -1.0;
};

}  // namespace sedqm
