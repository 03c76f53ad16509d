#include "sedqm/field.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "sedqm/fft.hpp"
#include "sedqm/numerics.hpp"

namespace sedqm {

void SpectralConfig::validate() const {
    if (!(omega_min > 0) || !(omega_max > omega_min))
        throw Error(ErrorCode::InvalidArgument, "spectral band needs 0 < omega_min < omega_max");
    if (n_modes < 2) throw Error(ErrorCode::InvalidArgument, "spectral band needs n_modes >= 2");
}

double spectral_density(double omega, const PhysicalParams& params) {
    if (!(omega > 0)) throw Error(ErrorCode::InvalidArgument, "spectral density needs omega > 0");
    const double c = params.light_speed;
    return params.hbar * omega * omega * omega / (2.0 * pi * pi * c * c * c);
}

double field_psd(double omega, const PhysicalParams& params) {
    return 4.0 * pi / 3.0 * spectral_density(omega, params);
}

double ModeSet::recurrence_time() const { return 2.0 * pi / spacing; }

double ModeSet::variance() const {
    CompensatedSum s;
    for (double c : amplitude) s.add(c * c);
    return s.value();
}

ModeSet build_mode_set(const SpectralConfig& cfg, const PhysicalParams& params) {
    cfg.validate();
    ModeSet m;
    const std::size_t n = cfg.n_modes;
    m.spacing = (cfg.omega_max - cfg.omega_min) / static_cast<double>(n - 1);
    m.seed = cfg.seed;
    m.uniform = !cfg.jitter;
    m.omega.resize(n);
    m.amplitude.resize(n);
    std::mt19937_64 jitter_rng(stream_seed(cfg.seed, ~std::uint64_t{0}));
    std::uniform_real_distribution<double> offset(-0.25, 0.25);
    for (std::size_t j = 0; j < n; ++j) {
        double w = cfg.omega_min + static_cast<double>(j) * m.spacing;
        if (cfg.jitter && j > 0 && j + 1 < n) w += offset(jitter_rng) * m.spacing;
        m.omega[j] = w;
        m.amplitude[j] = std::sqrt(field_psd(w, params) * m.spacing);
    }
    return m;
}

FieldRealization sample_realization(std::shared_ptr<const ModeSet> modes, std::uint64_t index) {
    FieldRealization r;
    const std::size_t n = modes->size();
    r.index = index;
    r.a.resize(n);
    r.b.resize(n);
    std::mt19937_64 rng(stream_seed(modes->seed, index));
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t j = 0; j < n; ++j) {
        r.a[j] = normal(rng);
        r.b[j] = normal(rng);
    }
    r.modes = std::move(modes);
    return r;
}

double eval_field(const FieldRealization& r, double t) {
    const ModeSet& m = *r.modes;
    double e = 0.0;
    for (std::size_t j = 0; j < m.size(); ++j) {
        const double ph = m.omega[j] * t;
        e += m.amplitude[j] * (r.a[j] * std::cos(ph) + r.b[j] * std::sin(ph));
    }
    return e;
}

double analytic_autocorrelation(const ModeSet& modes, double lag) {
    CompensatedSum s;
    for (std::size_t j = 0; j < modes.size(); ++j)
        s.add(modes.amplitude[j] * modes.amplitude[j] * std::cos(modes.omega[j] * lag));
    return s.value();
}

std::vector<CorrelationEstimate> estimate_autocorrelation(std::span<const FieldRealization> realizations,
                                                          std::span<const double> lags,
                                                          std::size_t time_samples) {
    if (realizations.size() < 100)
        throw Error(ErrorCode::TooFewSamples, "autocorrelation estimate needs >= 100 realizations");
    if (time_samples == 0) throw Error(ErrorCode::InvalidArgument, "time_samples must be positive");
    const double period = realizations.front().modes->recurrence_time();
    const double R = static_cast<double>(realizations.size());
    std::vector<CorrelationEstimate> out;
    for (double lag : lags) {
        std::vector<double> per_real(realizations.size());
        for (std::size_t r = 0; r < realizations.size(); ++r) {
            CompensatedSum acc;
            for (std::size_t s = 0; s < time_samples; ++s) {
                const double t = period * static_cast<double>(s) / static_cast<double>(time_samples);
                acc.add(eval_field(realizations[r], t) * eval_field(realizations[r], t + lag));
            }
            per_real[r] = acc.value() / static_cast<double>(time_samples);
        }
        const double mean = compensated_sum(per_real) / R;
        CompensatedSum var;
        for (double v : per_real) var.add((v - mean) * (v - mean));
        out.push_back({lag, mean, std::sqrt(var.value() / (R - 1.0) / R)});
    }
    return out;
}

namespace {
std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

std::complex<double> unit_phase(double angle) {
    return {std::cos(angle), std::sin(angle)};
}
}  // namespace

FieldTabulator::FieldTabulator(std::shared_ptr<const ModeSet> modes, std::size_t chunk)
    : modes_(std::move(modes)), chunk_(std::max<std::size_t>(chunk, 16)) {
    fft_len_ = next_pow2(chunk_ + modes_->size() - 1);
    if (modes_->uniform) {
        fft_ = std::make_unique<ComplexFft>(fft_len_);
        kernel_.resize(fft_len_);
        work_.resize(fft_len_);
    }
}

FieldTabulator::~FieldTabulator() = default;

void FieldTabulator::prepare_kernel(double h) {
    if (h == kernel_h_) return;
    const double theta = modes_->spacing * h;
    const long n = static_cast<long>(modes_->size());
    const long L = static_cast<long>(fft_len_);
    std::fill(kernel_.begin(), kernel_.end(), std::complex<double>{});
    for (long m = -(n - 1); m < static_cast<long>(chunk_); ++m) {
        const double md = static_cast<double>(m);
        kernel_[static_cast<std::size_t>((m + L) % L)] = unit_phase(-0.5 * theta * md * md);
    }
    fft_->forward(kernel_);
    kernel_h_ = h;
}

void FieldTabulator::tabulate(const FieldRealization& r, double t0, double h, std::span<double> out) {
    if (!(h > 0)) throw Error(ErrorCode::InvalidArgument, "tabulation step must be positive");
    if (!modes_->uniform) {
        tabulate_direct(r, t0, h, out);
        return;
    }
    prepare_kernel(h);
    for (std::size_t start = 0; start < out.size(); start += chunk_) {
        const std::size_t len = std::min(chunk_, out.size() - start);
        tabulate_chunk(r, t0 + static_cast<double>(start) * h, h, out.subspan(start, len));
    }
}

void FieldTabulator::tabulate_chunk(const FieldRealization& r, double t0, double h, std::span<double> out) {
    const ModeSet& m = *modes_;
    const double theta = m.spacing * h;
    std::fill(work_.begin(), work_.end(), std::complex<double>{});
    for (std::size_t j = 0; j < m.size(); ++j) {
        const double jd = static_cast<double>(j);
        const std::complex<double> coeff{m.amplitude[j] * r.a[j], -m.amplitude[j] * r.b[j]};
        work_[j] = coeff * unit_phase(m.omega[j] * t0) * unit_phase(0.5 * theta * jd * jd);
    }
    fft_->forward(work_);
    for (std::size_t k = 0; k < fft_len_; ++k) work_[k] *= kernel_[k];
    fft_->backward(work_);
    const double inv = 1.0 / static_cast<double>(fft_len_);
    for (std::size_t k = 0; k < out.size(); ++k) {
        const double kd = static_cast<double>(k);
        const std::complex<double> post = unit_phase(m.omega[0] * kd * h + 0.5 * theta * kd * kd);
        out[k] = (post * work_[k]).real() * inv;
    }
}

void FieldTabulator::tabulate_direct(const FieldRealization& r, double t0, double h, std::span<double> out) {
    const ModeSet& m = *modes_;
    std::vector<std::complex<double>> z(m.size());
    std::vector<std::complex<double>> rot(m.size());
    constexpr std::size_t resync = 256;
    for (std::size_t k = 0; k < out.size(); ++k) {
        if (k % resync == 0) {
            const double t = t0 + static_cast<double>(k) * h;
            for (std::size_t j = 0; j < m.size(); ++j) {
                z[j] = std::complex<double>{m.amplitude[j] * r.a[j], -m.amplitude[j] * r.b[j]} *
                       unit_phase(m.omega[j] * t);
                rot[j] = unit_phase(m.omega[j] * h);
            }
        }
        double e = 0.0;
        for (std::size_t j = 0; j < m.size(); ++j) {
            e += z[j].real();
            z[j] *= rot[j];
        }
        out[k] = e;
    }
}

}  // namespace sedqm
