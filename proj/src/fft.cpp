#include "sedqm/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <mutex>

#include "sedqm/common.hpp"

namespace sedqm {

namespace {
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace

std::complex<double>* fftw_alloc_complex_array(std::size_t n) {
    return reinterpret_cast<std::complex<double>*>(fftw_alloc_complex(n));
}

void fftw_free_array(void* p) { fftw_free(p); }

ComplexFft::ComplexFft(std::size_t n) : n_(n) {
    if (n == 0) throw Error(ErrorCode::InvalidArgument, "FFT length must be positive");
    std::lock_guard lock(planner_mutex());
    buffer_ = fftw_alloc_complex_array(n);
    auto* b = reinterpret_cast<fftw_complex*>(buffer_);
    plan_fwd_ = fftw_plan_dft_1d(static_cast<int>(n), b, b, FFTW_FORWARD, FFTW_ESTIMATE);
    plan_bwd_ = fftw_plan_dft_1d(static_cast<int>(n), b, b, FFTW_BACKWARD, FFTW_ESTIMATE);
}

ComplexFft::~ComplexFft() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd_));
    fftw_destroy_plan(static_cast<fftw_plan>(plan_bwd_));
    fftw_free(buffer_);
}

void ComplexFft::forward(std::span<std::complex<double>> data) {
    std::copy(data.begin(), data.end(), buffer_);
    fftw_execute(static_cast<fftw_plan>(plan_fwd_));
    std::copy(buffer_, buffer_ + n_, data.begin());
}

void ComplexFft::backward(std::span<std::complex<double>> data) {
    std::copy(data.begin(), data.end(), buffer_);
    fftw_execute(static_cast<fftw_plan>(plan_bwd_));
    std::copy(buffer_, buffer_ + n_, data.begin());
}

SineTransform::SineTransform(std::size_t n) : n_(n) {
    if (n == 0) throw Error(ErrorCode::InvalidArgument, "DST length must be positive");
    std::lock_guard lock(planner_mutex());
    buffer_ = fftw_alloc_real(2 * n);
    // two interleaved real sequences (re, im) with stride 2
    const int len = static_cast<int>(n);
    fftw_r2r_kind kind = FFTW_RODFT00;
    plan_ = fftw_plan_many_r2r(1, &len, 2, buffer_, nullptr, 2, 1, buffer_, nullptr, 2, 1, &kind,
                               FFTW_ESTIMATE);
}

SineTransform::~SineTransform() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(static_cast<fftw_plan>(plan_));
    fftw_free(buffer_);
}

void SineTransform::apply(std::span<std::complex<double>> data) {
    const double* src = reinterpret_cast<const double*>(data.data());
    std::copy(src, src + 2 * n_, buffer_);
    fftw_execute(static_cast<fftw_plan>(plan_));
    std::copy(buffer_, buffer_ + 2 * n_, reinterpret_cast<double*>(data.data()));
}

}  // namespace sedqm
