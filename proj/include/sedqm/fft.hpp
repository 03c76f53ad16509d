#pragma once

#include <complex>
#include <cstddef>
#include <span>

namespace sedqm {

/// Owning FFTW plan pair for an in-place complex transform of fixed length.
/// Planning is serialised internally; execution on distinct instances is
/// thread-safe.  Transforms are unnormalised.
class ComplexFft {
public:
    explicit ComplexFft(std::size_t n);
    ~ComplexFft();
    ComplexFft(const ComplexFft&) = delete;
    ComplexFft& operator=(const ComplexFft&) = delete;

    std::size_t size() const { return n_; }
    /// sum_j x_j exp(-2 pi i jk/n)
    void forward(std::span<std::complex<double>> data);
    /// sum_k X_k exp(+2 pi i jk/n)
    void backward(std::span<std::complex<double>> data);

private:
    std::size_t n_;
    std::complex<double>* buffer_;
    void* plan_fwd_;
    void* plan_bwd_;
};

/// Type-I discrete sine transform (FFTW RODFT00) applied to the real and
/// imaginary parts of a complex vector.  Self-inverse up to 2(n+1).
class SineTransform {
public:
    explicit SineTransform(std::size_t n);
    ~SineTransform();
    SineTransform(const SineTransform&) = delete;
    SineTransform& operator=(const SineTransform&) = delete;

    std::size_t size() const { return n_; }
    void apply(std::span<std::complex<double>> data);

private:
    std::size_t n_;
    double* buffer_;
    void* plan_;
};

/// fftw_malloc-aligned storage.
std::complex<double>* fftw_alloc_complex_array(std::size_t n);
void fftw_free_array(void* p);

}  // namespace sedqm
