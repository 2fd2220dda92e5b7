#pragma once

#include <complex>

#include <fftw3.h>

namespace turbulux::detail {

/// In-place n x n complex FFT pair on an fftw_malloc'd buffer.
class Fft2d {
public:
    explicit Fft2d(int n);
    ~Fft2d();
    Fft2d(const Fft2d&) = delete;
    Fft2d& operator=(const Fft2d&) = delete;

    std::complex<double>* data() { return data_; }
    int size() const { return n_; }

    void forward();
    /// Unnormalized inverse.
    void backward();

private:
    int n_;
    std::complex<double>* data_;
    fftw_plan fwd_;
    fftw_plan bwd_;
};

}  // namespace turbulux::detail
