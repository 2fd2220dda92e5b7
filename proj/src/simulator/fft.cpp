#include "fft.hpp"

#include <mutex>
#include <new>

namespace turbulux::detail {
namespace {

// the FFTW planner is not reentrant
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

}  // namespace

Fft2d::Fft2d(int n) : n_(n) {
    const auto count = static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
    std::lock_guard<std::mutex> lock(planner_mutex());
    data_ = reinterpret_cast<std::complex<double>*>(fftw_malloc(sizeof(fftw_complex) * count));
    if (data_ == nullptr) throw std::bad_alloc();
    auto* buf = reinterpret_cast<fftw_complex*>(data_);
    fwd_ = fftw_plan_dft_2d(n, n, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
    bwd_ = fftw_plan_dft_2d(n, n, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
}

Fft2d::~Fft2d() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
    fftw_free(data_);
}

void Fft2d::forward() { fftw_execute(fwd_); }

void Fft2d::backward() { fftw_execute(bwd_); }

}  // namespace turbulux::detail
