#pragma once

// Thin RAII layer over FFTW. Plans are created with FFTW_ESTIMATE so the
// chosen algorithm, and therefore every rounding error, is the same on every
// run; buffers come from fftw_malloc so alignment never changes the plan.

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <mutex>
#include <new>
#include <span>

namespace sqhhg {

namespace detail {
/// FFTW's planner is not re-entrant; execution of an existing plan is.
inline std::mutex& fftw_planner_mutex()
{
    static std::mutex m;
    return m;
}
}  // namespace detail

/// In-place complex transform on an owned buffer. Unnormalized both ways.
class ComplexFft {
public:
    explicit ComplexFft(std::size_t n) : n_(n)
    {
        data_ = fftw_alloc_complex(n);
        if (data_ == nullptr) throw std::bad_alloc();
        std::lock_guard lock(detail::fftw_planner_mutex());
        forward_ = fftw_plan_dft_1d(static_cast<int>(n), data_, data_, FFTW_FORWARD, FFTW_ESTIMATE);
        backward_ = fftw_plan_dft_1d(static_cast<int>(n), data_, data_, FFTW_BACKWARD, FFTW_ESTIMATE);
    }

    ComplexFft(const ComplexFft&) = delete;
    ComplexFft& operator=(const ComplexFft&) = delete;

    ~ComplexFft()
    {
        std::lock_guard lock(detail::fftw_planner_mutex());
        fftw_destroy_plan(forward_);
        fftw_destroy_plan(backward_);
        fftw_free(data_);
    }

    std::span<std::complex<double>> data() noexcept
    {
        return {reinterpret_cast<std::complex<double>*>(data_), n_};
    }
    std::size_t size() const noexcept { return n_; }

    void forward() noexcept { fftw_execute(forward_); }
    void backward() noexcept { fftw_execute(backward_); }

private:
    std::size_t n_;
    fftw_complex* data_ = nullptr;
    fftw_plan forward_ = nullptr;
    fftw_plan backward_ = nullptr;
};

/// Real-to-half-complex forward transform: n reals in, n/2 + 1 bins out.
class RealFft {
public:
    explicit RealFft(std::size_t n) : n_(n)
    {
        in_ = fftw_alloc_real(n);
        out_ = fftw_alloc_complex(n / 2 + 1);
        if (in_ == nullptr || out_ == nullptr) {
            fftw_free(in_);
            fftw_free(out_);
            throw std::bad_alloc();
        }
        std::lock_guard lock(detail::fftw_planner_mutex());
        plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_, out_, FFTW_ESTIMATE);
    }

    RealFft(const RealFft&) = delete;
    RealFft& operator=(const RealFft&) = delete;

    ~RealFft()
    {
        std::lock_guard lock(detail::fftw_planner_mutex());
        fftw_destroy_plan(plan_);
        fftw_free(in_);
        fftw_free(out_);
    }

    std::span<double> input() noexcept { return {in_, n_}; }
    std::span<const std::complex<double>> output() const noexcept
    {
        return {reinterpret_cast<const std::complex<double>*>(out_), n_ / 2 + 1};
    }

    void execute() noexcept { fftw_execute(plan_); }

private:
    std::size_t n_;
    double* in_ = nullptr;
    fftw_complex* out_ = nullptr;
    fftw_plan plan_ = nullptr;
};

}  // namespace sqhhg
