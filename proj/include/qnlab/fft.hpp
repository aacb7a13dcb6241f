#pragma once

#include <bit>
#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include <fftw3.h>

#include "qnlab/errors.hpp"

namespace qnlab {

using cplx = std::complex<double>;

namespace detail {

// The FFTW planner is not thread-safe; every plan is built under this lock.
inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

}  // namespace detail

/// In-place complex FFT of one power-of-two length (FFTW backend).
/// Plans use FFTW_ESTIMATE, so results do not depend on timing, and
/// executing a plan is thread-safe.
class FftPlan {
public:
    explicit FftPlan(std::size_t n) : n_(n) {
        if (n < 2 || !std::has_single_bit(n)) {
            throw InvalidArgument("FFT length must be a power of two >= 2");
        }
        std::vector<cplx> scratch(n);
        auto* p = reinterpret_cast<fftw_complex*>(scratch.data());
        const int len = static_cast<int>(n);
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        std::lock_guard lock(detail::fftw_planner_mutex());
        fwd_ = fftw_plan_dft_1d(len, p, p, FFTW_FORWARD, flags);
        inv_ = fftw_plan_dft_1d(len, p, p, FFTW_BACKWARD, flags);
        if (!fwd_ || !inv_) throw InvalidArgument("FFTW could not build a plan");
    }

    FftPlan(const FftPlan&) = delete;
    FftPlan& operator=(const FftPlan&) = delete;

    ~FftPlan() {
        std::lock_guard lock(detail::fftw_planner_mutex());
        if (fwd_) fftw_destroy_plan(fwd_);
        if (inv_) fftw_destroy_plan(inv_);
    }

    std::size_t size() const noexcept { return n_; }

    /// Unnormalized forward transform: X_k = sum_j x_j e^{-2 pi i jk/n}.
    void forward(std::span<cplx> data) const { run(fwd_, data); }

    /// Unnormalized inverse transform: x_j = sum_k X_k e^{+2 pi i jk/n}.
    void inverse(std::span<cplx> data) const { run(inv_, data); }

    /// Plans are cached process-wide by length.
    static std::shared_ptr<const FftPlan> get(std::size_t n) {
        // Construct the planner lock first so it outlives the cache.
        detail::fftw_planner_mutex();
        static std::mutex mutex;
        static std::map<std::size_t, std::shared_ptr<const FftPlan>> cache;
        std::lock_guard lock(mutex);
        auto& slot = cache[n];
        if (!slot) slot = std::make_shared<const FftPlan>(n);
        return slot;
    }

private:
    void run(fftw_plan plan, std::span<cplx> a) const {
        if (a.size() != n_) throw InvalidArgument("FFT input length does not match the plan");
        auto* p = reinterpret_cast<fftw_complex*>(a.data());
        fftw_execute_dft(plan, p, p);
    }

    std::size_t n_;
    fftw_plan fwd_ = nullptr;
    fftw_plan inv_ = nullptr;
};

}  // namespace qnlab
