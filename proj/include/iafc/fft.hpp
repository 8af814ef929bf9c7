#pragma once

#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include <fftw3.h>

#include "iafc/error.hpp"

namespace iafc::fft {

namespace detail {

struct PlanDeleter {
    void operator()(fftw_plan_s* p) const { fftw_destroy_plan(p); }
};
using Plan = std::unique_ptr<fftw_plan_s, PlanDeleter>;

// FFTW planning is not thread-safe; execution of an existing plan on new
// arrays is. Plans are built once per size under the lock and then shared.
inline fftw_plan backward_plan(std::size_t n)
{
    static std::mutex mutex;
    static std::map<std::size_t, Plan> plans;

    std::lock_guard lock(mutex);
    auto it = plans.find(n);
    if (it == plans.end()) {
        std::vector<std::complex<double>> in(n), out(n);
        fftw_plan p = fftw_plan_dft_1d(static_cast<int>(n), reinterpret_cast<fftw_complex*>(in.data()),
                                       reinterpret_cast<fftw_complex*>(out.data()), FFTW_BACKWARD,
                                       FFTW_ESTIMATE | FFTW_UNALIGNED);
        if (p == nullptr) throw GridError("FFTW could not plan a transform of this size");
        it = plans.emplace(n, Plan(p)).first;
    }
    return it->second.get();
}

} // namespace detail

/// Unnormalized backward DFT: out[k] = sum_j in[j] exp(+2 pi i j k / n).
inline std::vector<std::complex<double>> backward(std::span<const std::complex<double>> in)
{
    std::vector<std::complex<double>> src(in.begin(), in.end());
    std::vector<std::complex<double>> out(in.size());
    fftw_execute_dft(detail::backward_plan(in.size()), reinterpret_cast<fftw_complex*>(src.data()),
                     reinterpret_cast<fftw_complex*>(out.data()));
    return out;
}

} // namespace iafc::fft
