#pragma once

// Thin RAII layer over FFTW's guru interface: unnormalized DFTs along an
// arbitrary subset of axes of a row-major complex array.

#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <vector>

#include <fftw3.h>

namespace harmonic::detail {

using cplx = std::complex<double>;

enum class Direction { forward, backward };

// FFTW's planner is not reentrant; execution is.
inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

struct FftwFree {
    void operator()(fftw_complex* p) const noexcept { fftw_free(p); }
};

struct FftwPlanDestroy {
    void operator()(fftw_plan_s* p) const noexcept {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(p);
    }
};

inline std::vector<std::size_t> row_major_strides(std::span<const std::size_t> shape) {
    std::vector<std::size_t> strides(shape.size(), 1);
    for (std::size_t d = shape.size(); d-- > 1;) strides[d - 1] = strides[d] * shape[d];
    return strides;
}

/// In-place DFT X_k = sum_j x_j exp(-+2 pi i jk/N) along `axes` (forward uses
/// the minus sign). Axes not listed are looped over.
inline void dft_axes(std::span<cplx> data, std::span<const std::size_t> shape,
                     std::span<const std::size_t> axes, Direction dir) {
    if (axes.empty() || data.empty()) return;
    std::size_t total = 1;
    for (auto n : shape) total *= n;
    if (total != data.size()) throw std::invalid_argument("dft_axes: shape does not match data size");

    const auto strides = row_major_strides(shape);
    std::vector<bool> transformed(shape.size(), false);
    std::vector<fftw_iodim64> dims;
    for (auto a : axes) {
        if (a >= shape.size()) throw std::invalid_argument("dft_axes: axis out of range");
        if (transformed[a]) continue;
        transformed[a] = true;
        dims.push_back({static_cast<ptrdiff_t>(shape[a]), static_cast<ptrdiff_t>(strides[a]),
                        static_cast<ptrdiff_t>(strides[a])});
    }
    std::vector<fftw_iodim64> loops;
    for (std::size_t d = 0; d < shape.size(); ++d) {
        if (transformed[d]) continue;
        loops.push_back({static_cast<ptrdiff_t>(shape[d]), static_cast<ptrdiff_t>(strides[d]),
                         static_cast<ptrdiff_t>(strides[d])});
    }

    // Planning and executing on fftw_malloc'd storage keeps the chosen
    // codelets independent of the caller's alignment, so results are
    // bit-reproducible.
    std::unique_ptr<fftw_complex, FftwFree> buf(fftw_alloc_complex(total));
    if (!buf) throw std::bad_alloc();
    const int sign = dir == Direction::forward ? FFTW_FORWARD : FFTW_BACKWARD;
    std::unique_ptr<fftw_plan_s, FftwPlanDestroy> plan;
    {
        std::lock_guard lock(fftw_planner_mutex());
        plan.reset(fftw_plan_guru64_dft(static_cast<int>(dims.size()), dims.data(),
                                        static_cast<int>(loops.size()), loops.data(), buf.get(),
                                        buf.get(), sign, FFTW_ESTIMATE));
    }
    if (!plan) throw std::runtime_error("dft_axes: FFTW failed to create a plan");

    auto* raw = reinterpret_cast<cplx*>(buf.get());
    std::copy(data.begin(), data.end(), raw);
    fftw_execute_dft(plan.get(), buf.get(), buf.get());
    std::copy(raw, raw + total, data.begin());
}

}  // namespace harmonic::detail
