#pragma once

#include <fftw3.h>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <utility>
#include <vector>

#include "srr/core/grid.hpp"

namespace srr {

namespace detail {

// FFTW planning is not thread-safe; execution with new-array execute is.
class FftPlanCache {
public:
    static FftPlanCache& instance() {
        static FftPlanCache cache;
        return cache;
    }

    fftw_plan get(int n, int sign) {
        std::lock_guard lock(mutex_);
        auto key = std::make_pair(n, sign);
        if (auto it = plans_.find(key); it != plans_.end()) return it->second;
        auto* buf = fftw_alloc_complex(static_cast<std::size_t>(n));
        fftw_plan p = fftw_plan_dft_1d(n, buf, buf, sign, FFTW_ESTIMATE);
        fftw_free(buf);
        plans_.emplace(key, p);
        return p;
    }

    ~FftPlanCache() {
        for (auto& [k, p] : plans_) fftw_destroy_plan(p);
    }

private:
    FftPlanCache() = default;
    std::mutex mutex_;
    std::map<std::pair<int, int>, fftw_plan> plans_;
};

struct FftwBuffer {
    explicit FftwBuffer(std::size_t n) : ptr(fftw_alloc_complex(n)), size(n) {}
    ~FftwBuffer() { fftw_free(ptr); }
    FftwBuffer(const FftwBuffer&) = delete;
    FftwBuffer& operator=(const FftwBuffer&) = delete;
    fftw_complex* ptr;
    std::size_t size;
};

// Centered unitary transform along one axis: DC of the output sits at n/2,
// the image origin of the input sits at n/2.
inline void centered_dft_axis(ComplexGrid& g, std::size_t axis, int sign) {
    const auto& dims = g.dims();
    const std::size_t n = dims[axis];
    const auto strides = row_major_strides(dims);
    const std::size_t stride = strides[axis];
    const std::size_t outer = element_count(dims) / (n * stride);
    const std::size_t c = n / 2;
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));

    fftw_plan plan = FftPlanCache::instance().get(static_cast<int>(n), sign);
    FftwBuffer buf(n);
    auto* data = g.data().data();
    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t inner = 0; inner < stride; ++inner) {
            auto* line = data + o * n * stride + inner;
            for (std::size_t j = 0; j < n; ++j) {
                const std::size_t b = (j + n - c) % n;
                buf.ptr[b][0] = line[j * stride].real();
                buf.ptr[b][1] = line[j * stride].imag();
            }
            fftw_execute_dft(plan, buf.ptr, buf.ptr);
            for (std::size_t k = 0; k < n; ++k) {
                const std::size_t b = (k + n - c) % n;
                line[k * stride] = {buf.ptr[b][0] * scale, buf.ptr[b][1] * scale};
            }
        }
    }
}

inline std::vector<std::size_t> resolve_axes(const ComplexGrid& g, std::vector<std::size_t> axes) {
    if (axes.empty())
        for (std::size_t a = 0; a < g.rank(); ++a) axes.push_back(a);
    for (auto a : axes)
        require(a < g.rank(), ErrorCategory::dimension,
                "dft axis " + std::to_string(a) + " out of range for rank " + std::to_string(g.rank()));
    return axes;
}

}  // namespace detail

/// Unitary centered forward DFT over `axes` (all axes when empty).
inline ComplexGrid dft(ComplexGrid g, std::vector<std::size_t> axes = {}) {
    for (auto a : detail::resolve_axes(g, std::move(axes))) detail::centered_dft_axis(g, a, FFTW_FORWARD);
    g.set_domain(Domain::kspace);
    return g;
}

inline ComplexGrid idft(ComplexGrid g, std::vector<std::size_t> axes = {}) {
    for (auto a : detail::resolve_axes(g, std::move(axes))) detail::centered_dft_axis(g, a, FFTW_BACKWARD);
    g.set_domain(Domain::image);
    return g;
}

/// Axes list covering the trailing `spatial_rank` dimensions of `g`.
inline std::vector<std::size_t> trailing_axes(const ComplexGrid& g, std::size_t spatial_rank) {
    std::vector<std::size_t> axes;
    for (std::size_t a = g.rank() - spatial_rank; a < g.rank(); ++a) axes.push_back(a);
    return axes;
}

}  // namespace srr
