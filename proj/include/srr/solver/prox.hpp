#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "srr/core/grid.hpp"

namespace srr {

inline cplx soft_threshold(cplx v, double tau) {
    require(tau >= 0.0, ErrorCategory::config, "threshold must be >= 0");
    const double m = std::abs(v);
    if (m <= tau || m == 0.0) return {};
    return v * ((m - tau) / m);
}

/// Magnitude soft-thresholding, phase preserved.
inline ComplexGrid soft_threshold(ComplexGrid g, double tau) {
    for (auto& v : g.data()) v = soft_threshold(v, tau);
    return g;
}

namespace detail {

inline void haar_check(const Dims& d, int levels) {
    require(d.size() == 2, ErrorCategory::dimension, "haar2 expects a 2D grid");
    require(levels >= 0, ErrorCategory::config, "haar2 levels must be >= 0");
    const std::size_t f = std::size_t{1} << levels;
    require(d[0] % f == 0 && d[1] % f == 0, ErrorCategory::dimension,
            "haar2: dims " + dims_string(d) + " not divisible by 2^" + std::to_string(levels));
}

// One orthonormal analysis (forward) or synthesis step along a strided line of length n.
inline void haar_line(cplx* x, std::size_t n, std::size_t stride, bool forward, std::vector<cplx>& tmp) {
    const double s = 1.0 / std::numbers::sqrt2;
    const std::size_t h = n / 2;
    tmp.resize(n);
    if (forward) {
        for (std::size_t k = 0; k < h; ++k) {
            const cplx a = x[2 * k * stride], b = x[(2 * k + 1) * stride];
            tmp[k] = (a + b) * s;
            tmp[h + k] = (a - b) * s;
        }
    } else {
        for (std::size_t k = 0; k < h; ++k) {
            const cplx a = x[k * stride], d = x[(h + k) * stride];
            tmp[2 * k] = (a + d) * s;
            tmp[2 * k + 1] = (a - d) * s;
        }
    }
    for (std::size_t k = 0; k < n; ++k) x[k * stride] = tmp[k];
}

}  // namespace detail

/// Orthonormal multilevel 2D Haar transform; the approximation band ends up
/// in the top-left (ny/2^L × nx/2^L) block.
inline ComplexGrid haar2(ComplexGrid g, int levels) {
    detail::haar_check(g.dims(), levels);
    const std::size_t nx = g.dims()[1];
    std::size_t h = g.dims()[0], w = nx;
    std::vector<cplx> tmp;
    auto* p = g.data().data();
    for (int l = 0; l < levels; ++l, h /= 2, w /= 2) {
        for (std::size_t r = 0; r < h; ++r) detail::haar_line(p + r * nx, w, 1, true, tmp);
        for (std::size_t c = 0; c < w; ++c) detail::haar_line(p + c, h, nx, true, tmp);
    }
    return g;
}

inline ComplexGrid ihaar2(ComplexGrid g, int levels) {
    detail::haar_check(g.dims(), levels);
    const std::size_t nx = g.dims()[1];
    std::vector<cplx> tmp;
    auto* p = g.data().data();
    for (int l = levels - 1; l >= 0; --l) {
        const std::size_t h = g.dims()[0] >> l, w = nx >> l;
        for (std::size_t c = 0; c < w; ++c) detail::haar_line(p + c, h, nx, false, tmp);
        for (std::size_t r = 0; r < h; ++r) detail::haar_line(p + r * nx, w, 1, false, tmp);
    }
    return g;
}

enum class ProxKind { identity, soft, haar };

inline std::string prox_kind_name(ProxKind k) {
    switch (k) {
        case ProxKind::identity: return "identity";
        case ProxKind::soft: return "soft";
        case ProxKind::haar: return "haar";
    }
    return "identity";
}

inline ProxKind parse_prox_kind(const std::string& s) {
    if (s == "identity") return ProxKind::identity;
    if (s == "soft") return ProxKind::soft;
    if (s == "haar") return ProxKind::haar;
    fail(ErrorCategory::usage, "unknown prox kind '" + s + "' (expected identity|soft|haar)");
}

/// Proximal map of R = τ‖Ψ·‖₁ for Ψ ∈ {I, Haar}; identity for R = 0.
/// The Haar variant leaves the coarsest approximation band unthresholded.
struct ProxOperator {
    ProxKind kind = ProxKind::identity;
    double threshold = 0.0;
    int haar_levels = 3;

    ComplexGrid operator()(const ComplexGrid& u) const {
        switch (kind) {
            case ProxKind::identity: return u;
            case ProxKind::soft: return soft_threshold(u, threshold);
            case ProxKind::haar: {
                auto c = haar2(u, haar_levels);
                const std::size_t ny = c.dims()[0], nx = c.dims()[1];
                const std::size_t ay = ny >> haar_levels, ax = nx >> haar_levels;
                for (std::size_t y = 0; y < ny; ++y)
                    for (std::size_t x = 0; x < nx; ++x)
                        if (y >= ay || x >= ax) c[y * nx + x] = soft_threshold(c[y * nx + x], threshold);
                return ihaar2(std::move(c), haar_levels);
            }
        }
        return u;
    }
};

}  // namespace srr
