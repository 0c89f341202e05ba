#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "srr/core/grid.hpp"

namespace srr {

inline constexpr double kPsnrCap = 99.0;

namespace detail {

inline void check_metric_inputs(const ComplexGrid& ref, const ComplexGrid& test, const char* what) {
    require(ref.dims() == test.dims(), ErrorCategory::dimension,
            std::string(what) + ": dims " + dims_string(ref.dims()) + " vs " + dims_string(test.dims()));
    require(ref.size() > 0, ErrorCategory::dimension, std::string(what) + ": empty image");
}

}  // namespace detail

/// PSNR in dB of the magnitude images, peak = max |ref|.
inline double psnr(const ComplexGrid& ref, const ComplexGrid& test) {
    detail::check_metric_inputs(ref, test, "psnr");
    const double peak = max_abs(ref);
    require(peak > 0.0, ErrorCategory::numeric, "psnr: reference image is identically zero");
    double se = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
        const double d = std::abs(ref[i]) - std::abs(test[i]);
        se += d * d;
    }
    const double mse = se / static_cast<double>(ref.size());
    if (mse < 1e-12 * peak * peak) return kPsnrCap;
    return 10.0 * std::log10(peak * peak / mse);
}

struct SsimOptions {
    std::size_t window = 11;
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
    std::optional<double> range;  // dynamic range; max |ref| when unset
};

namespace detail {

inline std::vector<double> gaussian_taps(std::size_t n, double sigma) {
    std::vector<double> w(n);
    const double c = static_cast<double>(n - 1) / 2.0;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = static_cast<double>(i) - c;
        w[i] = std::exp(-d * d / (2.0 * sigma * sigma));
        total += w[i];
    }
    for (auto& v : w) v /= total;
    return w;
}

// Separable "valid" filtering of an ny×nx image.
inline std::vector<double> filter_valid(const std::vector<double>& img, std::size_t ny, std::size_t nx,
                                        const std::vector<double>& w) {
    const std::size_t n = w.size(), oy = ny - n + 1, ox = nx - n + 1;
    std::vector<double> rows(ny * ox, 0.0), out(oy * ox, 0.0);
    for (std::size_t y = 0; y < ny; ++y)
        for (std::size_t x = 0; x < ox; ++x) {
            double acc = 0.0;
            for (std::size_t k = 0; k < n; ++k) acc += w[k] * img[y * nx + x + k];
            rows[y * ox + x] = acc;
        }
    for (std::size_t y = 0; y < oy; ++y)
        for (std::size_t x = 0; x < ox; ++x) {
            double acc = 0.0;
            for (std::size_t k = 0; k < n; ++k) acc += w[k] * rows[(y + k) * ox + x];
            out[y * ox + x] = acc;
        }
    return out;
}

}  // namespace detail

/// Mean local SSIM of the 2D magnitude images over all fully contained
/// Gaussian windows.
inline double ssim(const ComplexGrid& ref, const ComplexGrid& test, const SsimOptions& opt = {}) {
    detail::check_metric_inputs(ref, test, "ssim");
    require(ref.rank() == 2, ErrorCategory::dimension, "ssim expects 2D images");
    const std::size_t ny = ref.dims()[0], nx = ref.dims()[1];
    require(ny >= opt.window && nx >= opt.window, ErrorCategory::dimension,
            "ssim: image " + dims_string(ref.dims()) + " smaller than the window");
    const double range = opt.range.value_or(max_abs(ref));
    require(range > 0.0, ErrorCategory::numeric, "ssim: dynamic range is zero");
    const double c1 = (opt.k1 * range) * (opt.k1 * range), c2 = (opt.k2 * range) * (opt.k2 * range);
    const std::size_t n = ref.size();
    std::vector<double> a(n), b(n), aa(n), bb(n), ab(n);
    for (std::size_t i = 0; i < n; ++i) {
        a[i] = std::abs(ref[i]);
        b[i] = std::abs(test[i]);
        aa[i] = a[i] * a[i];
        bb[i] = b[i] * b[i];
        ab[i] = a[i] * b[i];
    }
    const auto w = detail::gaussian_taps(opt.window, opt.sigma);
    const auto ma = detail::filter_valid(a, ny, nx, w), mb = detail::filter_valid(b, ny, nx, w);
    const auto maa = detail::filter_valid(aa, ny, nx, w), mbb = detail::filter_valid(bb, ny, nx, w);
    const auto mab = detail::filter_valid(ab, ny, nx, w);
    double acc = 0.0;
    for (std::size_t i = 0; i < ma.size(); ++i) {
        const double va = maa[i] - ma[i] * ma[i], vb = mbb[i] - mb[i] * mb[i], cov = mab[i] - ma[i] * mb[i];
        acc += ((2.0 * ma[i] * mb[i] + c1) * (2.0 * cov + c2)) /
               ((ma[i] * ma[i] + mb[i] * mb[i] + c1) * (va + vb + c2));
    }
    return acc / static_cast<double>(ma.size());
}

}  // namespace srr
