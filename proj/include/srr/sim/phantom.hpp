#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "srr/core/grid.hpp"
#include "srr/ops/operators.hpp"

namespace srr {

struct PhantomSpec {
    Dims hr_dims{64, 64};
    std::size_t shapes = 8;
    double intensity_min = 0.1;
    double intensity_max = 1.0;
    bool complex_phase = false;
    double edge_width = 0.015;  // in normalized FOV units ([-1, 1] per axis)
    std::uint64_t seed = 0;
    double noise_sigma = 0.01;

    void validate() const {
        require(hr_dims.size() == 2, ErrorCategory::config, "phantoms are 2D");
        for (auto d : hr_dims) require(d > 0, ErrorCategory::config, "phantom dims must be positive");
        require(noise_sigma >= 0.0, ErrorCategory::config, "noise sigma must be >= 0");
        require(0.0 <= intensity_min && intensity_min <= intensity_max && intensity_max <= 1.0,
                ErrorCategory::config, "intensity range must lie in [0, 1]");
        require(edge_width > 0.0, ErrorCategory::config, "edge width must be positive");
    }
};

/// Random soft-edged ellipse composition.
///
/// Shape 0 is a large outer ellipse; the rest are placed inside it. Shapes add,
/// the magnitude is clamped at 1 and the result rescaled so the peak is 1.
inline ComplexGrid make_phantom(const PhantomSpec& spec) {
    spec.validate();
    const std::size_t ny = spec.hr_dims[0], nx = spec.hr_dims[1];
    ComplexGrid img(spec.hr_dims, Domain::image);
    if (spec.shapes == 0) return img;

    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto uni = [&](double a, double b) { return a + (b - a) * u(rng); };

    struct Ellipse {
        double cy, cx, ay, ax, angle, value;
    };
    std::vector<Ellipse> shapes;
    shapes.push_back({uni(-0.05, 0.05), uni(-0.05, 0.05), uni(0.75, 0.88), uni(0.65, 0.8), uni(-0.3, 0.3),
                      uni(spec.intensity_min, spec.intensity_max) * 0.5});
    for (std::size_t s = 1; s < spec.shapes; ++s) {
        const double r = uni(0.0, 0.5), t = uni(0.0, 2.0 * std::numbers::pi);
        shapes.push_back({r * std::sin(t), r * std::cos(t), uni(0.04, 0.3), uni(0.04, 0.3),
                          uni(0.0, std::numbers::pi), uni(spec.intensity_min, spec.intensity_max)});
    }
    const double p0 = uni(-std::numbers::pi, std::numbers::pi);
    const double py = uni(-1.5, 1.5), px = uni(-1.5, 1.5);

    for (std::size_t iy = 0; iy < ny; ++iy) {
        const double y = 2.0 * (static_cast<double>(iy) - static_cast<double>(ny / 2)) / static_cast<double>(ny);
        for (std::size_t ix = 0; ix < nx; ++ix) {
            const double x = 2.0 * (static_cast<double>(ix) - static_cast<double>(nx / 2)) / static_cast<double>(nx);
            double v = 0.0;
            for (const auto& e : shapes) {
                const double c = std::cos(e.angle), s = std::sin(e.angle);
                const double dy = y - e.cy, dx = x - e.cx;
                const double ry = (c * dy - s * dx) / e.ay, rx = (s * dy + c * dx) / e.ax;
                const double rho = std::sqrt(ry * ry + rx * rx);
                // Logistic edge at rho = 1 with width in FOV units.
                const double scale = std::min(e.ay, e.ax);
                v += e.value / (1.0 + std::exp((rho - 1.0) * scale / spec.edge_width));
            }
            v = std::min(v, 1.0);
            const double phase = spec.complex_phase ? p0 + py * y + px * x : 0.0;
            img[iy * nx + ix] = std::polar(v, phase);
        }
    }
    const double peak = max_abs(img);
    if (peak > 0.0) img *= 1.0 / peak;
    return img;
}

/// Largest per-pixel map difference allowed for synthetic coils, in units of
/// map change per normalized FOV length (FOV spans [-1, 1]).
inline constexpr double kSensSmoothnessBound = 4.0;

/// Gaussian-profiled coils on a ring around the FOV, RSS-normalized to 1 everywhere.
inline SensitivitySet make_sens(const Dims& hr_dims, std::size_t n_coils, std::uint64_t seed) {
    require(n_coils >= 1, ErrorCategory::config, "need at least one coil");
    require(hr_dims.size() == 2, ErrorCategory::config, "synthetic coils are 2D");
    const std::size_t ny = hr_dims[0], nx = hr_dims[1];
    Dims dims{n_coils, ny, nx};
    ComplexGrid maps(dims, Domain::image);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double base = 2.0 * std::numbers::pi * u(rng);
    for (std::size_t c = 0; c < n_coils; ++c) {
        const double ang = base + 2.0 * std::numbers::pi * static_cast<double>(c) / static_cast<double>(n_coils) +
                           0.2 * (u(rng) - 0.5);
        const double ring = 1.3 + 0.2 * u(rng);
        const double cy = ring * std::sin(ang), cx = ring * std::cos(ang);
        const double sigma = 0.9 + 0.3 * u(rng);
        const double phase0 = n_coils == 1 ? 0.0 : 2.0 * std::numbers::pi * u(rng);
        const double phase_slope = n_coils == 1 ? 0.0 : 0.5 * (u(rng) - 0.5);
        for (std::size_t iy = 0; iy < ny; ++iy) {
            const double y = 2.0 * (static_cast<double>(iy) - static_cast<double>(ny / 2)) / static_cast<double>(ny);
            for (std::size_t ix = 0; ix < nx; ++ix) {
                const double x = 2.0 * (static_cast<double>(ix) - static_cast<double>(nx / 2)) / static_cast<double>(nx);
                const double d2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
                const double mag = std::exp(-d2 / (2.0 * sigma * sigma));
                const double ph = phase0 + phase_slope * (y * std::cos(ang) - x * std::sin(ang));
                maps[(c * ny + iy) * nx + ix] = std::polar(mag, ph);
            }
        }
    }
    SensitivitySet s(std::move(maps));
    s.normalize();
    return s;
}

/// Largest neighbor difference of any coil map, per normalized FOV length.
inline double sens_max_gradient(const SensitivitySet& s) {
    const auto sd = s.spatial_dims();
    const std::size_t ny = sd[0], nx = sd[1], nv = ny * nx;
    double worst = 0.0;
    for (std::size_t c = 0; c < s.coils(); ++c)
        for (std::size_t iy = 0; iy < ny; ++iy)
            for (std::size_t ix = 0; ix < nx; ++ix) {
                const auto m = s.maps()[c * nv + iy * nx + ix];
                if (ix + 1 < nx)
                    worst = std::max(worst, std::abs(s.maps()[c * nv + iy * nx + ix + 1] - m) * nx / 2.0);
                if (iy + 1 < ny)
                    worst = std::max(worst, std::abs(s.maps()[c * nv + (iy + 1) * nx + ix] - m) * ny / 2.0);
            }
    return worst;
}

/// y = M H F C x + b, with complex Gaussian b (σ per component) on sampled points only.
inline ComplexGrid acquire(const ComplexGrid& x, const SensitivitySet& sens, const SamplingMask& mask,
                           const Dims& lr_dims, double sigma, std::uint64_t seed) {
    require(sigma >= 0.0, ErrorCategory::config, "noise sigma must be >= 0");
    ForwardModel model(mask, lr_dims, x.dims(), sens);
    auto y = model.forward(x);
    if (sigma > 0.0) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> nd(0.0, sigma);
        const std::size_t n = mask.size();
        for (std::size_t i = 0; i < y.size(); ++i)
            if (mask[i % n]) y[i] += cplx{nd(rng), nd(rng)};
    }
    return y;
}

/// Low-resolution coil-map surrogate: per-coil inverse DFT of the zero-padded
/// calibration block, divided by the RSS wherever the RSS exceeds
/// `rel_eps`·max(RSS); zero elsewhere.
inline SensitivitySet estimate_sens_lowres(const ComplexGrid& y_center, const Dims& target_dims,
                                           double rel_eps = 0.02) {
    require(y_center.rank() == target_dims.size() + 1, ErrorCategory::dimension,
            "calibration data must be [coil, spatial...]");
    auto padded = zeropad_kspace(y_center, target_dims);
    const auto axes = trailing_axes(padded, target_dims.size());
    auto imgs = idft(std::move(padded), axes);
    SensitivitySet s(std::move(imgs));
    const auto rss = s.rss();
    const double peak = rss.empty() ? 0.0 : *std::max_element(rss.begin(), rss.end());
    if (peak == 0.0) return s;  // all-zero maps, empty support
    s.normalize(rel_eps * peak);
    return s;
}

/// Coil maps carried to a coarser grid by k-space cropping, then RSS-renormalized.
inline SensitivitySet downsample_sens(const SensitivitySet& sens, const Dims& lr_dims) {
    const auto axes = trailing_axes(sens.maps(), lr_dims.size());
    auto k = crop_kspace(dft(sens.maps(), axes), lr_dims);
    SensitivitySet out(idft(std::move(k), axes));
    out.normalize(1e-12);
    return out;
}

}  // namespace srr
