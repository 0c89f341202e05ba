#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include "srr/core/mask.hpp"

namespace srr {

struct MaskSpec {
    Dims dims{32, 32};
    double target_af = 4.0;
    Dims center_size{8, 8};
    std::uint64_t seed = 0;
    double af_tolerance = 0.05;  // relative
    double density_slope = 2.0;  // β in r(d) = r0·(1 + β·(d/d_max)^p)
    double density_exponent = 1.0;  // p

    void validate() const {
        require(dims.size() == 2, ErrorCategory::config, "masks are 2D, got dims " + dims_string(dims));
        require(center_size.size() == 2, ErrorCategory::config, "center size must be 2D");
        require(target_af >= 1.0, ErrorCategory::config, "target AF must be >= 1");
        for (std::size_t a = 0; a < 2; ++a)
            require(center_size[a] <= dims[a], ErrorCategory::config,
                    "center " + dims_string(center_size) + " exceeds dims " + dims_string(dims));
        require(af_tolerance >= 0.0, ErrorCategory::config, "AF tolerance must be >= 0");
        require(density_slope >= 0.0 && density_exponent > 0.0, ErrorCategory::config, "invalid density profile");
    }

    std::size_t center_points() const { return element_count(center_size); }

    // Largest AF reachable when only the center block is sampled.
    double max_af() const {
        const auto c = center_points();
        return c == 0 ? static_cast<double>(element_count(dims)) : static_cast<double>(element_count(dims)) / c;
    }
};

inline SamplingMask center_block_mask(const Dims& dims, const Dims& center_size) {
    SamplingMask m(dims, center_size);
    m.fill_center();
    return m;
}

inline SamplingMask full_mask(const Dims& dims) { return center_block_mask(dims, dims); }

namespace detail {

inline void check_af_reachable(const MaskSpec& spec) {
    spec.validate();
    require(spec.target_af <= spec.max_af() * (1.0 + 1e-12), ErrorCategory::config,
            "target AF " + std::to_string(spec.target_af) + " unachievable: the center block alone gives AF " +
                std::to_string(spec.max_af()));
}

inline bool within_tolerance(double achieved, const MaskSpec& spec) {
    return std::abs(achieved - spec.target_af) <= spec.af_tolerance * spec.target_af;
}

}  // namespace detail

/// Uniformly random points outside the center block, exactly ⌈N/af⌉ points in total.
inline SamplingMask uniform_random_mask(const MaskSpec& spec) {
    detail::check_af_reachable(spec);
    const std::size_t n = element_count(spec.dims);
    auto mask = center_block_mask(spec.dims, spec.center_size);
    const auto target = static_cast<std::size_t>(std::ceil(static_cast<double>(n) / spec.target_af - 1e-9));
    const std::size_t have = mask.count();
    require(target >= have, ErrorCategory::config, "target AF unachievable with the requested center block");
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < n; ++i)
        if (!mask[i]) candidates.push_back(i);
    std::mt19937_64 rng(spec.seed);
    std::shuffle(candidates.begin(), candidates.end(), rng);
    for (std::size_t k = 0; k < target - have; ++k) mask.set(candidates[k]);
    return mask;
}

/// Variable-density Poisson-disk dart throwing on the k-space plane.
///
/// Candidates are snapped to the grid before the distance test, so the
/// minimum-distance guarantee holds for the snapped positions: any two
/// accepted non-center points p, q satisfy |p − q| ≥ min(r(p), r(q)).
class PoissonDiskSampler {
public:
    explicit PoissonDiskSampler(MaskSpec spec) : spec_(std::move(spec)) {
        spec_.validate();
        cy_ = static_cast<double>(spec_.dims[0] / 2);
        cx_ = static_cast<double>(spec_.dims[1] / 2);
        const double ey = std::max(cy_, static_cast<double>(spec_.dims[0] - 1) - cy_);
        const double ex = std::max(cx_, static_cast<double>(spec_.dims[1] - 1) - cx_);
        d_max_ = std::max(std::hypot(ey, ex), 1.0);
    }

    const MaskSpec& spec() const noexcept { return spec_; }

    double distance_from_center(double y, double x) const { return std::hypot(y - cy_, x - cx_); }

    double radius_at_distance(double r0, double d) const {
        return r0 * (1.0 + spec_.density_slope * std::pow(std::min(d / d_max_, 1.0), spec_.density_exponent));
    }

    double radius_at(double r0, std::size_t iy, std::size_t ix) const {
        return radius_at_distance(r0, distance_from_center(static_cast<double>(iy), static_cast<double>(ix)));
    }

    /// Pattern for a fixed base radius; deterministic in (spec.seed, r0).
    SamplingMask generate(double r0) const {
        const std::size_t ny = spec_.dims[0], nx = spec_.dims[1];
        auto mask = center_block_mask(spec_.dims, spec_.center_size);
        std::vector<std::uint8_t> taken(ny * nx, 0);
        std::vector<std::size_t> accepted;
        std::mt19937_64 rng(spec_.seed);
        std::uniform_real_distribution<double> unit(0.0, 1.0);

        auto conflicts = [&](std::size_t iy, std::size_t ix) {
            const double rp = radius_at(r0, iy, ix);
            const auto w = static_cast<long>(std::ceil(rp));
            const long y0 = std::max(0L, static_cast<long>(iy) - w), y1 = std::min<long>(ny - 1, iy + w);
            const long x0 = std::max(0L, static_cast<long>(ix) - w), x1 = std::min<long>(nx - 1, ix + w);
            for (long y = y0; y <= y1; ++y)
                for (long x = x0; x <= x1; ++x) {
                    if (!taken[y * nx + x]) continue;
                    const double d = std::hypot(static_cast<double>(y) - iy, static_cast<double>(x) - ix);
                    if (d < std::min(rp, radius_at(r0, y, x))) return true;
                }
            return false;
        };
        auto try_accept = [&](long y, long x) {
            if (y < 0 || x < 0 || y >= static_cast<long>(ny) || x >= static_cast<long>(nx)) return false;
            const std::size_t i = static_cast<std::size_t>(y) * nx + static_cast<std::size_t>(x);
            if (taken[i] || mask.in_center(i) || conflicts(y, x)) return false;
            taken[i] = 1;
            accepted.push_back(i);
            return true;
        };

        std::vector<std::size_t> order(ny * nx);
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::shuffle(order.begin(), order.end(), rng);

        // Bridson flood from each still-free pixel in random order; the final
        // pass over every pixel makes the pattern maximal.
        constexpr int kCandidates = 30;
        for (std::size_t seed_pixel : order) {
            if (!try_accept(static_cast<long>(seed_pixel / nx), static_cast<long>(seed_pixel % nx))) continue;
            std::vector<std::size_t> active{seed_pixel};
            while (!active.empty()) {
                const std::size_t pick = static_cast<std::size_t>(unit(rng) * active.size()) % active.size();
                const std::size_t p = active[pick];
                const double py = static_cast<double>(p / nx), px = static_cast<double>(p % nx);
                const double r = radius_at(r0, p / nx, p % nx);
                bool found = false;
                for (int k = 0; k < kCandidates && !found; ++k) {
                    const double rho = r * (1.0 + unit(rng));
                    const double theta = 2.0 * std::numbers::pi * unit(rng);
                    const long y = std::lround(py + rho * std::sin(theta));
                    const long x = std::lround(px + rho * std::cos(theta));
                    if (try_accept(y, x)) {
                        active.push_back(static_cast<std::size_t>(y) * nx + static_cast<std::size_t>(x));
                        found = true;
                    }
                }
                if (!found) {
                    active[pick] = active.back();
                    active.pop_back();
                }
            }
        }
        for (auto i : accepted) mask.set(i);
        return mask;
    }

private:
    MaskSpec spec_;
    double cy_ = 0, cx_ = 0, d_max_ = 1;
};

struct PoissonDiskResult {
    SamplingMask mask;
    double base_radius = 0.0;
};

/// Bisection on the base radius until the achieved AF is within tolerance.
inline PoissonDiskResult poisson_disk_search(const MaskSpec& spec) {
    detail::check_af_reachable(spec);
    if (spec.target_af == 1.0) return {full_mask(spec.dims), 0.0};
    PoissonDiskSampler sampler(spec);
    double lo = 0.5, hi = static_cast<double>(std::max(spec.dims[0], spec.dims[1]));
    std::optional<PoissonDiskResult> best;
    double best_err = 0.0;
    for (int it = 0; it < 30; ++it) {
        const double r0 = 0.5 * (lo + hi);
        auto mask = sampler.generate(r0);
        const double af = mask.achieved_af();
        const double err = std::abs(af - spec.target_af);
        if (!best || err < best_err) {
            best = PoissonDiskResult{mask, r0};
            best_err = err;
        }
        if (detail::within_tolerance(af, spec)) return {std::move(mask), r0};
        if (af < spec.target_af) lo = r0;
        else hi = r0;
    }
    fail(ErrorCategory::numeric, "poisson-disk search missed target AF " + std::to_string(spec.target_af) +
                                     " (closest " + std::to_string(best->mask.achieved_af()) + ")");
}

inline SamplingMask poisson_disk_mask(const MaskSpec& spec) { return poisson_disk_search(spec).mask; }

}  // namespace srr
