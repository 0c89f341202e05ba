#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "srr/core/grid.hpp"
#include "srr/core/mask.hpp"
#include "srr/ops/fft.hpp"

namespace srr {

namespace detail {

// Lifts `target` (rank <= g.rank()) to full rank by keeping the leading extents of g.
inline Dims full_rank_dims(const Dims& gdims, const Dims& target) {
    require(target.size() <= gdims.size() && !target.empty(), ErrorCategory::dimension,
            "target rank " + std::to_string(target.size()) + " incompatible with grid rank " +
                std::to_string(gdims.size()));
    Dims out(gdims.begin(), gdims.end() - static_cast<std::ptrdiff_t>(target.size()));
    out.insert(out.end(), target.begin(), target.end());
    return out;
}

// Start of the centered window of extent n inside extent N.
inline std::size_t window_start(std::size_t big, std::size_t small) { return big / 2 - small / 2; }

// Calls fn(big_offset, small_offset, row_length) for every contiguous row of the
// small grid mapped onto the centered window of the big grid.
template <class Fn>
void for_each_centered_row(const Dims& bd, const Dims& sd, Fn&& fn) {
    const auto bs = row_major_strides(bd);
    const std::size_t rank = sd.size();
    const std::size_t row = sd.back();
    const std::size_t rows = element_count(sd) / row;
    std::vector<std::size_t> idx(rank, 0);
    for (std::size_t r = 0; r < rows; ++r) {
        std::size_t rem = r;
        for (std::size_t a = rank - 1; a-- > 0;) {
            idx[a] = rem % sd[a];
            rem /= sd[a];
        }
        std::size_t off = window_start(bd.back(), row);
        for (std::size_t a = 0; a + 1 < rank; ++a) off += (idx[a] + window_start(bd[a], sd[a])) * bs[a];
        fn(off, r * row, row);
    }
}

}  // namespace detail

/// H: keeps the centered `lr_dims` block (trailing axes) of k-space.
inline ComplexGrid crop_kspace(const ComplexGrid& k, const Dims& lr_dims) {
    const Dims out_dims = detail::full_rank_dims(k.dims(), lr_dims);
    for (std::size_t a = 0; a < out_dims.size(); ++a)
        require(out_dims[a] <= k.dims()[a], ErrorCategory::dimension,
                "crop target " + dims_string(lr_dims) + " exceeds " + dims_string(k.dims()));
    ComplexGrid out(out_dims, k.domain());
    detail::for_each_centered_row(k.dims(), out_dims, [&](std::size_t big, std::size_t small, std::size_t n) {
        std::copy_n(k.data().begin() + static_cast<std::ptrdiff_t>(big), n, out.data().begin() + static_cast<std::ptrdiff_t>(small));
    });
    return out;
}

/// H*: embeds k at the center of a zero grid of `hr_dims` (trailing axes).
inline ComplexGrid zeropad_kspace(const ComplexGrid& k, const Dims& hr_dims) {
    const Dims out_dims = detail::full_rank_dims(k.dims(), hr_dims);
    for (std::size_t a = 0; a < out_dims.size(); ++a)
        require(out_dims[a] >= k.dims()[a], ErrorCategory::dimension,
                "zero-pad target " + dims_string(hr_dims) + " smaller than " + dims_string(k.dims()));
    ComplexGrid out(out_dims, k.domain());
    detail::for_each_centered_row(out_dims, k.dims(), [&](std::size_t big, std::size_t small, std::size_t n) {
        std::copy_n(k.data().begin() + static_cast<std::ptrdiff_t>(small), n, out.data().begin() + static_cast<std::ptrdiff_t>(big));
    });
    return out;
}

/// Per-coil complex sensitivity maps, dims [coil, spatial...].
class SensitivitySet {
public:
    SensitivitySet() = default;
    explicit SensitivitySet(ComplexGrid maps) : maps_(std::move(maps)) {
        require(maps_.rank() >= 2, ErrorCategory::dimension, "sensitivity maps need dims [coil, spatial...]");
    }

    const ComplexGrid& maps() const noexcept { return maps_; }
    std::size_t coils() const noexcept { return maps_.dims()[0]; }
    Dims spatial_dims() const { return Dims(maps_.dims().begin() + 1, maps_.dims().end()); }
    std::size_t voxels() const noexcept { return maps_.size() / coils(); }

    /// Root-sum-of-squares over coils per voxel.
    std::vector<double> rss() const {
        std::vector<double> out(voxels(), 0.0);
        for (std::size_t c = 0; c < coils(); ++c)
            for (std::size_t v = 0; v < out.size(); ++v) out[v] += std::norm(maps_[c * out.size() + v]);
        for (auto& r : out) r = std::sqrt(r);
        return out;
    }

    /// Scales each voxel to unit RSS where RSS > eps; zeroes the rest.
    void normalize(double eps = 0.0) {
        const auto r = rss();
        const std::size_t nv = voxels();
        for (std::size_t c = 0; c < coils(); ++c)
            for (std::size_t v = 0; v < nv; ++v) {
                auto& m = maps_[c * nv + v];
                m = r[v] > eps ? m / r[v] : cplx{};
            }
    }

private:
    ComplexGrid maps_;
};

/// C: voxelwise product of x with every coil map.
inline ComplexGrid apply_sens(const ComplexGrid& x, const SensitivitySet& s) {
    require(x.dims() == s.spatial_dims(), ErrorCategory::dimension,
            "apply_sens: image " + dims_string(x.dims()) + " vs maps " + dims_string(s.spatial_dims()));
    ComplexGrid out(s.maps().dims(), x.domain());
    const std::size_t nv = x.size();
    for (std::size_t c = 0; c < s.coils(); ++c)
        for (std::size_t v = 0; v < nv; ++v) out[c * nv + v] = s.maps()[c * nv + v] * x[v];
    return out;
}

/// C*: Σ_c conj(map_c)·z_c.
inline ComplexGrid combine_sens(const ComplexGrid& multi, const SensitivitySet& s) {
    require(multi.dims() == s.maps().dims(), ErrorCategory::dimension,
            "combine_sens: coil stack " + dims_string(multi.dims()) + " vs maps " + dims_string(s.maps().dims()));
    ComplexGrid out(s.spatial_dims(), multi.domain());
    const std::size_t nv = out.size();
    for (std::size_t c = 0; c < s.coils(); ++c)
        for (std::size_t v = 0; v < nv; ++v) out[v] += std::conj(s.maps()[c * nv + v]) * multi[c * nv + v];
    return out;
}

/// M (= M*): zeroes unsampled entries of a (coil-stacked) k-space grid in place.
inline void apply_mask_inplace(ComplexGrid& k, const SamplingMask& mask) {
    const std::size_t n = mask.size();
    require(k.size() % n == 0 && Dims(k.dims().end() - static_cast<std::ptrdiff_t>(mask.dims().size()),
                                      k.dims().end()) == mask.dims(),
            ErrorCategory::dimension, "mask " + dims_string(mask.dims()) + " does not match " + dims_string(k.dims()));
    for (std::size_t i = 0; i < k.size(); ++i)
        if (!mask[i % n]) k[i] = {};
}

inline ComplexGrid apply_mask(ComplexGrid k, const SamplingMask& mask) {
    apply_mask_inplace(k, mask);
    return k;
}

/// A = M H F C mapping HR images to masked LR multi-coil k-space.
class ForwardModel {
public:
    ForwardModel(SamplingMask mask, Dims lr_dims, Dims hr_dims, SensitivitySet sens)
        : mask_(std::move(mask)), lr_dims_(std::move(lr_dims)), hr_dims_(std::move(hr_dims)), sens_(std::move(sens)) {
        require(lr_dims_.size() == hr_dims_.size(), ErrorCategory::dimension, "lr/hr rank mismatch");
        for (std::size_t a = 0; a < lr_dims_.size(); ++a)
            require(lr_dims_[a] <= hr_dims_[a], ErrorCategory::dimension,
                    "lr dims " + dims_string(lr_dims_) + " exceed hr dims " + dims_string(hr_dims_));
        require(mask_.dims() == lr_dims_, ErrorCategory::dimension,
                "mask dims " + dims_string(mask_.dims()) + " differ from lr dims " + dims_string(lr_dims_));
        require(sens_.spatial_dims() == hr_dims_, ErrorCategory::dimension,
                "sensitivity dims " + dims_string(sens_.spatial_dims()) + " differ from hr dims " + dims_string(hr_dims_));
    }

    const SamplingMask& mask() const noexcept { return mask_; }
    const Dims& lr_dims() const noexcept { return lr_dims_; }
    const Dims& hr_dims() const noexcept { return hr_dims_; }
    const SensitivitySet& sens() const noexcept { return sens_; }
    Dims data_dims() const {
        Dims d{sens_.coils()};
        d.insert(d.end(), lr_dims_.begin(), lr_dims_.end());
        return d;
    }

    ComplexGrid forward(const ComplexGrid& x) const {
        require(x.dims() == hr_dims_, ErrorCategory::dimension,
                "forward: image " + dims_string(x.dims()) + " vs hr dims " + dims_string(hr_dims_));
        auto k = dft(apply_sens(x, sens_), trailing_axes_for(sens_.maps()));
        auto y = lr_dims_ == hr_dims_ ? std::move(k) : crop_kspace(k, lr_dims_);
        apply_mask_inplace(y, mask_);
        return y;
    }

    ComplexGrid adjoint(const ComplexGrid& y) const {
        require(y.dims() == data_dims(), ErrorCategory::dimension,
                "adjoint: data " + dims_string(y.dims()) + " vs " + dims_string(data_dims()));
        auto k = apply_mask(y, mask_);
        if (lr_dims_ != hr_dims_) k = zeropad_kspace(k, hr_dims_);
        return combine_sens(idft(std::move(k), trailing_axes_for(sens_.maps())), sens_);
    }

    /// A*A x
    ComplexGrid normal(const ComplexGrid& x) const { return adjoint(forward(x)); }

    /// ∇F(s) = A*(A s − y)
    ComplexGrid gradient(const ComplexGrid& s, const ComplexGrid& y) const {
        auto r = forward(s);
        r -= y;
        return adjoint(r);
    }

    /// ½‖A x − y‖²
    double fidelity(const ComplexGrid& x, const ComplexGrid& y) const {
        auto r = forward(x);
        r -= y;
        const double n = norm2(r);
        return 0.5 * n * n;
    }

private:
    std::vector<std::size_t> trailing_axes_for(const ComplexGrid& coil_stack) const {
        return trailing_axes(coil_stack, hr_dims_.size());
    }

    SamplingMask mask_;
    Dims lr_dims_;
    Dims hr_dims_;
    SensitivitySet sens_;
};

inline ComplexGrid forward(const ForwardModel& model, const ComplexGrid& x) { return model.forward(x); }
inline ComplexGrid adjoint(const ForwardModel& model, const ComplexGrid& y) { return model.adjoint(y); }
inline ComplexGrid data_fidelity_grad(const ForwardModel& model, const ComplexGrid& s, const ComplexGrid& y) {
    return model.gradient(s, y);
}

/// Largest eigenvalue of A*A (= ‖A‖²) by power iteration from a seeded random start.
inline double estimate_normal_norm(const ForwardModel& model, int iterations = 50, std::uint64_t seed = 7) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    ComplexGrid v(model.hr_dims());
    for (auto& s : v.data()) s = {nd(rng), nd(rng)};
    v *= 1.0 / norm2(v);
    double lambda = 0.0;
    for (int it = 0; it < iterations; ++it) {
        auto w = model.normal(v);
        lambda = inner_product(v, w).real();
        const double n = norm2(w);
        if (n == 0.0) return 0.0;
        v = w * (1.0 / n);
    }
    return lambda;
}

/// Equivalent acceleration: target voxels per acquired k-space point.
struct AccelerationFactor {
    std::size_t target_voxels = 0;
    std::size_t sampled_points = 0;
    double value() const { return static_cast<double>(target_voxels) / static_cast<double>(sampled_points); }
};

inline AccelerationFactor equivalent_af(const SamplingMask& mask, const Dims& target_dims) {
    const auto n = mask.count();
    require(n > 0, ErrorCategory::numeric, "equivalent_af: mask has no sampled points");
    return {element_count(target_dims), n};
}

}  // namespace srr
