#pragma once

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "srr/ad/ops.hpp"

namespace srr::ad {

/// A trilinear form T(a₀, a₁, a₂) whose three partial derivatives are the
/// forward op and its two adjoints. Every partial is itself bilinear, so its
/// backward is again a partial of T: the family is closed under
/// differentiation and supports any order of reverse mode.
class Trilinear {
public:
    virtual ~Trilinear() = default;
    virtual const Dims& slot_dims(int slot) const = 0;
    /// out = ∂T/∂a_target evaluated at the two other slots, given in increasing slot order.
    virtual void partial(int target, const double* first, const double* second, double* out) const = 0;
};

namespace detail {

inline std::array<int, 2> other_slots(int target) {
    switch (target) {
        case 0: return {1, 2};
        case 1: return {0, 2};
        default: return {0, 1};
    }
}

}  // namespace detail

/// ∂T/∂a_target with `first`, `second` bound to the other slots (increasing order).
inline Var trilinear_partial(std::shared_ptr<const Trilinear> form, int target, const Var& first, const Var& second) {
    const auto slots = detail::other_slots(target);
    require(first.dims() == form->slot_dims(slots[0]) && second.dims() == form->slot_dims(slots[1]),
            ErrorCategory::dimension,
            "trilinear: operand dims " + dims_string(first.dims()) + ", " + dims_string(second.dims()) +
                " do not match " + dims_string(form->slot_dims(slots[0])) + ", " + dims_string(form->slot_dims(slots[1])));
    const Dims& out_dims = form->slot_dims(target);
    std::vector<double> out(element_count(out_dims), 0.0);
    form->partial(target, first.value().data(), second.value().data(), out.data());
    return first.tape().record(
        out_dims, std::move(out), {first, second},
        [form, target, slots, first, second](Tape&, const Var& u, std::span<const bool> need) -> GradList {
            // d/d(first) of <u, ∂T/∂target(first, second)> = ∂T/∂first with target := u.
            GradList g(2);
            for (int k = 0; k < 2; ++k) {
                if (!need[k]) continue;
                const int wanted = slots[k];
                const int keep_slot = slots[1 - k];
                const Var& keep = k == 0 ? second : first;
                // Operands of the new partial in increasing slot order: {target: u, keep_slot: keep}.
                g[k] = target < keep_slot ? trilinear_partial(form, wanted, u, keep)
                                          : trilinear_partial(form, wanted, keep, u);
            }
            return g;
        });
}

// ---- convolution ------------------------------------------------------------

/// Same-padded, stride-1 cross-correlation over 1–3 spatial axes.
/// Slots: 0 = input [Cin, spatial...], 1 = kernel [Cout, Cin, k...], 2 = output [Cout, spatial...].
class ConvForm final : public Trilinear {
public:
    ConvForm(std::size_t cin, std::size_t cout, Dims spatial, Dims kernel)
        : cin_(cin), cout_(cout), spatial_rank_(spatial.size()) {
        require(spatial.size() == kernel.size() && !spatial.empty() && spatial.size() <= 3, ErrorCategory::dimension,
                "conv: spatial and kernel ranks must match (1-3)");
        for (auto k : kernel) require(k % 2 == 1, ErrorCategory::config, "conv: kernel extents must be odd");
        // Pad to 3 spatial axes with leading unit extents.
        for (std::size_t a = 0; a < 3 - spatial.size(); ++a) {
            sp_[a] = 1;
            k_[a] = 1;
        }
        for (std::size_t a = 0; a < spatial.size(); ++a) {
            sp_[3 - spatial.size() + a] = spatial[a];
            k_[3 - spatial.size() + a] = kernel[a];
        }
        dims_[0] = {cin};
        dims_[0].insert(dims_[0].end(), spatial.begin(), spatial.end());
        dims_[1] = {cout, cin};
        dims_[1].insert(dims_[1].end(), kernel.begin(), kernel.end());
        dims_[2] = {cout};
        dims_[2].insert(dims_[2].end(), spatial.begin(), spatial.end());
        taps_ = k_[0] * k_[1] * k_[2];
        voxels_ = sp_[0] * sp_[1] * sp_[2];
    }

    const Dims& slot_dims(int slot) const override { return dims_[static_cast<std::size_t>(slot)]; }

    void partial(int target, const double* first, const double* second, double* out) const override {
        using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
        using CMap = Eigen::Map<const RowMat>;
        using Map = Eigen::Map<RowMat>;
        const auto rows = static_cast<Eigen::Index>(cin_ * taps_);
        const auto cols = static_cast<Eigen::Index>(voxels_);
        const auto co = static_cast<Eigen::Index>(cout_);
        if (target == 2) {  // y = W · im2col(x)
            std::vector<double> col(cin_ * taps_ * voxels_);
            im2col(first, col.data());
            Map(out, co, cols).noalias() = CMap(second, co, rows) * CMap(col.data(), rows, cols);
        } else if (target == 0) {  // x̄ = col2im(Wᵀ · ȳ)
            std::vector<double> col(cin_ * taps_ * voxels_);
            Map(col.data(), rows, cols).noalias() = CMap(first, co, rows).transpose() * CMap(second, co, cols);
            col2im(col.data(), out);
        } else {  // W̄ = ȳ · im2col(x)ᵀ
            std::vector<double> col(cin_ * taps_ * voxels_);
            im2col(first, col.data());
            Map(out, co, rows).noalias() = CMap(second, co, cols) * CMap(col.data(), rows, cols).transpose();
        }
    }

private:
    // col[(i·taps + t), p] = x[i, p + offset(t)], zero outside.
    template <class Visit>
    void for_each_shift(Visit&& visit) const {
        const long d0 = static_cast<long>(sp_[0]), d1 = static_cast<long>(sp_[1]), d2 = static_cast<long>(sp_[2]);
        std::size_t t = 0;
        for (long a = 0; a < static_cast<long>(k_[0]); ++a)
            for (long b = 0; b < static_cast<long>(k_[1]); ++b)
                for (long c = 0; c < static_cast<long>(k_[2]); ++c, ++t) {
                    const long s0 = a - static_cast<long>(k_[0] / 2);
                    const long s1 = b - static_cast<long>(k_[1] / 2);
                    const long s2 = c - static_cast<long>(k_[2] / 2);
                    const long x0 = std::max(0L, -s2), x1 = std::min(d2, d2 - s2);
                    for (long z = std::max(0L, -s0); z < std::min(d0, d0 - s0); ++z)
                        for (long y = std::max(0L, -s1); y < std::min(d1, d1 - s1); ++y) {
                            const std::size_t dst = static_cast<std::size_t>((z * d1 + y) * d2 + x0);
                            const std::size_t src = static_cast<std::size_t>(((z + s0) * d1 + y + s1) * d2 + x0 + s2);
                            visit(t, dst, src, static_cast<std::size_t>(std::max(0L, x1 - x0)));
                        }
                }
    }

    void im2col(const double* x, double* col) const {
        std::fill_n(col, cin_ * taps_ * voxels_, 0.0);
        for (std::size_t i = 0; i < cin_; ++i) {
            const double* xi = x + i * voxels_;
            for_each_shift([&](std::size_t t, std::size_t dst, std::size_t src, std::size_t n) {
                std::copy_n(xi + src, n, col + (i * taps_ + t) * voxels_ + dst);
            });
        }
    }

    void col2im(const double* col, double* x) const {
        std::fill_n(x, cin_ * voxels_, 0.0);
        for (std::size_t i = 0; i < cin_; ++i) {
            double* xi = x + i * voxels_;
            for_each_shift([&](std::size_t t, std::size_t dst, std::size_t src, std::size_t n) {
                const double* c = col + (i * taps_ + t) * voxels_ + dst;
                for (std::size_t k = 0; k < n; ++k) xi[src + k] += c[k];
            });
        }
    }

    std::size_t cin_, cout_, spatial_rank_;
    std::array<std::size_t, 3> sp_{}, k_{};
    std::size_t taps_ = 1, voxels_ = 1;
    std::array<Dims, 3> dims_;
};

/// Cross-correlation with zero same-padding (no bias).
inline Var conv(const Var& x, const Var& kernel) {
    const auto& xd = x.dims();
    const auto& kd = kernel.dims();
    require(xd.size() >= 2 && kd.size() == xd.size() + 1, ErrorCategory::dimension,
            "conv: input " + dims_string(xd) + " incompatible with kernel " + dims_string(kd));
    require(kd[1] == xd[0], ErrorCategory::dimension,
            "conv: channel mismatch, input has " + std::to_string(xd[0]) + ", kernel expects " + std::to_string(kd[1]));
    auto form = std::make_shared<ConvForm>(xd[0], kd[0], Dims(xd.begin() + 1, xd.end()), Dims(kd.begin() + 2, kd.end()));
    return trilinear_partial(std::move(form), 2, x, kernel);
}

// ---- dense ------------------------------------------------------------------

/// Slots: 0 = x [in], 1 = W [out, in], 2 = y [out].
class DenseForm final : public Trilinear {
public:
    DenseForm(std::size_t in, std::size_t out) : in_(in), out_(out), dims_{Dims{in}, Dims{out, in}, Dims{out}} {}

    const Dims& slot_dims(int slot) const override { return dims_[static_cast<std::size_t>(slot)]; }

    void partial(int target, const double* first, const double* second, double* out) const override {
        if (target == 2) {  // y = W x
            for (std::size_t o = 0; o < out_; ++o) {
                double acc = 0.0;
                for (std::size_t i = 0; i < in_; ++i) acc += second[o * in_ + i] * first[i];
                out[o] = acc;
            }
        } else if (target == 0) {  // x̄ = Wᵀ ȳ
            for (std::size_t o = 0; o < out_; ++o)
                for (std::size_t i = 0; i < in_; ++i) out[i] += first[o * in_ + i] * second[o];
        } else {  // W̄ = ȳ xᵀ
            for (std::size_t o = 0; o < out_; ++o)
                for (std::size_t i = 0; i < in_; ++i) out[o * in_ + i] = second[o] * first[i];
        }
    }

private:
    std::size_t in_, out_;
    std::array<Dims, 3> dims_;
};

/// W x + b over the flattened input.
inline Var dense(const Var& x, const Var& w, const Var& b) {
    require(w.dims().size() == 2 && w.dims()[1] == x.size() && b.size() == w.dims()[0], ErrorCategory::dimension,
            "dense: W " + dims_string(w.dims()) + " incompatible with x of size " + std::to_string(x.size()));
    auto form = std::make_shared<DenseForm>(w.dims()[1], w.dims()[0]);
    return add(trilinear_partial(std::move(form), 2, reshape(x, {x.size()}), w), reshape(b, {b.size()}));
}

// ---- pooling ----------------------------------------------------------------

namespace detail {

// Output extents ceil(n / f); windows at the border average only the voxels present.
struct PoolGeometry {
    Dims in, out;
    std::size_t factor;
    std::vector<std::size_t> owner;   // input flat index → output flat index
    std::vector<double> inv_count;    // per output element

    PoolGeometry(Dims in_dims, std::size_t f) : in(std::move(in_dims)), factor(f) {
        require(f >= 1, ErrorCategory::config, "pool factor must be >= 1");
        out = in;
        for (std::size_t a = 1; a < out.size(); ++a) out[a] = (in[a] + f - 1) / f;
        owner.resize(element_count(in));
        std::vector<std::size_t> counts(element_count(out), 0);
        const auto is = row_major_strides(in);
        const auto os = row_major_strides(out);
        for (std::size_t i = 0; i < owner.size(); ++i) {
            std::size_t o = 0;
            for (std::size_t a = 0; a < in.size(); ++a) {
                const std::size_t idx = (i / is[a]) % in[a];
                o += (a == 0 ? idx : idx / f) * os[a];
            }
            owner[i] = o;
            ++counts[o];
        }
        inv_count.resize(counts.size());
        for (std::size_t o = 0; o < counts.size(); ++o) inv_count[o] = 1.0 / static_cast<double>(counts[o]);
    }
};

}  // namespace detail

inline Var avg_pool_adjoint(const Var& g, std::shared_ptr<const detail::PoolGeometry> geo);

namespace detail {

inline Var pool_with(const Var& x, std::shared_ptr<const PoolGeometry> geo) {
    std::vector<double> out(element_count(geo->out), 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) out[geo->owner[i]] += x.value()[i];
    for (std::size_t o = 0; o < out.size(); ++o) out[o] *= geo->inv_count[o];
    return x.tape().record(geo->out, std::move(out), {x}, [geo](Tape&, const Var& u, std::span<const bool>) -> GradList {
        return {avg_pool_adjoint(u, geo)};
    });
}

}  // namespace detail

/// Non-overlapping window means over the spatial axes of [C, spatial...].
inline Var avg_pool(const Var& x, std::size_t factor) {
    if (factor == 1) return x;
    return detail::pool_with(x, std::make_shared<const detail::PoolGeometry>(x.dims(), factor));
}

inline Var avg_pool_adjoint(const Var& g, std::shared_ptr<const detail::PoolGeometry> geo) {
    require(g.dims() == geo->out, ErrorCategory::dimension, "avg_pool_adjoint: shape mismatch");
    std::vector<double> out(element_count(geo->in));
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = g.value()[geo->owner[i]] * geo->inv_count[geo->owner[i]];
    return g.tape().record(geo->in, std::move(out), {g}, [geo](Tape&, const Var& u, std::span<const bool>) -> GradList {
        return {detail::pool_with(u, geo)};
    });
}

}  // namespace srr::ad
