#pragma once

#include <cmath>
#include <memory>
#include <vector>

#include "srr/ad/tape.hpp"

namespace srr::ad {

namespace detail {

inline void check_same(const Var& a, const Var& b, const char* op) {
    require(a.dims() == b.dims(), ErrorCategory::dimension,
            std::string(op) + ": shape mismatch " + dims_string(a.dims()) + " vs " + dims_string(b.dims()));
}

inline void check_scalar(const Var& s, const char* op) {
    require(s.size() == 1, ErrorCategory::dimension, std::string(op) + ": expected a one-element tensor");
}

template <class F>
std::vector<double> map1(const std::vector<double>& a, F f) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
    return out;
}

template <class F>
std::vector<double> map2(const std::vector<double>& a, const std::vector<double>& b, F f) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i], b[i]);
    return out;
}

}  // namespace detail

inline Var neg(const Var& a);
inline Var scale(const Var& a, double c);
inline Var mul(const Var& a, const Var& b);
inline Var sum(const Var& a);
inline Var broadcast(const Var& s, const Dims& dims);
inline Var scalar_mul(const Var& s, const Var& a);
inline Var dot(const Var& a, const Var& b);
inline Var reciprocal(const Var& a);
inline Var slice(const Var& a, std::size_t offset, Dims dims);
inline Var embed(const Var& a, std::size_t offset, Dims dims);

inline Var add(const Var& a, const Var& b) {
    detail::check_same(a, b, "add");
    return a.tape().record(a.dims(), detail::map2(a.value(), b.value(), std::plus<>{}), {a, b},
                           [](Tape&, const Var& u, std::span<const bool>) -> GradList { return {u, u}; });
}

inline Var sub(const Var& a, const Var& b) {
    detail::check_same(a, b, "sub");
    return a.tape().record(a.dims(), detail::map2(a.value(), b.value(), std::minus<>{}), {a, b},
                           [](Tape&, const Var& u, std::span<const bool> need) -> GradList {
                               return {u, need[1] ? std::optional<Var>(neg(u)) : std::nullopt};
                           });
}

inline Var mul(const Var& a, const Var& b) {
    detail::check_same(a, b, "mul");
    return a.tape().record(a.dims(), detail::map2(a.value(), b.value(), std::multiplies<>{}), {a, b},
                           [a, b](Tape&, const Var& u, std::span<const bool> need) -> GradList {
                               GradList g(2);
                               if (need[0]) g[0] = mul(u, b);
                               if (need[1]) g[1] = mul(u, a);
                               return g;
                           });
}

inline Var neg(const Var& a) { return scale(a, -1.0); }

inline Var scale(const Var& a, double c) {
    return a.tape().record(a.dims(), detail::map1(a.value(), [c](double v) { return c * v; }), {a},
                           [c](Tape&, const Var& u, std::span<const bool>) -> GradList { return {scale(u, c)}; });
}

inline Var add_const(const Var& a, double c) {
    return a.tape().record(a.dims(), detail::map1(a.value(), [c](double v) { return v + c; }), {a},
                           [](Tape&, const Var& u, std::span<const bool>) -> GradList { return {u}; });
}

/// One-element tensor `s` times tensor `a`.
inline Var scalar_mul(const Var& s, const Var& a) {
    detail::check_scalar(s, "scalar_mul");
    const double sv = s.item();
    return a.tape().record(a.dims(), detail::map1(a.value(), [sv](double v) { return sv * v; }), {s, a},
                           [s, a](Tape&, const Var& u, std::span<const bool> need) -> GradList {
                               GradList g(2);
                               if (need[0]) g[0] = dot(u, a);
                               if (need[1]) g[1] = scalar_mul(s, u);
                               return g;
                           });
}

inline Var sum(const Var& a) {
    double acc = 0.0;
    for (double v : a.value()) acc += v;
    const Dims dims = a.dims();
    return a.tape().record({1}, {acc}, {a}, [dims](Tape&, const Var& u, std::span<const bool>) -> GradList {
        return {broadcast(u, dims)};
    });
}

inline Var mean(const Var& a) { return scale(sum(a), 1.0 / static_cast<double>(a.size())); }

inline Var broadcast(const Var& s, const Dims& dims) {
    detail::check_scalar(s, "broadcast");
    return s.tape().record(dims, std::vector<double>(element_count(dims), s.item()), {s},
                           [](Tape&, const Var& u, std::span<const bool>) -> GradList { return {sum(u)}; });
}

inline Var dot(const Var& a, const Var& b) {
    require(a.size() == b.size(), ErrorCategory::dimension, "dot: size mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a.value()[i] * b.value()[i];
    return a.tape().record({1}, {acc}, {a, b}, [a, b](Tape&, const Var& u, std::span<const bool> need) -> GradList {
        GradList g(2);
        if (need[0]) g[0] = scalar_mul(u, b);
        if (need[1]) g[1] = scalar_mul(u, a);
        return g;
    });
}

inline Var square(const Var& a) { return mul(a, a); }

// Ops whose derivative is a function of their own output capture the output
// handle through a holder filled in after recording.
inline Var reciprocal(const Var& a) {
    auto holder = std::make_shared<Var>();
    Var y = a.tape().record(a.dims(), detail::map1(a.value(), [](double v) { return 1.0 / v; }), {a},
                            [holder](Tape&, const Var& u, std::span<const bool>) -> GradList {
                                const Var& y = *holder;
                                return {neg(mul(u, mul(y, y)))};
                            });
    *holder = y;
    return y;
}

inline Var sqrt(const Var& a) {
    auto holder = std::make_shared<Var>();
    Var y = a.tape().record(a.dims(), detail::map1(a.value(), [](double v) { return std::sqrt(v); }), {a},
                            [holder](Tape&, const Var& u, std::span<const bool>) -> GradList {
                                return {mul(u, scale(reciprocal(*holder), 0.5))};
                            });
    *holder = y;
    return y;
}

/// Elementwise product with a fixed (non-differentiable) factor.
inline Var const_mul(const Var& a, std::shared_ptr<const std::vector<double>> factor) {
    require(factor->size() == a.size(), ErrorCategory::dimension, "const_mul: size mismatch");
    return a.tape().record(a.dims(), detail::map2(a.value(), *factor, std::multiplies<>{}), {a},
                           [factor](Tape&, const Var& u, std::span<const bool>) -> GradList {
                               return {const_mul(u, factor)};
                           });
}

/// x for x >= 0, slope·x otherwise. The derivative is piecewise constant, so
/// the op is a product with a fixed mask and double-backward is exact.
inline Var leaky_relu(const Var& x, double slope = 0.01) {
    require(slope > 0.0 && slope < 1.0, ErrorCategory::config, "leaky slope must lie in (0, 1)");
    auto m = std::make_shared<std::vector<double>>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) (*m)[i] = x.value()[i] >= 0.0 ? 1.0 : slope;
    return const_mul(x, std::move(m));
}

inline Var reshape(const Var& a, Dims dims) {
    require(element_count(dims) == a.size(), ErrorCategory::dimension, "reshape: element count mismatch");
    const Dims from = a.dims();
    return a.tape().record(std::move(dims), a.value(), {a}, [from](Tape&, const Var& u, std::span<const bool>) -> GradList {
        return {reshape(u, from)};
    });
}

/// Contiguous flat range [offset, offset + count(dims)) of a, reshaped to dims.
inline Var slice(const Var& a, std::size_t offset, Dims dims) {
    const std::size_t n = element_count(dims);
    require(offset + n <= a.size(), ErrorCategory::dimension, "slice out of range");
    std::vector<double> v(a.value().begin() + static_cast<std::ptrdiff_t>(offset),
                          a.value().begin() + static_cast<std::ptrdiff_t>(offset + n));
    const Dims from = a.dims();
    return a.tape().record(std::move(dims), std::move(v), {a},
                           [offset, from](Tape&, const Var& u, std::span<const bool>) -> GradList {
                               return {embed(u, offset, from)};
                           });
}

/// Zero tensor of `dims` with a's values written at flat `offset`.
inline Var embed(const Var& a, std::size_t offset, Dims dims) {
    const std::size_t n = element_count(dims);
    require(offset + a.size() <= n, ErrorCategory::dimension, "embed out of range");
    std::vector<double> v(n, 0.0);
    std::copy(a.value().begin(), a.value().end(), v.begin() + static_cast<std::ptrdiff_t>(offset));
    const Dims from = a.dims();
    return a.tape().record(std::move(dims), std::move(v), {a},
                           [offset, from](Tape&, const Var& u, std::span<const bool>) -> GradList {
                               return {slice(u, offset, from)};
                           });
}

/// Flat concatenation into a 1-D tensor.
inline Var concat(const std::vector<Var>& parts) {
    require(!parts.empty(), ErrorCategory::dimension, "concat of nothing");
    std::size_t total = 0;
    for (const auto& p : parts) total += p.size();
    Var out = embed(reshape(parts[0], {parts[0].size()}), 0, {total});
    std::size_t off = parts[0].size();
    for (std::size_t k = 1; k < parts.size(); ++k) {
        out = add(out, embed(reshape(parts[k], {parts[k].size()}), off, {total}));
        off += parts[k].size();
    }
    return out;
}

inline Var broadcast_channels(const Var& b, const Dims& dims);

/// [C, spatial...] → [C]: per-channel sum.
inline Var sum_channels(const Var& x) {
    const Dims dims = x.dims();
    const std::size_t c = dims[0], n = x.size() / c;
    std::vector<double> out(c, 0.0);
    for (std::size_t k = 0; k < c; ++k)
        for (std::size_t i = 0; i < n; ++i) out[k] += x.value()[k * n + i];
    return x.tape().record({c}, std::move(out), {x}, [dims](Tape&, const Var& u, std::span<const bool>) -> GradList {
        return {broadcast_channels(u, dims)};
    });
}

/// [C] → [C, spatial...] replicating each channel value.
inline Var broadcast_channels(const Var& b, const Dims& dims) {
    require(!dims.empty() && b.size() == dims[0], ErrorCategory::dimension, "broadcast_channels: channel mismatch");
    const std::size_t c = dims[0], n = element_count(dims) / c;
    std::vector<double> out(c * n);
    for (std::size_t k = 0; k < c; ++k) std::fill_n(out.begin() + static_cast<std::ptrdiff_t>(k * n), n, b.value()[k]);
    return b.tape().record(dims, std::move(out), {b},
                           [](Tape&, const Var& u, std::span<const bool>) -> GradList { return {sum_channels(u)}; });
}

inline Var add_channel_bias(const Var& x, const Var& bias) { return add(x, broadcast_channels(bias, x.dims())); }

inline Var mean_channels(const Var& x) {
    return scale(sum_channels(x), static_cast<double>(x.dims()[0]) / static_cast<double>(x.size()));
}

/// Euclidean norm, with `eps` inside the root to keep the derivative finite at 0.
inline Var l2_norm(const Var& a, double eps = 0.0) { return sqrt(add_const(sum(square(a)), eps)); }

}  // namespace srr::ad
