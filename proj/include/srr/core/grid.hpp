#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "srr/core/error.hpp"

namespace srr {

using Dims = std::vector<std::size_t>;

enum class Domain { image, kspace };

inline std::string domain_name(Domain d) { return d == Domain::image ? "image" : "kspace"; }

inline Domain parse_domain(const std::string& s) {
    if (s == "image") return Domain::image;
    if (s == "kspace") return Domain::kspace;
    fail(ErrorCategory::format, "unknown domain tag '" + s + "'");
}

inline std::size_t element_count(const Dims& dims) {
    return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>{});
}

inline std::string dims_string(const Dims& dims) {
    std::ostringstream os;
    for (std::size_t i = 0; i < dims.size(); ++i) os << (i ? "x" : "") << dims[i];
    return os.str();
}

// Row-major strides, last axis contiguous.
inline Dims row_major_strides(const Dims& dims) {
    Dims strides(dims.size(), 1);
    for (std::size_t i = dims.size(); i-- > 1;) strides[i - 1] = strides[i] * dims[i];
    return strides;
}

/// Dense n-dimensional array of complex samples stored row-major.
///
/// The domain tag is metadata only; no operation interprets it beyond
/// propagating it.
template <class Real>
class BasicGrid {
public:
    using value_type = std::complex<Real>;
    using real_type = Real;

    BasicGrid() = default;

    explicit BasicGrid(Dims dims, Domain domain = Domain::image)
        : dims_(std::move(dims)), data_(element_count(dims_)), domain_(domain) {
        for (auto d : dims_) require(d > 0, ErrorCategory::dimension, "grid extents must be positive");
    }

    BasicGrid(Dims dims, std::vector<value_type> data, Domain domain = Domain::image)
        : dims_(std::move(dims)), data_(std::move(data)), domain_(domain) {
        for (auto d : dims_) require(d > 0, ErrorCategory::dimension, "grid extents must be positive");
        require(data_.size() == element_count(dims_), ErrorCategory::dimension,
                "grid data length does not match dims " + dims_string(dims_));
    }

    static BasicGrid filled(Dims dims, value_type v, Domain domain = Domain::image) {
        BasicGrid g(std::move(dims), domain);
        std::fill(g.data_.begin(), g.data_.end(), v);
        return g;
    }

    const Dims& dims() const noexcept { return dims_; }
    std::size_t rank() const noexcept { return dims_.size(); }
    std::size_t size() const noexcept { return data_.size(); }
    Domain domain() const noexcept { return domain_; }
    void set_domain(Domain d) noexcept { domain_ = d; }

    std::span<value_type> data() noexcept { return data_; }
    std::span<const value_type> data() const noexcept { return data_; }
    std::vector<value_type>& storage() noexcept { return data_; }
    const std::vector<value_type>& storage() const noexcept { return data_; }

    value_type& operator[](std::size_t i) noexcept { return data_[i]; }
    const value_type& operator[](std::size_t i) const noexcept { return data_[i]; }

    value_type& at(std::initializer_list<std::size_t> idx) { return data_[offset(idx)]; }
    const value_type& at(std::initializer_list<std::size_t> idx) const { return data_[offset(idx)]; }

    bool same_shape(const BasicGrid& other) const noexcept { return dims_ == other.dims_; }

    BasicGrid& operator+=(const BasicGrid& o) {
        check_same(o);
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
        return *this;
    }
    BasicGrid& operator-=(const BasicGrid& o) {
        check_same(o);
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
        return *this;
    }
    BasicGrid& operator*=(value_type s) noexcept {
        for (auto& v : data_) v *= s;
        return *this;
    }
    BasicGrid& operator*=(Real s) noexcept {
        for (auto& v : data_) v *= s;
        return *this;
    }

    friend BasicGrid operator+(BasicGrid a, const BasicGrid& b) { return a += b; }
    friend BasicGrid operator-(BasicGrid a, const BasicGrid& b) { return a -= b; }
    friend BasicGrid operator*(BasicGrid a, value_type s) { return a *= s; }
    friend BasicGrid operator*(value_type s, BasicGrid a) { return a *= s; }
    friend BasicGrid operator*(BasicGrid a, Real s) { return a *= s; }
    friend BasicGrid operator*(Real s, BasicGrid a) { return a *= s; }

    bool all_finite() const noexcept {
        return std::all_of(data_.begin(), data_.end(), [](const value_type& v) {
            return std::isfinite(v.real()) && std::isfinite(v.imag());
        });
    }

    template <class Other>
    BasicGrid<Other> cast() const {
        BasicGrid<Other> out(dims_, domain_);
        for (std::size_t i = 0; i < data_.size(); ++i)
            out[i] = {static_cast<Other>(data_[i].real()), static_cast<Other>(data_[i].imag())};
        return out;
    }

private:
    std::size_t offset(std::initializer_list<std::size_t> idx) const {
        require(idx.size() == dims_.size(), ErrorCategory::dimension, "index rank mismatch");
        std::size_t off = 0;
        std::size_t k = 0;
        for (auto i : idx) {
            require(i < dims_[k], ErrorCategory::dimension, "index out of range");
            off = off * dims_[k++] + i;
        }
        return off;
    }

    void check_same(const BasicGrid& o) const {
        require(same_shape(o), ErrorCategory::dimension,
                "grid shape mismatch: " + dims_string(dims_) + " vs " + dims_string(o.dims_));
    }

    Dims dims_;
    std::vector<value_type> data_;
    Domain domain_ = Domain::image;
};

using ComplexGrid = BasicGrid<double>;
using ComplexGrid32 = BasicGrid<float>;
using cplx = std::complex<double>;

/// Σ conj(a_i)·b_i
template <class Real>
std::complex<Real> inner_product(const BasicGrid<Real>& a, const BasicGrid<Real>& b) {
    require(a.same_shape(b), ErrorCategory::dimension,
            "inner_product: shape mismatch " + dims_string(a.dims()) + " vs " + dims_string(b.dims()));
    std::complex<Real> acc{};
    for (std::size_t i = 0; i < a.size(); ++i) acc += std::conj(a[i]) * b[i];
    return acc;
}

template <class Real>
Real norm2(const BasicGrid<Real>& a) {
    Real acc = 0;
    for (const auto& v : a.data()) acc += std::norm(v);
    return std::sqrt(acc);
}

template <class Real>
Real max_abs(const BasicGrid<Real>& a) {
    Real m = 0;
    for (const auto& v : a.data()) m = std::max(m, std::abs(v));
    return m;
}

/// Voxelwise magnitude as a real vector (row-major, same order as the grid).
template <class Real>
std::vector<Real> magnitude(const BasicGrid<Real>& a) {
    std::vector<Real> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = std::abs(a[i]);
    return out;
}

}  // namespace srr
