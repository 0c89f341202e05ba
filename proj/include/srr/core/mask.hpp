#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "srr/core/grid.hpp"

namespace srr {

/// Boolean k-space sampling pattern over a 2D (ky, kz) grid.
class SamplingMask {
public:
    SamplingMask() = default;

    SamplingMask(Dims dims, Dims center_size)
        : dims_(std::move(dims)), center_size_(std::move(center_size)), sampled_(element_count(dims_), 0) {
        require(dims_.size() == center_size_.size(), ErrorCategory::dimension, "center rank mismatch");
        for (std::size_t a = 0; a < dims_.size(); ++a)
            require(center_size_[a] <= dims_[a], ErrorCategory::config,
                    "center block " + dims_string(center_size_) + " exceeds mask " + dims_string(dims_));
    }

    const Dims& dims() const noexcept { return dims_; }
    const Dims& center_size() const noexcept { return center_size_; }
    std::size_t size() const noexcept { return sampled_.size(); }

    bool operator[](std::size_t i) const noexcept { return sampled_[i] != 0; }
    void set(std::size_t i, bool v = true) noexcept { sampled_[i] = v ? 1 : 0; }
    const std::vector<std::uint8_t>& bits() const noexcept { return sampled_; }

    std::size_t count() const noexcept {
        return static_cast<std::size_t>(std::count(sampled_.begin(), sampled_.end(), std::uint8_t{1}));
    }

    /// product(dims) / count(sampled)
    double achieved_af() const {
        const auto n = count();
        require(n > 0, ErrorCategory::numeric, "mask has no sampled points");
        return static_cast<double>(size()) / static_cast<double>(n);
    }

    /// Flat indices of the centered block, window [c - n/2, c - n/2 + n) per axis.
    bool in_center(std::size_t flat) const noexcept {
        std::size_t rem = flat;
        for (std::size_t a = dims_.size(); a-- > 0;) {
            const std::size_t i = rem % dims_[a];
            rem /= dims_[a];
            const std::size_t lo = dims_[a] / 2 - center_size_[a] / 2;
            if (i < lo || i >= lo + center_size_[a]) return false;
        }
        return true;
    }

    void fill_center() noexcept {
        for (std::size_t i = 0; i < sampled_.size(); ++i)
            if (in_center(i)) sampled_[i] = 1;
    }

    bool center_fully_sampled() const noexcept {
        for (std::size_t i = 0; i < sampled_.size(); ++i)
            if (in_center(i) && !sampled_[i]) return false;
        return true;
    }

    bool operator==(const SamplingMask&) const = default;

    /// Stored as a ComplexGrid: real part 0/1.
    ComplexGrid to_grid() const {
        ComplexGrid g(dims_, Domain::kspace);
        for (std::size_t i = 0; i < size(); ++i) g[i] = sampled_[i] ? 1.0 : 0.0;
        return g;
    }

    static SamplingMask from_grid(const ComplexGrid& g, Dims center_size = {}) {
        if (center_size.empty()) center_size.assign(g.rank(), 0);
        SamplingMask m(g.dims(), std::move(center_size));
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double v = g[i].real();
            require(v == 0.0 || v == 1.0, ErrorCategory::format, "mask values must be 0 or 1");
            m.sampled_[i] = v == 1.0 ? 1 : 0;
        }
        return m;
    }

private:
    Dims dims_;
    Dims center_size_;
    std::vector<std::uint8_t> sampled_;
};

}  // namespace srr
