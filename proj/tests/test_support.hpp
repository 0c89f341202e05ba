#pragma once

#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "srr/ad/tape.hpp"
#include "srr/ops/operators.hpp"
#include "srr/sampling/masks.hpp"
#include "srr/sim/phantom.hpp"

namespace srr::testing {

inline ComplexGrid random_grid(const Dims& dims, std::mt19937_64& rng, Domain domain = Domain::image) {
    std::normal_distribution<double> nd;
    ComplexGrid g(dims, domain);
    for (auto& v : g.data()) v = {nd(rng), nd(rng)};
    return g;
}

inline SamplingMask random_mask(const Dims& dims, double keep, std::mt19937_64& rng) {
    std::bernoulli_distribution b(keep);
    SamplingMask m(dims, Dims(dims.size(), 0));
    for (std::size_t i = 0; i < m.size(); ++i) m.set(i, b(rng));
    return m;
}

/// Random complex coil maps, RSS-normalized.
inline SensitivitySet random_sens(std::size_t coils, const Dims& spatial, std::mt19937_64& rng) {
    Dims d{coils};
    d.insert(d.end(), spatial.begin(), spatial.end());
    SensitivitySet s(random_grid(d, rng));
    s.normalize(1e-12);
    return s;
}

inline ForwardModel random_model(const Dims& lr, const Dims& hr, std::size_t coils, std::mt19937_64& rng,
                                 double keep = 0.4) {
    return ForwardModel(random_mask(lr, keep, rng), lr, hr, random_sens(coils, hr, rng));
}

inline double rel_err(cplx a, cplx b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

inline double rel_err(const ComplexGrid& a, const ComplexGrid& b) {
    return norm2(a - b) / std::max({norm2(a), norm2(b), 1e-300});
}

inline double rel_err(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        d += (a[i] - b[i]) * (a[i] - b[i]);
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    return std::sqrt(d) / std::max({std::sqrt(na), std::sqrt(nb), 1e-300});
}

/// Direct O(N²) centered unitary DFT of a 2D grid.
inline ComplexGrid brute_force_dft2(const ComplexGrid& g, int sign = -1) {
    const std::size_t ny = g.dims()[0], nx = g.dims()[1];
    const double cy = static_cast<double>(ny / 2), cx = static_cast<double>(nx / 2);
    ComplexGrid out(g.dims(), Domain::kspace);
    for (std::size_t ky = 0; ky < ny; ++ky)
        for (std::size_t kx = 0; kx < nx; ++kx) {
            cplx acc{};
            for (std::size_t y = 0; y < ny; ++y)
                for (std::size_t x = 0; x < nx; ++x) {
                    const double ph = sign * 2.0 * std::numbers::pi *
                                      ((static_cast<double>(ky) - cy) * (static_cast<double>(y) - cy) / ny +
                                       (static_cast<double>(kx) - cx) * (static_cast<double>(x) - cx) / nx);
                    acc += g[y * nx + x] * std::polar(1.0, ph);
                }
            out[ky * nx + kx] = acc / std::sqrt(static_cast<double>(ny * nx));
        }
    return out;
}

using ScalarFn = std::function<ad::Var(ad::Tape&, const std::vector<ad::Var>&)>;

struct GradCheck {
    double worst = 0.0;        // largest per-tensor relative error
    std::size_t worst_input = 0;
};

/// Reverse-mode gradient of `f` versus central differences, per input tensor.
/// `probe` limits the number of perturbed entries per tensor (0 = all).
inline GradCheck check_gradients(const ScalarFn& f, const std::vector<Dims>& dims,
                                 const std::vector<std::vector<double>>& values, double h = 1e-5,
                                 std::size_t probe = 0, std::uint64_t seed = 1) {
    std::vector<std::vector<double>> analytic;
    {
        ad::Tape tape;
        std::vector<ad::Var> in;
        for (std::size_t k = 0; k < dims.size(); ++k) in.push_back(tape.leaf(dims[k], values[k]));
        const auto out = f(tape, in);
        for (const auto& g : tape.grad(out, in)) analytic.push_back(g.value());
    }
    auto eval = [&](const std::vector<std::vector<double>>& vals) {
        ad::Tape tape;
        std::vector<ad::Var> in;
        for (std::size_t k = 0; k < dims.size(); ++k) in.push_back(tape.leaf(dims[k], vals[k], false));
        return f(tape, in).item();
    };
    std::mt19937_64 rng(seed);
    GradCheck res;
    auto vals = values;
    for (std::size_t k = 0; k < dims.size(); ++k) {
        std::vector<std::size_t> idx(vals[k].size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        if (probe != 0 && probe < idx.size()) {
            std::shuffle(idx.begin(), idx.end(), rng);
            idx.resize(probe);
        }
        std::vector<double> a, n;
        for (auto i : idx) {
            const double v = vals[k][i];
            vals[k][i] = v + h;
            const double fp = eval(vals);
            vals[k][i] = v - h;
            const double fm = eval(vals);
            vals[k][i] = v;
            n.push_back((fp - fm) / (2.0 * h));
            a.push_back(analytic[k][i]);
        }
        const double e = rel_err(a, n);
        if (e > res.worst) {
            res.worst = e;
            res.worst_input = k;
        }
    }
    return res;
}

inline std::vector<double> random_values(std::size_t n, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> nd(0.0, scale);
    std::vector<double> v(n);
    for (auto& x : v) x = nd(rng);
    return v;
}

/// Fresh scratch directory under the system temp path.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("srr_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace srr::testing
