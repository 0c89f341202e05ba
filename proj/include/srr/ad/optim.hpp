#pragma once

#include <cmath>
#include <vector>

#include "srr/ad/params.hpp"

namespace srr::ad {

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    std::vector<std::vector<double>> m, v;
    long step = 0;

    static AdamState like(const ParamSet& params) {
        AdamState s;
        for (const auto& p : params) {
            s.m.emplace_back(p.value.size(), 0.0);
            s.v.emplace_back(p.value.size(), 0.0);
        }
        return s;
    }
};

/// One Adam update with bias correction.
inline void adam_step(ParamSet& params, const std::vector<std::vector<double>>& grads, AdamState& state, double lr,
                      const AdamConfig& cfg = {}) {
    require(grads.size() == params.size() && state.m.size() == params.size(), ErrorCategory::dimension,
            "adam: parameter/gradient/state count mismatch");
    ++state.step;
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto& w = params[k].value;
        require(grads[k].size() == w.size() && state.m[k].size() == w.size(), ErrorCategory::dimension,
                "adam: dims mismatch for " + params[k].name);
        auto& m = state.m[k];
        auto& v = state.v[k];
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double g = grads[k][i];
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
            w[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg.eps);
        }
    }
}

/// lr₀ · decay^epoch
inline double exp_decay_lr(double lr0, double decay, long epoch) {
    require(decay > 0.0 && decay <= 1.0, ErrorCategory::config, "decay must lie in (0, 1]");
    return lr0 * std::pow(decay, static_cast<double>(epoch));
}

inline std::vector<std::vector<double>> values_of(const std::vector<Var>& vars) {
    std::vector<std::vector<double>> out;
    out.reserve(vars.size());
    for (const auto& v : vars) out.push_back(v.value());
    return out;
}

}  // namespace srr::ad
