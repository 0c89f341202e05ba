#pragma once

#include <functional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "srr/ad/nn.hpp"
#include "srr/ad/params.hpp"

namespace srr::gan {

using ad::BoundParams;
using ad::ParamSet;
using ad::Tape;
using ad::Var;

/// Pyramid-pooling critic: a conv trunk, then per pooling scale an average
/// pool, conv and global mean; the pooled features feed one dense unit.
struct DiscriminatorConfig {
    std::size_t trunk = 8;
    std::size_t branch = 4;
    std::vector<std::size_t> scales{1, 2, 4};
    std::size_t kernel = 3;
    std::size_t spatial_rank = 2;
    double slope = 0.01;
    bool magnitude = false;  // score |x| instead of the real/imag channels
    double magnitude_eps = 1e-12;

    std::size_t input_channels() const { return magnitude ? 1 : 2; }
    std::size_t feature_count() const { return branch * scales.size(); }

    void validate() const {
        require(trunk >= 1 && branch >= 1 && !scales.empty(), ErrorCategory::config, "discriminator widths must be >= 1");
        for (auto s : scales) require(s >= 1, ErrorCategory::config, "pooling scales must be >= 1");
        require(kernel % 2 == 1, ErrorCategory::config, "discriminator kernel must be odd");
    }
};

inline nlohmann::json to_json(const DiscriminatorConfig& c) {
    return {{"trunk", c.trunk},   {"branch", c.branch}, {"scales", c.scales},       {"kernel", c.kernel},
            {"spatial_rank", c.spatial_rank}, {"slope", c.slope}, {"magnitude", c.magnitude}};
}

inline DiscriminatorConfig discriminator_config_from_json(const nlohmann::json& j) {
    DiscriminatorConfig c;
    c.trunk = j.value("trunk", c.trunk);
    c.branch = j.value("branch", c.branch);
    c.scales = j.value("scales", c.scales);
    c.kernel = j.value("kernel", c.kernel);
    c.spatial_rank = j.value("spatial_rank", c.spatial_rank);
    c.slope = j.value("slope", c.slope);
    c.magnitude = j.value("magnitude", c.magnitude);
    c.validate();
    return c;
}

inline ParamSet make_discriminator_params(const DiscriminatorConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    std::mt19937_64 rng(seed);
    std::size_t taps = 1;
    for (std::size_t a = 0; a < cfg.spatial_rank; ++a) taps *= cfg.kernel;
    auto kdims = [&](std::size_t cout, std::size_t cin) {
        Dims d{cout, cin};
        d.insert(d.end(), cfg.spatial_rank, cfg.kernel);
        return d;
    };
    ParamSet p;
    p.add_he("trunk0.weight", kdims(cfg.trunk, cfg.input_channels()), cfg.input_channels() * taps, rng);
    p.add_zeros("trunk0.bias", {cfg.trunk});
    p.add_he("trunk1.weight", kdims(cfg.trunk, cfg.trunk), cfg.trunk * taps, rng);
    p.add_zeros("trunk1.bias", {cfg.trunk});
    for (std::size_t s = 0; s < cfg.scales.size(); ++s) {
        const auto name = "pyramid" + std::to_string(s);
        p.add_he(name + ".weight", kdims(cfg.branch, cfg.trunk), cfg.trunk * taps, rng);
        p.add_zeros(name + ".bias", {cfg.branch});
    }
    p.add_he("head.weight", {1, cfg.feature_count()}, cfg.feature_count(), rng);
    p.add_zeros("head.bias", {1});
    return p;
}

/// Magnitude channel sqrt(re² + im² + eps) of a [2, spatial...] tensor.
inline Var magnitude_channel(const Var& x, double eps) {
    const std::size_t n = x.size() / 2;
    Dims one = x.dims();
    one[0] = 1;
    const Var re = ad::slice(x, 0, one), im = ad::slice(x, n, one);
    const Var m2 = ad::add_const(ad::add(ad::square(re), ad::square(im)), eps);
    return ad::sqrt(m2);
}

/// Scalar critic score of a [2, spatial...] image tensor.
inline Var discriminator_forward(const BoundParams& p, const DiscriminatorConfig& cfg, const Var& x) {
    require(x.dims().size() == cfg.spatial_rank + 1 && x.dims()[0] == 2, ErrorCategory::dimension,
            "discriminator input " + dims_string(x.dims()) + " is not a [2, spatial] image");
    Var h = cfg.magnitude ? magnitude_channel(x, cfg.magnitude_eps) : x;
    auto layer = [&](const Var& in, const std::string& name) {
        return ad::leaky_relu(ad::add_channel_bias(ad::conv(in, p[name + ".weight"]), p[name + ".bias"]), cfg.slope);
    };
    h = layer(h, "trunk0");
    h = layer(h, "trunk1");
    std::vector<Var> feats;
    for (std::size_t s = 0; s < cfg.scales.size(); ++s) {
        const Var pooled = cfg.scales[s] == 1 ? h : ad::avg_pool(h, cfg.scales[s]);
        feats.push_back(ad::mean_channels(layer(pooled, "pyramid" + std::to_string(s))));
    }
    return ad::dense(ad::concat(feats), p["head.weight"], p["head.bias"]);
}

using Critic = std::function<Var(const Var&)>;

inline Critic make_critic(const BoundParams& p, const DiscriminatorConfig& cfg) {
    return [&p, cfg](const Var& x) { return discriminator_forward(p, cfg, x); };
}

/// D(x) = ⟨w, x⟩ + b, with w shaped like the input.
inline Critic linear_critic(const Var& w, const Var& b) {
    return [w, b](const Var& x) { return ad::add(ad::dot(w, x), b); };
}

struct DiscriminatorLoss {
    Var total;
    Var fake;     // D(x̃)
    Var real;     // D(x)
    Var penalty;  // λ(‖∇D(x̂)‖ − 1)²
};

/// L_D = D(x̃) − D(x) + λ(‖∇_x̂ D(x̂)‖₂ − 1)², x̂ = εx + (1−ε)x̃.
/// The penalty gradient is recorded, so L_D can be differentiated w.r.t. the
/// critic's parameters (double backward). x and x̃ are treated as data.
inline DiscriminatorLoss loss_discriminator(const Critic& critic, const Var& x, const Var& x_fake, double lambda,
                                            double eps_interp, double norm_eps = 1e-12) {
    require(x.dims() == x_fake.dims(), ErrorCategory::dimension, "loss_discriminator: real/fake dims mismatch");
    require(lambda >= 0.0, ErrorCategory::config, "lambda must be >= 0");
    require(eps_interp >= 0.0 && eps_interp <= 1.0, ErrorCategory::config, "interpolation weight must lie in [0, 1]");
    Tape& tape = x.tape();
    std::vector<double> mix(x.size());
    for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = eps_interp * x.value()[i] + (1.0 - eps_interp) * x_fake.value()[i];
    const Var x_hat = tape.leaf(x.dims(), std::move(mix), true);
    const Var d_hat = critic(x_hat);
    const Var g = tape.grad(d_hat, {x_hat}, true)[0];
    const Var gap = ad::add_const(ad::l2_norm(g, norm_eps), -1.0);
    DiscriminatorLoss out;
    out.penalty = ad::scale(ad::square(gap), lambda);
    out.fake = critic(x_fake);
    out.real = critic(x);
    out.total = ad::add(ad::sub(out.fake, out.real), out.penalty);
    return out;
}

/// Mean squared error over all real/imag entries.
inline Var mse(const Var& a, const Var& b) { return ad::mean(ad::square(ad::sub(a, b))); }

/// L_G = −D(x̃) + η·mean((x − x̃)²); the adversarial term is skipped when no critic is given.
inline Var loss_generator(const Critic* critic, const Var& x, const Var& x_fake, double eta_gan) {
    require(x.dims() == x_fake.dims(), ErrorCategory::dimension, "loss_generator: dims mismatch");
    require(eta_gan >= 0.0, ErrorCategory::config, "eta_gan must be >= 0");
    const Var l2 = ad::scale(mse(x, x_fake), eta_gan);
    if (critic == nullptr) return l2;
    return ad::sub(l2, (*critic)(x_fake));
}

}  // namespace srr::gan
