#pragma once

#include <memory>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "srr/ad/codec.hpp"
#include "srr/ad/nn.hpp"
#include "srr/ad/params.hpp"
#include "srr/core/seed.hpp"
#include "srr/ops/operators.hpp"

namespace srr::gan {

using ad::BoundParams;
using ad::ParamSet;
using ad::Tape;
using ad::Var;

struct GeneratorConfig {
    std::size_t blocks = 4;
    std::size_t features = 32;
    std::size_t kernel = 3;
    std::size_t spatial_rank = 2;
    double slope = 0.01;
    double alpha_init = 1.0;
    double gamma_init = 1.0;

    void validate() const {
        require(blocks >= 1, ErrorCategory::config, "generator needs at least one block");
        require(features >= 1, ErrorCategory::config, "generator features must be >= 1");
        require(kernel % 2 == 1, ErrorCategory::config, "generator kernel must be odd");
        require(spatial_rank >= 1 && spatial_rank <= 3, ErrorCategory::config, "generator spatial rank must be 1-3");
        require(std::isfinite(alpha_init) && std::isfinite(gamma_init), ErrorCategory::config,
                "alpha/gamma init must be finite");
    }
};

inline nlohmann::json to_json(const GeneratorConfig& c) {
    return {{"blocks", c.blocks}, {"features", c.features}, {"kernel", c.kernel},
            {"spatial_rank", c.spatial_rank}, {"slope", c.slope}};
}

inline GeneratorConfig generator_config_from_json(const nlohmann::json& j) {
    GeneratorConfig c;
    c.blocks = j.value("blocks", c.blocks);
    c.features = j.value("features", c.features);
    c.kernel = j.value("kernel", c.kernel);
    c.spatial_rank = j.value("spatial_rank", c.spatial_rank);
    c.slope = j.value("slope", c.slope);
    c.validate();
    return c;
}

inline std::string block_prefix(std::size_t k) { return "block" + std::to_string(k) + "."; }

inline Dims kernel_dims(std::size_t cout, std::size_t cin, std::size_t k, std::size_t rank) {
    Dims d{cout, cin};
    d.insert(d.end(), rank, k);
    return d;
}

/// Conv stack 2→F→F→2 per block, He-initialized from `seed`; α, γ start at their init values.
inline ParamSet make_generator_params(const GeneratorConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    std::mt19937_64 rng(seed);
    ParamSet p;
    std::size_t taps = 1;
    for (std::size_t a = 0; a < cfg.spatial_rank; ++a) taps *= cfg.kernel;
    const std::size_t widths[4] = {2, cfg.features, cfg.features, 2};
    for (std::size_t k = 0; k < cfg.blocks; ++k) {
        const auto pre = block_prefix(k);
        for (std::size_t l = 0; l < 3; ++l) {
            const auto name = pre + "conv" + std::to_string(l);
            p.add_he(name + ".weight", kernel_dims(widths[l + 1], widths[l], cfg.kernel, cfg.spatial_rank),
                     widths[l] * taps, rng);
            p.add_zeros(name + ".bias", {widths[l + 1]});
        }
        p.add(pre + "alpha", {1}, {cfg.alpha_init});
        p.add(pre + "gamma", {1}, {cfg.gamma_init});
    }
    return p;
}

/// Trainable scalar count of a generator with this configuration.
inline std::size_t parameter_count(const GeneratorConfig& cfg) {
    std::size_t taps = 1;
    for (std::size_t a = 0; a < cfg.spatial_rank; ++a) taps *= cfg.kernel;
    const std::size_t f = cfg.features;
    const std::size_t per_block = (2 * f * taps + f) + (f * f * taps + f) + (f * 2 * taps + 2) + 2;
    return cfg.blocks * per_block;
}

/// Zeroes every conv weight and bias and sets α = 1: the network then reduces
/// to plain gradient descent on the data fidelity.
inline void make_degenerate(ParamSet& p, double gamma) {
    for (auto& q : p) {
        if (q.name.ends_with(".alpha")) q.value.assign(1, 1.0);
        else if (q.name.ends_with(".gamma")) q.value.assign(1, gamma);
        else std::fill(q.value.begin(), q.value.end(), 0.0);
    }
}

// ---- taped operator nodes ---------------------------------------------------

/// A*A applied to a [2, spatial...] tensor. Self-adjoint as a real-linear map.
inline Var normal_op(const Var& x, std::shared_ptr<const ForwardModel> model) {
    const Dims spatial(x.dims().begin() + 1, x.dims().end());
    auto out = ad::to_channels(model->normal(ad::from_channels(x.value(), spatial)));
    return x.tape().record(x.dims(), std::move(out), {x},
                           [model](Tape&, const Var& u, std::span<const bool>) -> ad::GradList {
                               return {normal_op(u, model)};
                           });
}

/// x = s − γ·(A*A s − A*y).
/// Backward: ∂/∂s = (I − γA*A)ᵀ u, ∂/∂γ = −⟨u, A*A s − A*y⟩, both assembled from
/// taped ops so higher derivatives exist.
inline Var data_consistency(const Var& s, const Var& gamma, const Var& aty, std::shared_ptr<const ForwardModel> model) {
    require(s.dims() == aty.dims(), ErrorCategory::dimension, "data_consistency: iterate/data dims mismatch");
    ad::detail::check_scalar(gamma, "data_consistency");
    const Dims spatial(s.dims().begin() + 1, s.dims().end());
    auto r = model->normal(ad::from_channels(s.value(), spatial));
    r -= ad::from_channels(aty.value(), spatial);
    const double g = gamma.item();
    const auto rv = ad::to_channels(r);
    std::vector<double> out(s.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = s.value()[i] - g * rv[i];
    return s.tape().record(
        s.dims(), std::move(out), {s, gamma, aty},
        [s, gamma, aty, model](Tape&, const Var& u, std::span<const bool> need) -> ad::GradList {
            ad::GradList gl(3);
            if (need[0]) gl[0] = ad::sub(u, ad::scalar_mul(gamma, normal_op(u, model)));
            if (need[1]) gl[1] = ad::neg(ad::dot(u, ad::sub(normal_op(s, model), aty)));
            if (need[2]) gl[2] = ad::scalar_mul(gamma, u);
            return gl;
        });
}

// ---- forward pass -----------------------------------------------------------

struct GeneratorOutput {
    Var x;                      // x_K
    std::vector<Var> iterates;  // x_0..x_K when requested
};

inline Var conv_layer(const Var& x, const BoundParams& p, const std::string& name) {
    return ad::add_channel_bias(ad::conv(x, p[name + ".weight"]), p[name + ".bias"]);
}

/// Unrolled network: x₀ = A*y, then per block s = C_k(x) + α_k x and the
/// data-consistency step x = s − γ_k A*(A s − y).
inline GeneratorOutput srr_forward(Tape& tape, const BoundParams& params, const GeneratorConfig& cfg,
                                   std::shared_ptr<const ForwardModel> model, const ComplexGrid& y,
                                   bool keep_iterates = false) {
    require(model->hr_dims().size() == cfg.spatial_rank, ErrorCategory::dimension,
            "generator rank " + std::to_string(cfg.spatial_rank) + " does not match image dims " +
                dims_string(model->hr_dims()));
    const auto x0 = model->adjoint(y);
    const Var aty = ad::constant_image(tape, x0);
    GeneratorOutput out;
    Var x = aty;
    if (keep_iterates) out.iterates.push_back(x);
    for (std::size_t k = 0; k < cfg.blocks; ++k) {
        const auto pre = block_prefix(k);
        Var h = ad::leaky_relu(conv_layer(x, params, pre + "conv0"), cfg.slope);
        h = ad::leaky_relu(conv_layer(h, params, pre + "conv1"), cfg.slope);
        h = conv_layer(h, params, pre + "conv2");
        const Var s = ad::add(h, ad::scalar_mul(params[pre + "alpha"], x));
        x = data_consistency(s, params[pre + "gamma"], aty, model);
        for (double v : x.value())
            require(std::isfinite(v), ErrorCategory::numeric, "non-finite value in generator block " + std::to_string(k));
        if (keep_iterates) out.iterates.push_back(x);
    }
    out.x = x;
    return out;
}

/// Forward pass without recording.
inline ComplexGrid generate(const ParamSet& params, const GeneratorConfig& cfg, const ForwardModel& model,
                            const ComplexGrid& y) {
    Tape tape;
    tape.set_recording(false);
    const auto bound = ad::bind(tape, params, false);
    auto m = std::make_shared<const ForwardModel>(model);
    return ad::to_grid(srr_forward(tape, bound, cfg, m, y).x);
}

}  // namespace srr::gan
