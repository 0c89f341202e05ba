#pragma once

#include <cmath>
#include <vector>

#include "srr/ops/operators.hpp"
#include "srr/solver/prox.hpp"

namespace srr {

struct SolverConfig {
    double eta = 1.0;   // x-update step size
    double rho = 1.0;   // penalty weight; the prox threshold is tau / rho
    double tau = 0.0;   // regularization weight
    int max_iterations = 200;
    double tolerance = 1e-6;  // relative update norm
    ProxKind prox = ProxKind::identity;
    int haar_levels = 3;
    bool keep_iterates = false;

    void validate() const {
        require(eta > 0.0, ErrorCategory::config, "eta must be > 0");
        require(rho > 0.0, ErrorCategory::config, "rho must be > 0");
        require(tau >= 0.0, ErrorCategory::config, "tau must be >= 0");
        require(max_iterations >= 0, ErrorCategory::config, "max iterations must be >= 0");
        require(tolerance >= 0.0, ErrorCategory::config, "tolerance must be >= 0");
    }

    ProxOperator prox_operator() const { return {prox, tau / rho, haar_levels}; }
};

struct SolverResult {
    ComplexGrid x;
    std::vector<double> fidelity;  // ½‖A x_k − y‖² for k = 0..iterations
    int iterations = 0;
    bool converged = false;
    std::vector<ComplexGrid> iterates;  // x_0..x_K when keep_iterates
};

/// Thrown when the fidelity exceeds ten times its initial value.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, std::vector<double> trace)
        : Error(ErrorCategory::numeric, what), trace_(std::move(trace)) {}
    const std::vector<double>& trace() const noexcept { return trace_; }

private:
    std::vector<double> trace_;
};

/// True when η ≤ 1/‖A‖², the bound under which the fidelity cannot increase
/// across a gradient step.
inline bool step_size_is_safe(const ForwardModel& model, double eta) {
    return eta <= 1.0 / estimate_normal_norm(model) + 1e-9;
}

/// Alternating proximal-gradient iteration from the zero-filled start x₀ = A*y:
///   s_{k+1} = prox(x_k),  x_{k+1} = s_{k+1} − η·A*(A s_{k+1} − y).
inline SolverResult solve_variational(const ForwardModel& model, const ComplexGrid& y, const SolverConfig& config) {
    config.validate();
    const auto prox = config.prox_operator();
    SolverResult res;
    res.x = model.adjoint(y);
    res.fidelity.push_back(model.fidelity(res.x, y));
    if (config.keep_iterates) res.iterates.push_back(res.x);
    const double initial = res.fidelity.front();
    for (int k = 0; k < config.max_iterations; ++k) {
        const ComplexGrid s = prox(res.x);
        ComplexGrid next = s - model.gradient(s, y) * config.eta;
        require(next.all_finite(), ErrorCategory::numeric, "solver produced non-finite iterate at step " + std::to_string(k + 1));
        const double change = norm2(next - res.x);
        const double base = norm2(res.x);
        res.x = std::move(next);
        res.iterations = k + 1;
        res.fidelity.push_back(model.fidelity(res.x, y));
        if (config.keep_iterates) res.iterates.push_back(res.x);
        if (res.fidelity.back() > 10.0 * initial && res.fidelity.back() > 1e-300)
            throw DivergenceError("solver diverged at step " + std::to_string(k + 1), res.fidelity);
        if (change <= config.tolerance * base) {
            res.converged = true;
            break;
        }
    }
    return res;
}

/// Sinc interpolation by centered k-space zero padding, scaled so a constant
/// image keeps its value.
inline ComplexGrid kspace_interp_sr(const ComplexGrid& x_lr, const Dims& hr_dims) {
    require(x_lr.dims().size() == hr_dims.size(), ErrorCategory::dimension, "kspace_interp_sr: rank mismatch");
    if (x_lr.dims() == hr_dims) return x_lr;
    auto up = idft(zeropad_kspace(dft(x_lr), hr_dims));
    up *= std::sqrt(static_cast<double>(element_count(hr_dims)) / static_cast<double>(x_lr.size()));
    return up;
}

/// Nearest-neighbour replication; integer upsampling factors only.
inline ComplexGrid replicate_sr(const ComplexGrid& x_lr, const Dims& hr_dims) {
    require(x_lr.rank() == 2 && hr_dims.size() == 2, ErrorCategory::dimension, "replicate_sr is 2D");
    const std::size_t fy = hr_dims[0] / x_lr.dims()[0], fx = hr_dims[1] / x_lr.dims()[1];
    require(fy * x_lr.dims()[0] == hr_dims[0] && fx * x_lr.dims()[1] == hr_dims[1], ErrorCategory::dimension,
            "replicate_sr needs integer factors");
    ComplexGrid out(hr_dims, x_lr.domain());
    for (std::size_t y = 0; y < hr_dims[0]; ++y)
        for (std::size_t x = 0; x < hr_dims[1]; ++x) out[y * hr_dims[1] + x] = x_lr[(y / fy) * x_lr.dims()[1] + x / fx];
    return out;
}

/// Rescales k-space measured under the unitary DFT of `hr_dims` to the unitary
/// DFT of the lr grid, so an LR reconstruction has the HR intensity scale.
inline ComplexGrid rescale_to_lr_grid(const ComplexGrid& y, const Dims& lr_dims, const Dims& hr_dims) {
    return y * std::sqrt(static_cast<double>(element_count(lr_dims)) / static_cast<double>(element_count(hr_dims)));
}

/// Two-step pipeline: LR variational reconstruction, then k-space interpolation.
/// `model_lr` is a model whose image grid is the LR grid; `y` is LR k-space
/// acquired through the HR model.
inline ComplexGrid strategy2_pipeline(const ForwardModel& model_lr, const ComplexGrid& y, const Dims& hr_dims,
                                      const SolverConfig& config) {
    require(model_lr.lr_dims() == model_lr.hr_dims(), ErrorCategory::dimension,
            "strategy 2 needs a model on the LR grid (lr dims == image dims)");
    const auto y_lr = rescale_to_lr_grid(y, model_lr.lr_dims(), hr_dims);
    const auto rec = solve_variational(model_lr, y_lr, config);
    return kspace_interp_sr(rec.x, hr_dims);
}

}  // namespace srr
