#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "srr/core/error.hpp"
#include "srr/core/grid.hpp"

namespace srr::ad {

class Tape;

/// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
class Var {
public:
    Var() = default;
    Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

    Tape& tape() const { return *tape_; }
    std::size_t id() const noexcept { return id_; }
    bool valid() const noexcept { return tape_ != nullptr; }

    inline const std::vector<double>& value() const;
    inline const Dims& dims() const;
    inline std::size_t size() const;
    inline bool requires_grad() const;
    // Value of a one-element tensor.
    inline double item() const;

private:
    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

using GradList = std::vector<std::optional<Var>>;

// Receives the upstream gradient and, per input, whether its gradient is wanted.
// Must return one entry per input; gradients are built from taped ops so that a
// recording backward pass is itself differentiable.
using BackwardFn = std::function<GradList(Tape&, const Var& grad_out, std::span<const bool> need)>;

struct Node {
    Dims dims;
    std::vector<double> value;
    bool requires_grad = false;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
};

/// Append-only record of operations for reverse-mode differentiation.
///
/// A tape is single-writer. Node storage is a deque so references to values
/// stay valid while backward passes append further nodes.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Dims dims, std::vector<double> value) { return push(std::move(dims), std::move(value), false, {}, {}); }

    Var leaf(Dims dims, std::vector<double> value, bool requires_grad = true) {
        return push(std::move(dims), std::move(value), requires_grad && recording_, {}, {});
    }

    Var scalar(double v) { return constant({1}, {v}); }

    /// Records the result of an op. The backward closure is kept only when some
    /// input requires a gradient and the tape is recording.
    Var record(Dims dims, std::vector<double> value, std::vector<Var> inputs, BackwardFn backward) {
        bool rg = false;
        std::vector<std::size_t> ids;
        ids.reserve(inputs.size());
        for (const auto& in : inputs) {
            require(in.valid() && &in.tape() == this, ErrorCategory::config, "op input belongs to another tape");
            ids.push_back(in.id());
            rg = rg || nodes_[in.id()].requires_grad;
        }
        rg = rg && recording_;
        if (!rg) return push(std::move(dims), std::move(value), false, {}, {});
        return push(std::move(dims), std::move(value), true, std::move(ids), std::move(backward));
    }

    const Node& node(std::size_t id) const { return nodes_[id]; }
    std::size_t size() const noexcept { return nodes_.size(); }
    bool recording() const noexcept { return recording_; }
    std::size_t generation() const noexcept { return generation_; }

    /// Gradients of the scalar `root` with respect to `wrt`. Unreachable inputs
    /// get zeros. With `create_graph` the pass is recorded, so its results can be
    /// differentiated again.
    std::vector<Var> grad(const Var& root, const std::vector<Var>& wrt, bool create_graph = false);

    class PauseRecording {
    public:
        explicit PauseRecording(Tape& t) : tape_(t), prev_(t.recording_) { t.recording_ = false; }
        ~PauseRecording() { tape_.recording_ = prev_; }
        PauseRecording(const PauseRecording&) = delete;
        PauseRecording& operator=(const PauseRecording&) = delete;

    private:
        Tape& tape_;
        bool prev_;
    };

    void set_recording(bool on) noexcept { recording_ = on; }

private:
    Var push(Dims dims, std::vector<double> value, bool rg, std::vector<std::size_t> inputs, BackwardFn fn) {
        require(value.size() == element_count(dims), ErrorCategory::dimension,
                "tensor value length does not match dims " + dims_string(dims));
        nodes_.push_back(Node{std::move(dims), std::move(value), rg, std::move(inputs), std::move(fn)});
        return Var(this, nodes_.size() - 1);
    }

    std::deque<Node> nodes_;
    bool recording_ = true;
    std::size_t generation_ = 0;
};

inline const std::vector<double>& Var::value() const { return tape_->node(id_).value; }
inline const Dims& Var::dims() const { return tape_->node(id_).dims; }
inline std::size_t Var::size() const { return tape_->node(id_).value.size(); }
inline bool Var::requires_grad() const { return tape_->node(id_).requires_grad; }
inline double Var::item() const {
    require(size() == 1, ErrorCategory::dimension, "item() on a tensor of dims " + dims_string(dims()));
    return value()[0];
}

inline Var add(const Var& a, const Var& b);

inline std::vector<Var> Tape::grad(const Var& root, const std::vector<Var>& wrt, bool create_graph) {
    require(root.valid() && &root.tape() == this, ErrorCategory::config, "root belongs to another tape");
    require(root.size() == 1, ErrorCategory::dimension,
            "backward needs a scalar root, got dims " + dims_string(root.dims()));
    ++generation_;
    const std::size_t n = root.id() + 1;

    // needed[i]: some wrt node is reachable from i through inputs.
    std::vector<bool> needed(n, false);
    for (const auto& w : wrt)
        if (w.id() < n) needed[w.id()] = true;
    for (std::size_t i = 0; i < n; ++i)
        if (!needed[i])
            for (auto in : nodes_[i].inputs)
                if (needed[in]) {
                    needed[i] = true;
                    break;
                }

    std::vector<std::optional<Var>> grads(n);
    {
        std::optional<PauseRecording> pause;
        if (!create_graph) pause.emplace(*this);
        grads[root.id()] = constant({1}, {1.0});
        for (std::size_t i = n; i-- > 0;) {
            if (!grads[i] || !needed[i] || !nodes_[i].backward) continue;
            const auto inputs = nodes_[i].inputs;  // copy: nodes_ may grow below
            std::unique_ptr<bool[]> need(new bool[inputs.size()]);
            for (std::size_t k = 0; k < inputs.size(); ++k)
                need[k] = needed[inputs[k]] && nodes_[inputs[k]].requires_grad;
            const BackwardFn& fn = nodes_[i].backward;  // deque: reference survives appends
            GradList gs = fn(*this, *grads[i], std::span<const bool>(need.get(), inputs.size()));
            require(gs.size() == inputs.size(), ErrorCategory::config, "backward returned wrong arity");
            for (std::size_t k = 0; k < inputs.size(); ++k) {
                if (!need[k] || !gs[k]) continue;
                auto& slot = grads[inputs[k]];
                slot = slot ? add(*slot, *gs[k]) : *gs[k];
            }
        }
    }
    std::vector<Var> out;
    out.reserve(wrt.size());
    for (const auto& w : wrt) {
        if (w.id() < n && grads[w.id()]) out.push_back(*grads[w.id()]);
        else out.push_back(constant(w.dims(), std::vector<double>(w.size(), 0.0)));
    }
    return out;
}

}  // namespace srr::ad

#include "srr/ad/ops.hpp"
