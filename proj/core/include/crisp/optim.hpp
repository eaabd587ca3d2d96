#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace crisp {

struct SgdConfig {
    double base_lr = 0.01;
    double momentum = 0.875;
    double weight_decay = 3.05e-5;
};

/// SGD with momentum, L2 weight decay and a cosine-annealed learning rate
/// lr(t) = base_lr * 0.5 * (1 + cos(pi * t / total_steps)).
struct OptimizerState {
    SgdConfig config;
    std::size_t total_steps = 1;
    std::size_t step = 0;
    std::vector<std::vector<double>> velocity;  // one buffer per parameter block

    OptimizerState() = default;
    OptimizerState(SgdConfig cfg, std::size_t total) : config(cfg), total_steps(total) {}

    [[nodiscard]] double lr_at(std::size_t t) const;
    [[nodiscard]] double current_lr() const { return lr_at(step); }
};

/// A parameter tensor together with its gradient. An empty decay mask means
/// every element is decayed; a 0 entry exempts that element (biases, gates).
struct ParamBlock {
    std::span<double> values;
    std::span<const double> grads;
    std::span<const std::uint8_t> decay = {};
};

/// velocity <- momentum * velocity + grad + weight_decay * param (decay
/// skipped where exempt); param <- param - lr(step) * velocity; ++step.
///
/// Throws ShapeMismatchError if a gradient or mask does not match its
/// parameters or the block layout changes between calls, and Error once the
/// schedule is exhausted.
void sgd_momentum_step(std::span<const ParamBlock> blocks, OptimizerState& state);

}  // namespace crisp
