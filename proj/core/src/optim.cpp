#include "crisp/optim.hpp"

#include "crisp/errors.hpp"

#include <cmath>
#include <numbers>

namespace crisp {

double OptimizerState::lr_at(std::size_t t) const {
    const double progress = static_cast<double>(t) / static_cast<double>(total_steps);
    return config.base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

void sgd_momentum_step(std::span<const ParamBlock> blocks, OptimizerState& state) {
    if (state.total_steps == 0 || state.step >= state.total_steps) {
        throw Error("optimizer schedule exhausted after " + std::to_string(state.total_steps) + " steps");
    }
    if (state.velocity.empty()) {
        for (const ParamBlock& b : blocks) state.velocity.emplace_back(b.values.size(), 0.0);
    }
    if (state.velocity.size() != blocks.size()) throw ShapeMismatchError("parameter block count changed");

    const double lr = state.current_lr();
    const double momentum = state.config.momentum;
    const double decay = state.config.weight_decay;
    for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
        const ParamBlock& b = blocks[bi];
        std::vector<double>& v = state.velocity[bi];
        if (b.grads.size() != b.values.size() || v.size() != b.values.size() ||
            (!b.decay.empty() && b.decay.size() != b.values.size())) {
            throw ShapeMismatchError("parameter block " + std::to_string(bi) + ": gradient/mask/velocity size mismatch");
        }
        for (std::size_t i = 0; i < b.values.size(); ++i) {
            double g = b.grads[i];
            if (b.decay.empty() || b.decay[i] != 0) g += decay * b.values[i];
            v[i] = momentum * v[i] + g;
            b.values[i] -= lr * v[i];
        }
    }
    ++state.step;
}

}  // namespace crisp
