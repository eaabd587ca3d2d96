#pragma once

#include "crisp/common.hpp"
#include "crisp/encoder.hpp"

#include <vector>

namespace crisp {

/// Fuses two views by mixing per-view linear class projections with a single
/// global gate: logits = sigmoid(v) * proj_gl(e_gl) + (1 - sigmoid(v)) * proj_a(e_a).
struct MoEHead {
    ToyEncoder proj_gl;  // affine embed_gl -> n_classes
    ToyEncoder proj_a;   // affine embed_a -> n_classes
    double gate = 0.0;

    /// Random projections, gate 0 (equal mixing).
    static MoEHead make(int embed_gl, int embed_a, int n_classes, Rng& rng);

    [[nodiscard]] double mix() const noexcept { return sigmoid(gate); }
    [[nodiscard]] int n_classes() const noexcept { return proj_gl.arch().embed_dim; }
};

/// Throws ShapeMismatchError when embedding widths or batch sizes disagree.
Matrix moe_forward(const MoEHead& head, const Matrix& e_gl, const Matrix& e_a);

struct MoEGradients {
    std::vector<double> proj_gl;
    std::vector<double> proj_a;
    double gate = 0.0;
    Matrix e_gl;
    Matrix e_a;
};

/// Gradients of a loss w.r.t. every head parameter and both inputs, given
/// d loss / d logits.
MoEGradients moe_backward(const MoEHead& head, const Matrix& e_gl, const Matrix& e_a, const Matrix& grad_logits);

}  // namespace crisp
