#include "crisp/moe.hpp"

#include "crisp/errors.hpp"

namespace crisp {

MoEHead MoEHead::make(int embed_gl, int embed_a, int n_classes, Rng& rng) {
    MoEHead h;
    h.proj_gl = ToyEncoder(EncoderArch{embed_gl, {}, n_classes}, rng);
    h.proj_a = ToyEncoder(EncoderArch{embed_a, {}, n_classes}, rng);
    return h;
}

namespace {

void check(const MoEHead& head, const Matrix& e_gl, const Matrix& e_a) {
    if (head.proj_gl.arch().embed_dim != head.proj_a.arch().embed_dim) {
        throw ShapeMismatchError("MoE projections disagree on the number of classes");
    }
    if (e_gl.rows() != e_a.rows()) throw ShapeMismatchError("MoE inputs differ in batch size");
}

}  // namespace

Matrix moe_forward(const MoEHead& head, const Matrix& e_gl, const Matrix& e_a) {
    check(head, e_gl, e_a);
    const double m = head.mix();
    return m * head.proj_gl.forward(e_gl) + (1.0 - m) * head.proj_a.forward(e_a);
}

MoEGradients moe_backward(const MoEHead& head, const Matrix& e_gl, const Matrix& e_a, const Matrix& grad_logits) {
    check(head, e_gl, e_a);
    const double m = head.mix();
    ToyEncoder::Cache cache_gl;
    ToyEncoder::Cache cache_a;
    const Matrix out_gl = head.proj_gl.forward(e_gl, cache_gl);
    const Matrix out_a = head.proj_a.forward(e_a, cache_a);
    if (grad_logits.rows() != out_gl.rows() || grad_logits.cols() != out_gl.cols()) {
        throw ShapeMismatchError("MoE logit gradient has the wrong shape");
    }

    MoEGradients g;
    g.proj_gl.assign(head.proj_gl.parameter_count(), 0.0);
    g.proj_a.assign(head.proj_a.parameter_count(), 0.0);
    g.e_gl = head.proj_gl.backward(cache_gl, m * grad_logits, g.proj_gl);
    g.e_a = head.proj_a.backward(cache_a, (1.0 - m) * grad_logits, g.proj_a);
    g.gate = m * (1.0 - m) * (grad_logits.cwiseProduct(out_gl - out_a)).sum();
    return g;
}

}  // namespace crisp
