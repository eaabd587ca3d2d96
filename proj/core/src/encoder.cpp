#include "crisp/encoder.hpp"

#include "crisp/errors.hpp"

#include <cmath>
#include <string>

namespace crisp {

namespace {

using ConstWeights = Eigen::Map<const Matrix>;

void check_arch(const EncoderArch& arch) {
    if (arch.input_dim < 1 || arch.embed_dim < 1) throw ShapeMismatchError("encoder dims must be positive");
    for (int h : arch.hidden_dims) {
        if (h < 1) throw ShapeMismatchError("hidden dims must be positive");
    }
}

}  // namespace

std::size_t ToyEncoder::parameter_count(const EncoderArch& arch) {
    std::size_t count = 0;
    int in = arch.input_dim;
    for (int h : arch.hidden_dims) {
        count += static_cast<std::size_t>(h) * static_cast<std::size_t>(in + 1);
        in = h;
    }
    return count + static_cast<std::size_t>(arch.embed_dim) * static_cast<std::size_t>(in + 1);
}

ToyEncoder::ToyEncoder(EncoderArch arch, Rng& rng) : arch_(std::move(arch)) {
    check_arch(arch_);
    params_.assign(parameter_count(arch_), 0.0);
    for (const LayerView& l : layers()) {
        std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(l.in)));
        for (std::size_t i = 0; i < static_cast<std::size_t>(l.in * l.out); ++i) params_[l.weight_offset + i] = normal(rng);
    }
    build_mask();
}

ToyEncoder::ToyEncoder(EncoderArch arch, std::vector<double> params) : arch_(std::move(arch)), params_(std::move(params)) {
    check_arch(arch_);
    if (params_.size() != parameter_count(arch_)) {
        throw ShapeMismatchError("encoder expects " + std::to_string(parameter_count(arch_)) + " parameters, got " +
                                 std::to_string(params_.size()));
    }
    build_mask();
}

std::vector<ToyEncoder::LayerView> ToyEncoder::layers() const {
    std::vector<LayerView> out;
    std::size_t offset = 0;
    int in = arch_.input_dim;
    auto add = [&](int width) {
        const std::size_t weights = static_cast<std::size_t>(width) * static_cast<std::size_t>(in);
        out.push_back({offset, offset + weights, in, width});
        offset += weights + static_cast<std::size_t>(width);
        in = width;
    };
    for (int h : arch_.hidden_dims) add(h);
    add(arch_.embed_dim);
    return out;
}

void ToyEncoder::build_mask() {
    decay_mask_.assign(params_.size(), 0);
    for (const LayerView& l : layers()) {
        for (std::size_t i = 0; i < static_cast<std::size_t>(l.in * l.out); ++i) decay_mask_[l.weight_offset + i] = 1;
    }
}

Matrix ToyEncoder::forward(const Matrix& inputs) const {
    Cache cache;
    return forward(inputs, cache);
}

Matrix ToyEncoder::forward(const Matrix& inputs, Cache& cache) const {
    if (inputs.cols() != arch_.input_dim) {
        throw ShapeMismatchError("encoder input has " + std::to_string(inputs.cols()) + " columns, expected " +
                                 std::to_string(arch_.input_dim));
    }
    const auto views = layers();
    cache.activations.clear();
    cache.activations.push_back(inputs);
    for (std::size_t li = 0; li < views.size(); ++li) {
        const LayerView& l = views[li];
        const ConstWeights w(params_.data() + l.weight_offset, l.out, l.in);
        const Eigen::Map<const Eigen::RowVectorXd> b(params_.data() + l.bias_offset, l.out);
        Matrix z = cache.activations.back() * w.transpose();
        z.rowwise() += b;
        if (li + 1 < views.size()) z = z.array().tanh().matrix();
        cache.activations.push_back(std::move(z));
    }
    return cache.activations.back();
}

Matrix ToyEncoder::backward(const Cache& cache, const Matrix& grad_output, std::span<double> grad_params) const {
    if (grad_params.size() != params_.size()) throw ShapeMismatchError("gradient buffer has the wrong size");
    const auto views = layers();
    if (cache.activations.size() != views.size() + 1) throw ShapeMismatchError("encoder cache does not match");
    Matrix grad = grad_output;
    for (std::size_t li = views.size(); li-- > 0;) {
        const LayerView& l = views[li];
        if (li + 1 < views.size()) {
            // tanh'(z) = 1 - tanh(z)^2
            grad.array() *= 1.0 - cache.activations[li + 1].array().square();
        }
        const Matrix& input = cache.activations[li];
        Eigen::Map<Matrix> gw(grad_params.data() + l.weight_offset, l.out, l.in);
        Eigen::Map<Eigen::RowVectorXd> gb(grad_params.data() + l.bias_offset, l.out);
        gw.noalias() += grad.transpose() * input;
        gb += grad.colwise().sum();
        const ConstWeights w(params_.data() + l.weight_offset, l.out, l.in);
        grad = grad * w;
    }
    return grad;
}

}  // namespace crisp
