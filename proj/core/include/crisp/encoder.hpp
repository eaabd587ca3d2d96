#pragma once

#include "crisp/common.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace crisp {

struct EncoderArch {
    int input_dim = 0;
    std::vector<int> hidden_dims;
    int embed_dim = 0;

    friend bool operator==(const EncoderArch&, const EncoderArch&) = default;
};

/// Multi-layer perceptron: affine layers with tanh between them and a linear
/// output. With no hidden layers it is a single affine map, which is how
/// classification heads are represented.
///
/// Parameters live in one flat vector, layer by layer, each layer storing its
/// row-major (out x in) weight followed by its bias.
class ToyEncoder {
public:
    ToyEncoder() = default;
    /// Weights ~ N(0, 1 / fan_in), biases zero.
    ToyEncoder(EncoderArch arch, Rng& rng);
    /// Throws ShapeMismatchError if the parameter count does not match.
    ToyEncoder(EncoderArch arch, std::vector<double> params);

    struct Cache {
        std::vector<Matrix> activations;  // input, then each layer output (post-nonlinearity)
    };

    [[nodiscard]] const EncoderArch& arch() const noexcept { return arch_; }
    [[nodiscard]] std::span<const double> params() const noexcept { return params_; }
    [[nodiscard]] std::span<double> params() noexcept { return params_; }
    /// 1 for weights, 0 for biases (which are exempt from weight decay).
    [[nodiscard]] std::span<const std::uint8_t> decay_mask() const noexcept { return decay_mask_; }
    [[nodiscard]] std::size_t parameter_count() const noexcept { return params_.size(); }

    [[nodiscard]] Matrix forward(const Matrix& inputs) const;
    [[nodiscard]] Matrix forward(const Matrix& inputs, Cache& cache) const;

    /// Accumulates d loss / d params into `grad_params` (sized parameter_count())
    /// and returns d loss / d inputs.
    Matrix backward(const Cache& cache, const Matrix& grad_output, std::span<double> grad_params) const;

    static std::size_t parameter_count(const EncoderArch& arch);

    friend bool operator==(const ToyEncoder&, const ToyEncoder&) = default;

private:
    struct LayerView {
        std::size_t weight_offset;
        std::size_t bias_offset;
        int in;
        int out;
    };

    [[nodiscard]] std::vector<LayerView> layers() const;
    void build_mask();

    EncoderArch arch_;
    std::vector<double> params_;
    std::vector<std::uint8_t> decay_mask_;
};

}  // namespace crisp
