#pragma once

// Embedding primitives shared by every contrastive objective: row
// normalization, cosine similarity and a weighted multi-target softmax
// cross-entropy, each with an analytical backward pass.

#include "crisp/common.hpp"

#include <string>
#include <vector>

namespace crisp {

/// A batch of view embeddings, one row per item.
class EmbeddingBatch {
public:
    EmbeddingBatch() = default;

    /// Item ids default to "0", "1", ... when not supplied.
    explicit EmbeddingBatch(Matrix vectors);
    EmbeddingBatch(Matrix vectors, std::vector<std::string> item_ids);

    [[nodiscard]] const Matrix& vectors() const noexcept { return vectors_; }
    [[nodiscard]] const std::vector<std::string>& item_ids() const noexcept { return item_ids_; }
    [[nodiscard]] Eigen::Index size() const noexcept { return vectors_.rows(); }
    [[nodiscard]] Eigen::Index dim() const noexcept { return vectors_.cols(); }

private:
    Matrix vectors_;
    std::vector<std::string> item_ids_;
};

/// Cosine similarities between two batches, divided by `temperature_divisor`
/// only when `scaled()` is requested.
struct SimilarityMatrix {
    Matrix values;
    double temperature_divisor = 1.0;

    [[nodiscard]] Matrix scaled() const { return values / temperature_divisor; }
};

/// Result of a softmax cross-entropy evaluation.
struct SoftmaxNll {
    double loss = 0.0;
    Matrix grad;  // d loss / d scaled logits
};

/// Rows below this norm are rejected by l2_normalize.
inline constexpr double kMinRowNorm = 1e-12;

/// Throws ZeroVectorError if any row norm is below kMinRowNorm.
EmbeddingBatch l2_normalize(const EmbeddingBatch& batch);
Matrix l2_normalize_rows(const Matrix& rows);

/// Back-propagates a gradient taken w.r.t. normalized rows onto the raw rows:
/// g_raw = (g - (g.u) u) / |x|.
Matrix l2_normalize_backward(const Matrix& raw, const Matrix& normalized, const Matrix& grad_normalized);

/// values(i, k) = cos(gl_i, a_k). Throws DimensionMismatchError.
SimilarityMatrix cosine_similarity_matrix(const EmbeddingBatch& gl, const EmbeddingBatch& a);

/// Mean over rows of the target-averaged negative log-softmax.
///
/// For row i with target weights t_ik and denominator weights d_k:
///
///   loss_i = (1 / sum_k t_ik) * sum_k t_ik * -log( exp(s_ik) / sum_m d_m exp(s_im) )
///
/// With d = 1 this is the ordinary row softmax. Non-unit denominator weights
/// express denominators that count a column more than once. Uses per-row max
/// subtraction. Throws EmptyTargetRowError if a row has no positive target.
SoftmaxNll softmax_nll_rows(const Matrix& scaled, const Matrix& target_weights,
                            const Vector& denominator_weights);
SoftmaxNll softmax_nll_rows(const Matrix& scaled, const Matrix& target_weights);

}  // namespace crisp
