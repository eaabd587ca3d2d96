#include "crisp/embedding.hpp"

#include "crisp/errors.hpp"

#include <unordered_set>

namespace crisp {

namespace {

std::vector<std::string> default_ids(Eigen::Index n) {
    std::vector<std::string> ids;
    ids.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) ids.push_back(std::to_string(i));
    return ids;
}

}  // namespace

EmbeddingBatch::EmbeddingBatch(Matrix vectors) : EmbeddingBatch(vectors, default_ids(vectors.rows())) {}

EmbeddingBatch::EmbeddingBatch(Matrix vectors, std::vector<std::string> item_ids)
    : vectors_(std::move(vectors)), item_ids_(std::move(item_ids)) {
    if (vectors_.rows() < 1 || vectors_.cols() < 1) {
        throw DimensionMismatchError("embedding batch needs at least one item and one dimension");
    }
    if (static_cast<Eigen::Index>(item_ids_.size()) != vectors_.rows()) {
        throw DimensionMismatchError("embedding batch: " + std::to_string(item_ids_.size()) + " ids for " +
                                     std::to_string(vectors_.rows()) + " rows");
    }
    std::unordered_set<std::string> seen;
    for (const auto& id : item_ids_) {
        if (!seen.insert(id).second) throw Error("embedding batch: duplicate item id '" + id + "'");
    }
}

Matrix l2_normalize_rows(const Matrix& rows) {
    Matrix out(rows.rows(), rows.cols());
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
        const double norm = rows.row(i).norm();
        if (!(norm >= kMinRowNorm)) {
            throw ZeroVectorError("row " + std::to_string(i) + " has norm below 1e-12");
        }
        out.row(i) = rows.row(i) / norm;
    }
    return out;
}

EmbeddingBatch l2_normalize(const EmbeddingBatch& batch) {
    return EmbeddingBatch(l2_normalize_rows(batch.vectors()), batch.item_ids());
}

Matrix l2_normalize_backward(const Matrix& raw, const Matrix& normalized, const Matrix& grad_normalized) {
    Matrix out(raw.rows(), raw.cols());
    for (Eigen::Index i = 0; i < raw.rows(); ++i) {
        const double norm = raw.row(i).norm();
        const double radial = grad_normalized.row(i).dot(normalized.row(i));
        out.row(i) = (grad_normalized.row(i) - radial * normalized.row(i)) / norm;
    }
    return out;
}

SimilarityMatrix cosine_similarity_matrix(const EmbeddingBatch& gl, const EmbeddingBatch& a) {
    if (gl.dim() != a.dim()) {
        throw DimensionMismatchError("cosine similarity: dims " + std::to_string(gl.dim()) + " vs " +
                                     std::to_string(a.dim()));
    }
    const Matrix u = l2_normalize_rows(gl.vectors());
    const Matrix v = l2_normalize_rows(a.vectors());
    return SimilarityMatrix{u * v.transpose(), 1.0};
}

SoftmaxNll softmax_nll_rows(const Matrix& scaled, const Matrix& target_weights) {
    return softmax_nll_rows(scaled, target_weights, Vector::Ones(scaled.cols()));
}

SoftmaxNll softmax_nll_rows(const Matrix& scaled, const Matrix& target_weights, const Vector& denominator_weights) {
    const Eigen::Index rows = scaled.rows();
    const Eigen::Index cols = scaled.cols();
    if (target_weights.rows() != rows || target_weights.cols() != cols || denominator_weights.size() != cols) {
        throw DimensionMismatchError("softmax_nll_rows: shape mismatch between logits and weights");
    }
    if (rows < 1 || cols < 1) throw DimensionMismatchError("softmax_nll_rows: empty logits");

    SoftmaxNll out;
    out.grad.setZero(rows, cols);
    const double inv_rows = 1.0 / static_cast<double>(rows);

    for (Eigen::Index i = 0; i < rows; ++i) {
        double target_mass = 0.0;
        for (Eigen::Index k = 0; k < cols; ++k) {
            const double t = target_weights(i, k);
            if (t < 0.0) throw Error("softmax_nll_rows: negative target weight");
            if (t > 0.0 && !(denominator_weights(k) > 0.0)) {
                throw Error("softmax_nll_rows: target column has zero denominator weight");
            }
            target_mass += t;
        }
        if (!(target_mass > 0.0)) {
            throw EmptyTargetRowError("softmax_nll_rows: row " + std::to_string(i) + " has no positive target");
        }

        const double row_max = scaled.row(i).maxCoeff();
        double denom = 0.0;
        for (Eigen::Index k = 0; k < cols; ++k) {
            denom += denominator_weights(k) * std::exp(scaled(i, k) - row_max);
        }
        const double log_denom = std::log(denom) + row_max;

        double row_loss = 0.0;
        for (Eigen::Index k = 0; k < cols; ++k) {
            const double t = target_weights(i, k) / target_mass;
            if (t > 0.0) row_loss += t * (log_denom - scaled(i, k));
            const double p = denominator_weights(k) * std::exp(scaled(i, k) - log_denom);
            out.grad(i, k) = (p - t) * inv_rows;
        }
        out.loss += row_loss;
    }
    out.loss *= inv_rows;
    return out;
}

}  // namespace crisp
