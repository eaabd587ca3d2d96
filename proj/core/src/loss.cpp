#include "crisp/loss.hpp"

#include "crisp/errors.hpp"

#include <cmath>
#include <string>

namespace crisp {

Temperature Temperature::from_tau(double tau) {
    if (!(tau > 0.0) || !std::isfinite(tau)) {
        throw NonPositiveTemperatureError("temperature must be positive and finite, got " + std::to_string(tau));
    }
    return Temperature(tau);
}

Temperature Temperature::from_log_inverse(double log_inverse) { return from_tau(std::exp(-log_inverse)); }

void PairedBatch::validate() const {
    if (gl.dim() != a.dim()) {
        throw DimensionMismatchError("paired batch: ground dim " + std::to_string(gl.dim()) + " vs aerial dim " +
                                     std::to_string(a.dim()));
    }
    if (static_cast<Eigen::Index>(pair_index.size()) != gl.size()) {
        throw DimensionMismatchError("paired batch: pair_index length must equal the ground batch size");
    }
    std::vector<bool> used(static_cast<std::size_t>(a.size()), false);
    for (std::size_t k : pair_index) {
        if (k >= used.size()) throw DimensionMismatchError("paired batch: pair index out of range");
        used[k] = true;
    }
    for (std::size_t k = 0; k < used.size(); ++k) {
        if (!used[k]) throw Error("paired batch: aerial item " + std::to_string(k) + " has no ground view");
    }
    if (coords) {
        if (static_cast<Eigen::Index>(coords->size()) != a.size()) {
            throw DimensionMismatchError("paired batch: need one coordinate per aerial item");
        }
        for (const auto& p : *coords) crisp::validate(p);
    }
}

bool PairedBatch::is_bijective() const {
    // validate() guarantees every aerial row is hit at least once.
    return gl.size() == a.size();
}

namespace {

struct Directional {
    SoftmaxNll gl;  // rows: ground items, columns: aerial items
    SoftmaxNll a;   // rows: aerial items, columns: ground items
};

Directional directional_losses(const Matrix& scaled, const Matrix& targets, const Vector& gl_denominator,
                               const Vector& a_denominator) {
    Directional d;
    d.gl = softmax_nll_rows(scaled, targets, gl_denominator);
    d.a = softmax_nll_rows(scaled.transpose(), targets.transpose(), a_denominator);
    return d;
}

/// Mixes the directional losses with weight `mix` on the ground direction and
/// back-propagates through similarity, temperature and normalization.
LossResult assemble(const PairedBatch& batch, const Matrix& u, const Matrix& v, double tau, const Directional& d,
                    double mix) {
    LossResult out;
    out.parts = {d.gl.loss, d.a.loss};
    out.loss = mix * d.gl.loss + (1.0 - mix) * d.a.loss;

    const Matrix grad_scaled = mix * d.gl.grad + (1.0 - mix) * d.a.grad.transpose();
    const Matrix grad_u = grad_scaled * v / tau;
    const Matrix grad_v = grad_scaled.transpose() * u / tau;
    out.grad_gl = l2_normalize_backward(batch.gl.vectors(), u, grad_u);
    out.grad_a = l2_normalize_backward(batch.a.vectors(), v, grad_v);
    return out;
}

Matrix pairing_targets(const PairedBatch& batch) {
    Matrix t = Matrix::Zero(batch.gl.size(), batch.a.size());
    for (std::size_t i = 0; i < batch.pair_index.size(); ++i) {
        t(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(batch.pair_index[i])) = 1.0;
    }
    return t;
}

LossResult mixed_standard(const PairedBatch& batch, Temperature temperature, double mix) {
    batch.validate();
    if (!batch.is_bijective()) {
        throw NonBijectivePairingError(
            "standard objective needs a one-to-one pairing; use many_to_one_crisp_loss for shared aerial views");
    }
    const double tau = temperature.tau();
    const Matrix u = l2_normalize_rows(batch.gl.vectors());
    const Matrix v = l2_normalize_rows(batch.a.vectors());
    const Matrix scaled = (u * v.transpose()) / tau;
    const Directional d = directional_losses(scaled, pairing_targets(batch), Vector::Ones(batch.a.size()),
                                             Vector::Ones(batch.gl.size()));
    return assemble(batch, u, v, tau, d, mix);
}

}  // namespace

LossResult standard_crisp_loss(const PairedBatch& batch, Temperature temperature) {
    return mixed_standard(batch, temperature, 0.5);
}

LossResult parameterized_crisp_loss(const PairedBatch& batch, Temperature temperature, LossWeight weight) {
    const double mix = weight.mix();
    LossResult out = mixed_standard(batch, temperature, mix);
    out.grad_w = mix * (1.0 - mix) * (out.parts.l_gl - out.parts.l_a);
    return out;
}

Mask build_positive_mask(const std::vector<GeoPoint>& coords, const std::vector<std::size_t>& pair_index,
                         double radius_m) {
    if (coords.empty()) throw MissingCoordinatesError("positive mask needs coordinates for every item");
    if (!(radius_m >= 0.0)) throw Error("positive mask radius must be non-negative");
    const auto n_gl = static_cast<Eigen::Index>(pair_index.size());
    const auto n_a = static_cast<Eigen::Index>(coords.size());
    Mask mask = Mask::Zero(n_gl, n_a);
    for (Eigen::Index i = 0; i < n_gl; ++i) {
        const std::size_t paired = pair_index[static_cast<std::size_t>(i)];
        if (paired >= coords.size()) throw DimensionMismatchError("positive mask: pair index out of range");
        const GeoPoint& here = coords[paired];
        for (Eigen::Index k = 0; k < n_a; ++k) {
            const bool linked = static_cast<std::size_t>(k) == paired ||
                                haversine_m(here, coords[static_cast<std::size_t>(k)]) <= radius_m;
            mask(i, k) = linked ? 1 : 0;
        }
    }
    return mask;
}

LossResult many_to_one_crisp_loss(const PairedBatch& batch, Temperature temperature,
                                  const ManyToOneOptions& options) {
    if (!batch.coords) throw MissingCoordinatesError("many-to-one objective needs item coordinates");
    batch.validate();
    const Mask positives = build_positive_mask(*batch.coords, batch.pair_index, options.radius_m);
    return many_to_one_crisp_loss(batch, temperature, positives, options.dedupe_denominator);
}

LossResult many_to_one_crisp_loss(const PairedBatch& batch, Temperature temperature, const Mask& positives,
                                  bool dedupe_denominator) {
    batch.validate();
    if (positives.rows() != batch.gl.size() || positives.cols() != batch.a.size()) {
        throw DimensionMismatchError("many-to-one objective: mask shape does not match the batch");
    }
    const double tau = temperature.tau();
    const Matrix u = l2_normalize_rows(batch.gl.vectors());
    const Matrix v = l2_normalize_rows(batch.a.vectors());
    const Matrix scaled = (u * v.transpose()) / tau;
    const Matrix targets = positives.cast<double>();

    // Aerial k appears in the ground-direction denominator once per ground
    // row listing it (column count); ground g likewise once per aerial row
    // listing it (row count).
    Vector gl_denominator = targets.colwise().sum().transpose();
    Vector a_denominator = targets.rowwise().sum();
    if (dedupe_denominator) {
        gl_denominator.setOnes();
        a_denominator.setOnes();
    }
    const Directional d = directional_losses(scaled, targets, gl_denominator, a_denominator);
    return assemble(batch, u, v, tau, d, 0.5);
}

}  // namespace crisp
