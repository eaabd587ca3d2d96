#pragma once

// Ground-level / aerial contrastive objectives.
//
// Every objective takes raw (unnormalized) embeddings, normalizes them,
// scores all ground/aerial pairs by cosine similarity over a temperature and
// returns the loss together with gradients w.r.t. the raw embeddings.

#include "crisp/common.hpp"
#include "crisp/embedding.hpp"
#include "crisp/geo.hpp"

#include <optional>
#include <vector>

namespace crisp {

/// Log-inverse temperature used by the CLIP reference implementation: tau = exp(-2.659) ~= 0.07.
inline constexpr double kDefaultLogInverseTemperature = 2.659;

/// The positive divisor applied to cosine similarities.
class Temperature {
public:
    /// Throws NonPositiveTemperatureError unless tau > 0.
    static Temperature from_tau(double tau);
    /// tau = 1 / exp(log_inverse).
    static Temperature from_log_inverse(double log_inverse);

    [[nodiscard]] double tau() const noexcept { return tau_; }

private:
    explicit Temperature(double tau) : tau_(tau) {}
    double tau_;
};

/// Ground-level views paired with aerial views.
///
/// `pair_index[i]` is the aerial row paired with ground row i. Several ground
/// rows may share one aerial row. `coords`, when present, holds one location
/// per aerial row; a ground row is located at its paired aerial row.
struct PairedBatch {
    EmbeddingBatch gl;
    EmbeddingBatch a;
    std::vector<std::size_t> pair_index;
    std::optional<std::vector<GeoPoint>> coords;

    /// Checks shapes, index ranges and coordinate ranges.
    void validate() const;
    [[nodiscard]] bool is_bijective() const;
};

struct LossParts {
    double l_gl = 0.0;
    double l_a = 0.0;
};

struct LossResult {
    double loss = 0.0;
    Matrix grad_gl;
    Matrix grad_a;
    std::optional<double> grad_w;
    LossParts parts;
};

/// Unconstrained scalar whose sigmoid mixes the two directional losses.
struct LossWeight {
    double w = 0.0;

    [[nodiscard]] double mix() const noexcept { return sigmoid(w); }

    friend bool operator==(const LossWeight&, const LossWeight&) = default;
};

/// Symmetric InfoNCE over a bijectively paired batch; loss = (l_gl + l_a) / 2.
/// Throws NonBijectivePairingError for many-to-one batches.
LossResult standard_crisp_loss(const PairedBatch& batch, Temperature temperature);

/// loss = sigmoid(w) l_gl + (1 - sigmoid(w)) l_a, with d loss / d w in grad_w.
LossResult parameterized_crisp_loss(const PairedBatch& batch, Temperature temperature, LossWeight weight);

/// Inclusive co-location radius used to mine extra positives, in meters.
inline constexpr double kCoLocationRadiusM = 250.0;

/// mask(i, k) is set iff k == pair_index[i] or the ground row's location lies
/// within radius_m (closed ball) of aerial row k's location.
/// Throws MissingCoordinatesError when the batch carries no coordinates.
Mask build_positive_mask(const std::vector<GeoPoint>& coords, const std::vector<std::size_t>& pair_index,
                         double radius_m);

struct ManyToOneOptions {
    double radius_m = kCoLocationRadiusM;
    /// Count every aerial image once in the denominator instead of once per
    /// positive link. Off by default.
    bool dedupe_denominator = false;
};

/// Multi-positive objective. Ground row i averages over its positive aerial
/// rows P_i; its denominator runs over the multiset of positive links of the
/// whole batch, i.e. aerial k is counted once per ground row that lists it.
/// The aerial direction is symmetric.
LossResult many_to_one_crisp_loss(const PairedBatch& batch, Temperature temperature,
                                  const ManyToOneOptions& options = {});

/// Multi-positive objective with an explicit mask instead of coordinates.
LossResult many_to_one_crisp_loss(const PairedBatch& batch, Temperature temperature, const Mask& positives,
                                  bool dedupe_denominator = false);

}  // namespace crisp
