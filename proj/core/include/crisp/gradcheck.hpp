#pragma once

// Finite-difference verification of the contrastive objectives' analytical
// gradients on random raw-embedding batches.

#include "crisp/common.hpp"
#include "crisp/loss.hpp"
#include "crisp/train.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace crisp {

struct GradcheckOptions {
    std::size_t instances = 50;
    std::uint64_t seed = 0;
    double step = 1e-5;
    double tolerance = 1e-5;
    int min_n = 2;
    int max_n = 16;
    int min_dim = 4;
    int max_dim = 32;
    double log_inverse_temperature = kDefaultLogInverseTemperature;
    /// Perturbs one analytical gradient entry per instance; the check must then fail.
    bool corrupt_gradient = false;
};

struct GradcheckInstance {
    PairedBatch batch;
    LossWeight weight;
};

/// A random batch for the objective: bijective pairing for standard and
/// parameterized, many-to-one pairing with coordinates in a ~1 km box for m2o.
GradcheckInstance random_gradcheck_instance(Objective objective, Rng& rng, const GradcheckOptions& options);

/// Entries smaller than this are compared on an absolute scale.
inline constexpr double kRelativeErrorFloor = 1e-4;

/// |analytic - numeric| / max(|analytic|, |numeric|, kRelativeErrorFloor), the
/// largest over all entries.
double max_relative_error(const Matrix& analytic, const Matrix& numeric);

/// Central differences of `f` around `x`, one entry at a time.
Matrix numeric_gradient(const Matrix& x, const std::function<double(const Matrix&)>& f, double step);

struct GradcheckResult {
    Objective objective = Objective::kStandard;
    std::size_t instances = 0;
    double max_rel_error = 0.0;
    bool passed = false;
};

/// One result per objective. Throws ConfigError on invalid options.
std::vector<GradcheckResult> run_gradcheck(const std::vector<Objective>& objectives, const GradcheckOptions& options);

}  // namespace crisp
