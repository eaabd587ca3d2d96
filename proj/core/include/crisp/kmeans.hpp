#pragma once

#include "crisp/common.hpp"

#include <cstdint>
#include <vector>

namespace crisp {

struct KMeansConfig {
    int k = 8;
    int max_iters = 300;
    /// Lloyd iterations stop once the summed squared center shift is <= tol.
    double tol = 1e-10;
    std::uint64_t seed = 0;
};

struct KMeansResult {
    std::vector<int> assignments;
    Matrix centers;  // k x d
    double inertia = 0.0;
    int iterations = 0;
    /// Inertia after every assignment step, first entry right after seeding.
    std::vector<double> inertia_history;
};

/// k-means++ seeding (first center uniform, then D^2 sampling) followed by
/// Lloyd iterations on squared Euclidean distance. Assignment ties go to the
/// lowest center index. A cluster that empties is reseeded at the point
/// farthest from its assigned center. The returned assignment is the nearest
/// center of every point for the returned centers.
///
/// Throws TooFewPointsError if there are fewer points than clusters.
KMeansResult kmeans_pp(const Matrix& points, const KMeansConfig& config);

}  // namespace crisp
