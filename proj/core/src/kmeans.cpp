#include "crisp/kmeans.hpp"

#include "crisp/errors.hpp"

#include <limits>
#include <string>

namespace crisp {

namespace {

struct Assignment {
    std::vector<int> labels;
    std::vector<double> sq_dist;
    double inertia = 0.0;
};

Assignment assign(const Matrix& points, const Matrix& centers) {
    Assignment a;
    const auto n = static_cast<std::size_t>(points.rows());
    a.labels.resize(n);
    a.sq_dist.resize(n);
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        int best_j = 0;
        for (Eigen::Index j = 0; j < centers.rows(); ++j) {
            const double d = (points.row(i) - centers.row(j)).squaredNorm();
            if (d < best) {
                best = d;
                best_j = static_cast<int>(j);
            }
        }
        a.labels[static_cast<std::size_t>(i)] = best_j;
        a.sq_dist[static_cast<std::size_t>(i)] = best;
        a.inertia += best;
    }
    return a;
}

Matrix seed_centers(const Matrix& points, int k, Rng& rng) {
    const Eigen::Index n = points.rows();
    Matrix centers(k, points.cols());
    std::vector<bool> chosen(static_cast<std::size_t>(n), false);
    Eigen::Index first = std::uniform_int_distribution<Eigen::Index>(0, n - 1)(rng);
    centers.row(0) = points.row(first);
    chosen[static_cast<std::size_t>(first)] = true;

    std::vector<double> d2(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) d2[static_cast<std::size_t>(i)] = (points.row(i) - centers.row(0)).squaredNorm();

    for (int c = 1; c < k; ++c) {
        double total = 0.0;
        for (double d : d2) total += d;
        Eigen::Index pick = -1;
        if (total > 0.0) {
            const double target = std::uniform_real_distribution<double>(0.0, total)(rng);
            double acc = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                acc += d2[static_cast<std::size_t>(i)];
                if (acc > target && d2[static_cast<std::size_t>(i)] > 0.0) {
                    pick = i;
                    break;
                }
            }
            if (pick < 0) {
                // rounding left target past the final positive entry
                for (Eigen::Index i = n; i-- > 0;) {
                    if (d2[static_cast<std::size_t>(i)] > 0.0) {
                        pick = i;
                        break;
                    }
                }
            }
        } else {
            // every point coincides with a chosen center
            for (Eigen::Index i = 0; i < n && pick < 0; ++i) {
                if (!chosen[static_cast<std::size_t>(i)]) pick = i;
            }
        }
        chosen[static_cast<std::size_t>(pick)] = true;
        centers.row(c) = points.row(pick);
        for (Eigen::Index i = 0; i < n; ++i) {
            d2[static_cast<std::size_t>(i)] =
                std::min(d2[static_cast<std::size_t>(i)], (points.row(i) - centers.row(c)).squaredNorm());
        }
    }
    return centers;
}

}  // namespace

KMeansResult kmeans_pp(const Matrix& points, const KMeansConfig& config) {
    if (config.k < 1) throw Error("k-means needs k >= 1");
    if (points.rows() < config.k) {
        throw TooFewPointsError("k-means with k = " + std::to_string(config.k) + " needs at least k points, got " +
                                std::to_string(points.rows()));
    }
    if (!points.allFinite()) throw Error("k-means points must be finite");
    if (config.tol < 0.0) throw Error("k-means tolerance must be non-negative");

    Rng rng(config.seed);
    KMeansResult r;
    r.centers = seed_centers(points, config.k, rng);
    Assignment current = assign(points, r.centers);
    r.inertia_history.push_back(current.inertia);

    while (r.iterations < config.max_iters) {
        Matrix updated = Matrix::Zero(config.k, points.cols());
        std::vector<std::size_t> counts(static_cast<std::size_t>(config.k), 0);
        for (Eigen::Index i = 0; i < points.rows(); ++i) {
            const int j = current.labels[static_cast<std::size_t>(i)];
            updated.row(j) += points.row(i);
            ++counts[static_cast<std::size_t>(j)];
        }
        std::vector<double> spare = current.sq_dist;
        for (int j = 0; j < config.k; ++j) {
            if (counts[static_cast<std::size_t>(j)] > 0) {
                updated.row(j) /= static_cast<double>(counts[static_cast<std::size_t>(j)]);
                continue;
            }
            Eigen::Index far = 0;
            for (Eigen::Index i = 1; i < points.rows(); ++i) {
                if (spare[static_cast<std::size_t>(i)] > spare[static_cast<std::size_t>(far)]) far = i;
            }
            updated.row(j) = points.row(far);
            spare[static_cast<std::size_t>(far)] = -1.0;
        }
        const double shift = (updated - r.centers).squaredNorm();
        r.centers = std::move(updated);
        ++r.iterations;

        Assignment next = assign(points, r.centers);
        r.inertia_history.push_back(next.inertia);
        const bool unchanged = next.labels == current.labels;
        current = std::move(next);
        if (unchanged || shift <= config.tol) break;
    }

    r.assignments = std::move(current.labels);
    r.inertia = current.inertia;
    return r;
}

}  // namespace crisp
