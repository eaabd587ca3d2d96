#include "crisp/metrics.hpp"

#include "crisp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace crisp {

void PredictionSet::validate() const {
    const auto n = static_cast<std::size_t>(scores.rows());
    if (true_class.size() != n) throw ShapeMismatchError("prediction set: one true class per score row required");
    if (group_id && group_id->size() != n) throw ShapeMismatchError("prediction set: one group id per sample required");
    if (!scores.allFinite()) throw Error("prediction set: scores must be finite");
    for (int c : true_class) {
        if (c < 0 || c >= scores.cols()) throw InvalidTargetError("prediction set: true class out of range");
    }
}

std::size_t true_class_rank(const PredictionSet& p, std::size_t i) {
    const auto row = static_cast<Eigen::Index>(i);
    const int t = p.true_class[i];
    const double target = p.scores(row, t);
    std::size_t rank = 0;
    for (Eigen::Index j = 0; j < p.scores.cols(); ++j) {
        const double s = p.scores(row, j);
        if (s > target || (s == target && j < t)) ++rank;
    }
    return rank;
}

namespace {

/// Mean over keys of the per-key hit rate; samples selected by `include`.
template <typename KeyFn, typename Include>
std::optional<double> macro_hit_rate(const PredictionSet& p, std::size_t k, KeyFn key, Include include) {
    std::map<int, std::pair<std::size_t, std::size_t>> per_key;  // key -> (hits, total)
    for (std::size_t i = 0; i < p.true_class.size(); ++i) {
        if (!include(i)) continue;
        auto& [hits, total] = per_key[key(i)];
        ++total;
        if (true_class_rank(p, i) < k) ++hits;
    }
    if (per_key.empty()) return std::nullopt;
    double sum = 0.0;
    for (const auto& [_, counts] : per_key) {
        sum += static_cast<double>(counts.first) / static_cast<double>(counts.second);
    }
    return sum / static_cast<double>(per_key.size());
}

}  // namespace

double topk_accuracy(const PredictionSet& p, std::size_t k) {
    p.validate();
    if (k < 1) throw Error("top-k accuracy needs k >= 1");
    if (p.true_class.empty()) return 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < p.true_class.size(); ++i) {
        if (true_class_rank(p, i) < k) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(p.true_class.size());
}

double topk_macro_accuracy(const PredictionSet& p, std::size_t k) {
    p.validate();
    if (k < 1) throw Error("top-k accuracy needs k >= 1");
    return macro_hit_rate(p, k, [&](std::size_t i) { return p.true_class[i]; }, [](std::size_t) { return true; })
        .value_or(0.0);
}

double eco_accuracy(const PredictionSet& p, std::size_t k) {
    if (!p.group_id) throw MissingGroupError("eco accuracy needs a group id per sample");
    p.validate();
    if (k < 1) throw Error("top-k accuracy needs k >= 1");
    return macro_hit_rate(p, k, [&](std::size_t i) { return (*p.group_id)[i]; }, [](std::size_t) { return true; })
        .value_or(0.0);
}

BinnedAccuracy binned_macro_accuracy(const PredictionSet& p, std::size_t k) {
    if (!p.class_bins) throw MissingBinsError("binned accuracy needs frequency bins");
    p.validate();
    if (k < 1) throw Error("top-k accuracy needs k >= 1");
    const auto& bins = p.class_bins->bin_of;
    auto in_bin = [&](FrequencyBin b) {
        return [&, b](std::size_t i) {
            const auto it = bins.find(p.true_class[i]);
            return it != bins.end() && it->second == b;
        };
    };
    auto cls = [&](std::size_t i) { return p.true_class[i]; };
    return BinnedAccuracy{macro_hit_rate(p, k, cls, in_bin(FrequencyBin::kFrequent)),
                          macro_hit_rate(p, k, cls, in_bin(FrequencyBin::kCommon)),
                          macro_hit_rate(p, k, cls, in_bin(FrequencyBin::kRare))};
}

namespace {

std::vector<int> compact_labels(const std::vector<int>& labels, std::size_t& n_distinct) {
    std::vector<int> sorted = labels;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    n_distinct = sorted.size();
    std::vector<int> out(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        out[i] = static_cast<int>(std::lower_bound(sorted.begin(), sorted.end(), labels[i]) - sorted.begin());
    }
    return out;
}

double entropy_of(const std::vector<std::size_t>& counts, double n) {
    double h = 0.0;
    for (std::size_t c : counts) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / n;
        h -= p * std::log(p);
    }
    return h;
}

double choose2(std::size_t n) { return 0.5 * static_cast<double>(n) * static_cast<double>(n > 0 ? n - 1 : 0); }

}  // namespace

double expected_mutual_information(const std::vector<std::size_t>& row_sums, const std::vector<std::size_t>& col_sums) {
    std::size_t total = 0;
    for (std::size_t a : row_sums) total += a;
    const double n = static_cast<double>(total);
    const double lg_n = std::lgamma(n + 1.0);
    double emi = 0.0;
    for (std::size_t a : row_sums) {
        for (std::size_t b : col_sums) {
            const std::size_t lo = std::max<std::size_t>(1, a + b > total ? a + b - total : 0);
            const std::size_t hi = std::min(a, b);
            const double da = static_cast<double>(a);
            const double db = static_cast<double>(b);
            const double fixed = std::lgamma(da + 1.0) + std::lgamma(db + 1.0) + std::lgamma(n - da + 1.0) +
                                 std::lgamma(n - db + 1.0) - lg_n;
            for (std::size_t nij = lo; nij <= hi; ++nij) {
                const double x = static_cast<double>(nij);
                const double log_prob = fixed - std::lgamma(x + 1.0) - std::lgamma(da - x + 1.0) -
                                        std::lgamma(db - x + 1.0) - std::lgamma(n - da - db + x + 1.0);
                emi += (x / n) * (std::log(n * x) - std::log(da * db)) * std::exp(log_prob);
            }
        }
    }
    return emi;
}

ClusteringAgreement clustering_agreement(const ClusteringPair& c) {
    if (c.predicted_cluster.size() != c.true_label.size()) {
        throw ShapeMismatchError("clustering pair: label vectors differ in length");
    }
    if (c.true_label.empty()) throw EmptySetError("clustering pair: no samples");

    std::size_t n_labels = 0;
    std::size_t n_clusters = 0;
    const std::vector<int> labels = compact_labels(c.true_label, n_labels);
    const std::vector<int> clusters = compact_labels(c.predicted_cluster, n_clusters);
    const std::size_t total = labels.size();
    const double n = static_cast<double>(total);

    std::vector<std::size_t> table(n_labels * n_clusters, 0);
    std::vector<std::size_t> label_counts(n_labels, 0);
    std::vector<std::size_t> cluster_counts(n_clusters, 0);
    for (std::size_t i = 0; i < total; ++i) {
        ++table[static_cast<std::size_t>(labels[i]) * n_clusters + static_cast<std::size_t>(clusters[i])];
        ++label_counts[static_cast<std::size_t>(labels[i])];
        ++cluster_counts[static_cast<std::size_t>(clusters[i])];
    }

    double mi = 0.0;
    double pair_index = 0.0;
    for (std::size_t r = 0; r < n_labels; ++r) {
        for (std::size_t k = 0; k < n_clusters; ++k) {
            const std::size_t nij = table[r * n_clusters + k];
            pair_index += choose2(nij);
            if (nij == 0) continue;
            const double x = static_cast<double>(nij);
            mi += (x / n) * (std::log(n * x) - std::log(static_cast<double>(label_counts[r]) *
                                                        static_cast<double>(cluster_counts[k])));
        }
    }
    mi = std::max(0.0, mi);
    const double h_labels = entropy_of(label_counts, n);
    const double h_clusters = entropy_of(cluster_counts, n);

    ClusteringAgreement out;
    out.homogeneity = h_labels > 0.0 ? mi / h_labels : 1.0;
    out.completeness = h_clusters > 0.0 ? mi / h_clusters : 1.0;
    const double hc = out.homogeneity + out.completeness;
    out.v_measure = hc > 0.0 ? 2.0 * out.homogeneity * out.completeness / hc : 0.0;

    double label_pairs = 0.0;
    double cluster_pairs = 0.0;
    for (std::size_t a : label_counts) label_pairs += choose2(a);
    for (std::size_t b : cluster_counts) cluster_pairs += choose2(b);
    const double all_pairs = choose2(total);
    const double expected_index = all_pairs > 0.0 ? label_pairs * cluster_pairs / all_pairs : 0.0;
    const double max_index = 0.5 * (label_pairs + cluster_pairs);
    out.adjusted_rand =
        max_index == expected_index ? 1.0 : (pair_index - expected_index) / (max_index - expected_index);

    if ((n_labels == 1 && n_clusters == 1) || (n_labels == total && n_clusters == total)) {
        out.adjusted_mutual_info = 1.0;
    } else {
        const double emi = expected_mutual_information(label_counts, cluster_counts);
        double denom = 0.5 * (h_labels + h_clusters) - emi;
        constexpr double eps = std::numeric_limits<double>::epsilon();
        denom = denom < 0.0 ? std::min(denom, -eps) : std::max(denom, eps);
        out.adjusted_mutual_info = (mi - emi) / denom;
    }
    return out;
}

}  // namespace crisp
