#pragma once

// Evaluation metrics for long-tailed classification and for clustering
// agreement.
//
// Top-k ranks break score ties by ascending class index, so a class ranks
// ahead of every higher-indexed class with an equal score.

#include "crisp/common.hpp"
#include "crisp/split.hpp"

#include <optional>
#include <vector>

namespace crisp {

struct PredictionSet {
    Matrix scores;                  // n_samples x n_classes
    std::vector<int> true_class;    // column index of each sample's class
    std::optional<std::vector<int>> group_id;
    /// Keyed by column index.
    std::optional<FrequencyBins> class_bins;

    /// Throws ShapeMismatchError / InvalidTargetError / Error.
    void validate() const;
};

/// Zero-based rank of the true class in sample i under the tie rule above.
std::size_t true_class_rank(const PredictionSet& p, std::size_t i);

/// Fraction of samples whose true class is among the k best scores.
double topk_accuracy(const PredictionSet& p, std::size_t k);

/// Unweighted mean over classes present in true_class of per-class top-k
/// accuracy. Classes without samples are skipped.
double topk_macro_accuracy(const PredictionSet& p, std::size_t k);

/// Unweighted mean over groups present in the set of within-group top-k
/// accuracy. Throws MissingGroupError without group ids.
double eco_accuracy(const PredictionSet& p, std::size_t k = 1);

struct BinnedAccuracy {
    std::optional<double> frequent;
    std::optional<double> common;
    std::optional<double> rare;
};

/// Macro accuracy within each frequency bin; bins without samples are empty.
/// Throws MissingBinsError without class_bins.
BinnedAccuracy binned_macro_accuracy(const PredictionSet& p, std::size_t k);

struct ClusteringPair {
    std::vector<int> predicted_cluster;
    std::vector<int> true_label;
};

struct ClusteringAgreement {
    double homogeneity = 0.0;
    double completeness = 0.0;
    double v_measure = 0.0;
    double adjusted_rand = 0.0;
    double adjusted_mutual_info = 0.0;
};

/// Contingency-table metrics with natural logarithms. The adjusted mutual
/// information subtracts the expected MI under the permutation
/// (hypergeometric) model and normalizes by the arithmetic mean of the two
/// entropies. Degenerate partitions follow the usual conventions: a metric
/// whose normalizing entropy is zero is 1, and ARI/AMI are 1 when both
/// partitions are trivially identical.
ClusteringAgreement clustering_agreement(const ClusteringPair& c);

/// Expected mutual information of two random partitions with the given
/// marginal counts under the hypergeometric model.
double expected_mutual_information(const std::vector<std::size_t>& row_sums, const std::vector<std::size_t>& col_sums);

}  // namespace crisp
