#pragma once

// Spatial block holdout: observations inherit the train/val/test role of the
// 0.1 degree cell they fall in, evaluation observations close to training
// ones are dropped, evaluation and labeled-train sets keep only
// classification-quality records of classes seen in all three splits, and
// fractions of the labeled training set are drawn for label-scarce runs.

#include "crisp/common.hpp"
#include "crisp/geo.hpp"

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace crisp {

enum class Split { kTrain, kVal, kTest };

std::string_view to_string(Split s);
/// Throws FormatError for anything but "train", "val", "test".
Split parse_split(std::string_view s);

/// One observation of an organism: a location, an optional label and one or
/// more ground-level images sharing a single aerial image.
struct ObservationRecord {
    std::string obs_id;
    double lat = 0.0;
    double lon = 0.0;
    std::optional<int> class_id;
    bool research_grade = false;
    bool species_level = false;
    int group_id = 0;
    int n_ground_views = 1;

    [[nodiscard]] GeoPoint location() const { return {lat, lon}; }
    /// Research grade and identified to species.
    [[nodiscard]] bool classification_quality() const { return research_grade && species_level && class_id; }
    /// Throws InvalidCoordinateError / Error on invariant violations.
    void validate() const;

    friend bool operator==(const ObservationRecord&, const ObservationRecord&) = default;
};

inline constexpr double kDefaultCellDeg = 0.1;
inline constexpr double kDefaultProximityM = 256.0;

struct BlockFractions {
    double test = 0.125;
    double val = 0.125;
};

/// Label fractions of the labeled training set (0.25 % .. 20 %, plus 2.5 % for tuning).
inline const std::vector<double> kDefaultLambdas = {0.0025, 0.01, 0.025, 0.05, 0.20};

using BlockAssignment = std::map<BlockId, Split>;

/// Shuffles the sorted blocks and takes round(test * n) test blocks, then
/// round(val * n) val blocks; the rest are train.
/// Throws EmptyBlockSetError on an empty set.
BlockAssignment assign_blocks(const std::set<BlockId>& blocks, BlockFractions fractions, Rng& rng);

/// Blocks of every observation.
std::set<BlockId> blocks_of(const std::vector<ObservationRecord>& obs, double cell_deg = kDefaultCellDeg);

struct SplitOptions {
    double cell_deg = kDefaultCellDeg;
    double proximity_m = kDefaultProximityM;
};

/// Observation and block counts reported alongside a manifest; realized
/// observation fractions differ from block fractions with spatial density.
struct SplitSummary {
    std::map<std::string, std::size_t> blocks;
    std::map<std::string, std::size_t> observations_before_filtering;
    std::map<std::string, std::size_t> observations;
    std::size_t labeled_train = 0;
    std::size_t dropped_by_proximity = 0;
    std::size_t dropped_by_quality = 0;
    std::size_t dropped_by_class = 0;
};

struct SplitManifest {
    double cell_deg = kDefaultCellDeg;
    double proximity_m = kDefaultProximityM;
    BlockAssignment block_assignment;
    /// Retained observations: every train observation (the self-supervised
    /// pool, any label quality) plus the filtered val/test observations.
    std::map<std::string, Split> obs_assignment;
    /// Classification-quality train observations of classes in class_universe.
    std::set<std::string> labeled_train;
    std::map<double, std::set<std::string>> lambda_subsets;
    std::set<int> class_universe;
    SplitSummary summary;

    [[nodiscard]] std::vector<std::string> ids_in(Split s) const;
};

/// Applies, in order: block inheritance, the proximity filter on val/test,
/// the label-quality filter on val/test/labeled-train, and the class
/// intersection filter. Throws UncoveredBlockError if an observation's block
/// has no assignment.
SplitManifest build_split(const std::vector<ObservationRecord>& obs, const BlockAssignment& block_assignment,
                          const SplitOptions& options = {});

/// Uniform sample without replacement of round(lambda * n) ids.
/// Throws EmptySetError on an empty input and Error unless 0 < lambda <= 1.
std::set<std::string> sample_lambda_subset(const std::set<std::string>& labeled_train, double lambda, Rng& rng);

/// Draws every lambda independently with one stream and stores the subsets.
void add_lambda_subsets(SplitManifest& manifest, const std::vector<double>& lambdas, Rng& rng);

/// Classes present in the lambda subset and in the val and test sets.
std::set<int> lambda_class_universe(const SplitManifest& manifest, double lambda,
                                    const std::vector<ObservationRecord>& obs);

enum class FrequencyBin { kFrequent, kCommon, kRare };

std::string_view to_string(FrequencyBin b);

struct FrequencyBins {
    std::size_t rare_below = 200;
    std::size_t frequent_above = 700;
    std::map<int, FrequencyBin> bin_of;

    [[nodiscard]] FrequencyBin classify(std::size_t count) const;
};

/// count > 700 is frequent, count < 200 is rare, anything else common.
FrequencyBins bin_by_frequency(const std::map<int, std::size_t>& class_counts);

}  // namespace crisp
