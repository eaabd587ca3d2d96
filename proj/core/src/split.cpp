#include "crisp/split.hpp"

#include "crisp/errors.hpp"

#include <algorithm>
#include <numbers>
#include <unordered_map>
#include <unordered_set>

namespace crisp {

std::string_view to_string(Split s) {
    switch (s) {
        case Split::kTrain: return "train";
        case Split::kVal: return "val";
        case Split::kTest: return "test";
    }
    return "train";
}

Split parse_split(std::string_view s) {
    if (s == "train") return Split::kTrain;
    if (s == "val") return Split::kVal;
    if (s == "test") return Split::kTest;
    throw FormatError("unknown split '" + std::string(s) + "'");
}

std::string_view to_string(FrequencyBin b) {
    switch (b) {
        case FrequencyBin::kFrequent: return "frequent";
        case FrequencyBin::kCommon: return "common";
        case FrequencyBin::kRare: return "rare";
    }
    return "common";
}

void ObservationRecord::validate() const {
    crisp::validate(location());
    if (species_level && !class_id) throw Error("observation " + obs_id + ": species-level record without class");
    if (n_ground_views < 1) throw Error("observation " + obs_id + ": needs at least one ground view");
}

std::vector<std::string> SplitManifest::ids_in(Split s) const {
    std::vector<std::string> ids;
    for (const auto& [id, split] : obs_assignment) {
        if (split == s) ids.push_back(id);
    }
    return ids;
}

BlockAssignment assign_blocks(const std::set<BlockId>& blocks, BlockFractions fractions, Rng& rng) {
    if (blocks.empty()) throw EmptyBlockSetError("no blocks to assign");
    if (fractions.test < 0.0 || fractions.val < 0.0 || !(fractions.test + fractions.val < 1.0)) {
        throw ConfigError("block fractions must be non-negative and sum to less than 1");
    }
    std::vector<BlockId> order(blocks.begin(), blocks.end());
    std::shuffle(order.begin(), order.end(), rng);

    const std::size_t n = order.size();
    const std::size_t n_test = std::min(n, round_half_up(fractions.test * static_cast<double>(n)));
    const std::size_t n_val = std::min(n - n_test, round_half_up(fractions.val * static_cast<double>(n)));

    BlockAssignment out;
    for (std::size_t i = 0; i < n; ++i) {
        Split s = Split::kTrain;
        if (i < n_test) {
            s = Split::kTest;
        } else if (i < n_test + n_val) {
            s = Split::kVal;
        }
        out.emplace(order[i], s);
    }
    return out;
}

std::set<BlockId> blocks_of(const std::vector<ObservationRecord>& obs, double cell_deg) {
    std::set<BlockId> out;
    for (const auto& o : obs) out.insert(block_of(o.lat, o.lon, cell_deg));
    return out;
}

namespace {

/// Training locations sorted by latitude. Great-circle distance is at least
/// the meridian arc between the two latitudes, so only a latitude window
/// needs exact checking.
class ProximityIndex {
public:
    ProximityIndex(std::vector<GeoPoint> points, double radius_m)
        : points_(std::move(points)),
          radius_m_(radius_m),
          window_deg_(radius_m / (kEarthRadiusM * std::numbers::pi / 180.0) + 1e-9) {
        std::sort(points_.begin(), points_.end(),
                  [](const GeoPoint& p, const GeoPoint& q) { return p.lat < q.lat || (p.lat == q.lat && p.lon < q.lon); });
    }

    [[nodiscard]] bool any_within(const GeoPoint& p) const {
        auto it = std::lower_bound(points_.begin(), points_.end(), p.lat - window_deg_,
                                   [](const GeoPoint& q, double lat) { return q.lat < lat; });
        for (; it != points_.end() && it->lat <= p.lat + window_deg_; ++it) {
            if (haversine_m(p, *it) <= radius_m_) return true;
        }
        return false;
    }

private:
    std::vector<GeoPoint> points_;
    double radius_m_;
    double window_deg_;
};

}  // namespace

SplitManifest build_split(const std::vector<ObservationRecord>& obs, const BlockAssignment& block_assignment,
                          const SplitOptions& options) {
    SplitManifest m;
    m.cell_deg = options.cell_deg;
    m.proximity_m = options.proximity_m;
    m.block_assignment = block_assignment;
    for (const auto& [block, split] : block_assignment) ++m.summary.blocks[std::string(to_string(split))];

    // (1) inherit block roles
    std::vector<Split> role(obs.size());
    std::unordered_set<std::string> ids;
    std::vector<GeoPoint> train_points;
    for (std::size_t i = 0; i < obs.size(); ++i) {
        obs[i].validate();
        if (!ids.insert(obs[i].obs_id).second) throw Error("duplicate observation id '" + obs[i].obs_id + "'");
        const BlockId b = block_of(obs[i].lat, obs[i].lon, options.cell_deg);
        const auto it = block_assignment.find(b);
        if (it == block_assignment.end()) {
            throw UncoveredBlockError("observation " + obs[i].obs_id + " lies in an unassigned block (" +
                                      std::to_string(b.lat_index) + ", " + std::to_string(b.lon_index) + ")");
        }
        role[i] = it->second;
        ++m.summary.observations_before_filtering[std::string(to_string(role[i]))];
        if (role[i] == Split::kTrain) train_points.push_back(obs[i].location());
    }

    // (2) proximity filter against training observations, (3) label quality
    const ProximityIndex near_train(std::move(train_points), options.proximity_m);
    std::vector<bool> keep(obs.size(), true);
    std::vector<bool> labeled(obs.size(), false);
    for (std::size_t i = 0; i < obs.size(); ++i) {
        if (role[i] == Split::kTrain) {
            labeled[i] = obs[i].classification_quality();
            continue;
        }
        if (near_train.any_within(obs[i].location())) {
            keep[i] = false;
            ++m.summary.dropped_by_proximity;
        } else if (!obs[i].classification_quality()) {
            keep[i] = false;
            ++m.summary.dropped_by_quality;
        }
    }

    // (4) classes present in labeled-train, val and test
    std::set<int> per_split[3];
    for (std::size_t i = 0; i < obs.size(); ++i) {
        if (role[i] == Split::kTrain ? labeled[i] : keep[i]) per_split[static_cast<int>(role[i])].insert(*obs[i].class_id);
    }
    for (int c : per_split[0]) {
        if (per_split[1].count(c) && per_split[2].count(c)) m.class_universe.insert(c);
    }

    for (std::size_t i = 0; i < obs.size(); ++i) {
        const bool in_universe = obs[i].class_id && m.class_universe.count(*obs[i].class_id);
        if (role[i] == Split::kTrain) {
            m.obs_assignment.emplace(obs[i].obs_id, Split::kTrain);
            if (labeled[i] && in_universe) m.labeled_train.insert(obs[i].obs_id);
            continue;
        }
        if (!keep[i]) continue;
        if (!in_universe) {
            ++m.summary.dropped_by_class;
            continue;
        }
        m.obs_assignment.emplace(obs[i].obs_id, role[i]);
    }

    for (const auto& [id, split] : m.obs_assignment) ++m.summary.observations[std::string(to_string(split))];
    m.summary.labeled_train = m.labeled_train.size();
    return m;
}

std::set<std::string> sample_lambda_subset(const std::set<std::string>& labeled_train, double lambda, Rng& rng) {
    if (labeled_train.empty()) throw EmptySetError("cannot sample from an empty labeled set");
    if (!(lambda > 0.0 && lambda <= 1.0)) throw ConfigError("lambda must lie in (0, 1]");
    std::vector<std::string> order(labeled_train.begin(), labeled_train.end());
    const std::size_t take = std::min(order.size(), round_half_up(lambda * static_cast<double>(order.size())));
    std::shuffle(order.begin(), order.end(), rng);
    return {order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take)};
}

void add_lambda_subsets(SplitManifest& manifest, const std::vector<double>& lambdas, Rng& rng) {
    for (double lambda : lambdas) manifest.lambda_subsets[lambda] = sample_lambda_subset(manifest.labeled_train, lambda, rng);
}

std::set<int> lambda_class_universe(const SplitManifest& manifest, double lambda,
                                    const std::vector<ObservationRecord>& obs) {
    const auto it = manifest.lambda_subsets.find(lambda);
    if (it == manifest.lambda_subsets.end()) throw Error("manifest has no subset for lambda " + std::to_string(lambda));
    std::unordered_map<std::string, const ObservationRecord*> by_id;
    for (const auto& o : obs) by_id.emplace(o.obs_id, &o);

    std::set<int> in_subset;
    std::set<int> in_val;
    std::set<int> in_test;
    for (const auto& id : it->second) in_subset.insert(*by_id.at(id)->class_id);
    for (const auto& [id, split] : manifest.obs_assignment) {
        if (split == Split::kTrain) continue;
        (split == Split::kVal ? in_val : in_test).insert(*by_id.at(id)->class_id);
    }
    std::set<int> out;
    for (int c : in_subset) {
        if (in_val.count(c) && in_test.count(c)) out.insert(c);
    }
    return out;
}

FrequencyBin FrequencyBins::classify(std::size_t count) const {
    if (count > frequent_above) return FrequencyBin::kFrequent;
    if (count < rare_below) return FrequencyBin::kRare;
    return FrequencyBin::kCommon;
}

FrequencyBins bin_by_frequency(const std::map<int, std::size_t>& class_counts) {
    FrequencyBins bins;
    for (const auto& [cls, count] : class_counts) bins.bin_of.emplace(cls, bins.classify(count));
    return bins;
}

}  // namespace crisp
