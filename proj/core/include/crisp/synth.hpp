#pragma once

// Deterministic desk-scale multi-view corpora.
//
// Each observation gets a class from a power-law prior and a location drawn
// around one of several spatial clusters. Its latent factor is
//
//   f = class_factor[class] + location_weight * location_factor(lat, lon)
//
// where location_factor is a fixed random Fourier feature map of the local
// east/north offset, so observations a few hundred meters apart share most of
// their location signal. Every view (ground or aerial) is
//
//   view = shared_signal * [f, 0...] + (1 - shared_signal) * private + noise
//
// with a per-view private factor and per-view Gaussian noise; f occupies the
// first latent_dim "factor channels" of both view spaces.

#include "crisp/augment.hpp"
#include "crisp/common.hpp"
#include "crisp/split.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace crisp {

struct SynthConfig {
    int n_classes = 50;
    int n_observations = 5000;
    double tail_exponent = 1.1;
    int view_dim_gl = 32;
    int view_dim_a = 32;
    double shared_signal = 0.9;
    double cluster_scale_m = 400.0;
    double mean_views_per_obs = 2.0;
    double noise_sigma = 1.0;
    std::uint64_t seed = 0;

    int latent_dim = 8;
    int n_clusters = 300;
    double location_weight = 0.5;
    double location_length_scale_m = 500.0;
    double private_scale = 1.0;
    double origin_lat = 36.0;
    double origin_lon = -120.0;
    double window_deg = 1.0;
    double group_cell_deg = 0.25;
    double research_grade_fraction = 0.9;
    double species_level_fraction = 0.95;
    int aerial_raster_size = 12;
    double raster_texture_sigma = 0.5;

    /// Throws InvalidConfigError.
    void validate() const;
};

/// Stored generating factors; every view is recomputable from them bitwise.
struct SynthFactors {
    Matrix class_factors;             // n_classes x latent_dim
    Matrix location_factors;          // n_obs x latent_dim
    std::vector<Matrix> gl_private;   // per obs: n_views x view_dim_gl
    std::vector<Matrix> gl_noise;
    Matrix a_private;                 // n_obs x view_dim_a
    Matrix a_noise;
};

struct SynthCorpus {
    SynthConfig config;
    std::vector<ObservationRecord> observations;
    /// Class of every observation, including those whose label is withheld.
    std::vector<int> true_class;
    /// Per observation: one row per ground-level view.
    std::vector<Matrix> ground_views;
    /// One row per observation.
    Matrix aerial_views;
    SynthFactors factors;

    [[nodiscard]] std::size_t size() const { return observations.size(); }
    [[nodiscard]] std::size_t index_of(const std::string& obs_id) const;
};

/// Fully determined by `config` (including its seed).
SynthCorpus generate(const SynthConfig& config);

/// Recomputes a ground view from the stored factors.
Vector rederive_ground_view(const SynthCorpus& corpus, std::size_t obs, std::size_t view);
Vector rederive_aerial_view(const SynthCorpus& corpus, std::size_t obs);

/// aerial_raster_size^2 pixels per channel: the aerial view plus fixed
/// per-pixel texture, regenerated on demand from (seed, obs index).
Raster aerial_raster(const SynthCorpus& corpus, std::size_t obs);

struct CorpusStats {
    std::size_t observations = 0;
    std::size_t images = 0;
    std::size_t classes = 0;
    double mean_views_per_obs = 0.0;
    std::map<int, std::size_t> class_histogram;   // true class -> observations
    std::map<int, std::size_t> views_histogram;   // views -> observations
    double min_lat = 0.0, max_lat = 0.0, min_lon = 0.0, max_lon = 0.0;
};

CorpusStats corpus_stats(const SynthCorpus& corpus);

}  // namespace crisp
