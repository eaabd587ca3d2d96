#include "crisp/synth.hpp"

#include "crisp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace crisp {

namespace {

constexpr double kMetersPerDegree = kEarthRadiusM * std::numbers::pi / 180.0;

void require(bool ok, const char* what) {
    if (!ok) throw InvalidConfigError(std::string("synthetic config: ") + what);
}

Matrix gaussian(Eigen::Index rows, Eigen::Index cols, double sigma, Rng& rng) {
    if (sigma == 0.0) return Matrix::Zero(rows, cols);
    std::normal_distribution<double> normal(0.0, sigma);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
    }
    return m;
}

/// shared * [f, 0...] + (1 - shared) * private + noise, in this exact order.
Vector compose_view(double shared, const Eigen::Ref<const Vector>& f, const Eigen::Ref<const Vector>& priv,
                    const Eigen::Ref<const Vector>& noise) {
    Vector v(priv.size());
    for (Eigen::Index j = 0; j < v.size(); ++j) {
        const double signal = j < f.size() ? f(j) : 0.0;
        v(j) = shared * signal + (1.0 - shared) * priv(j) + noise(j);
    }
    return v;
}

Vector latent_of(const SynthCorpus& c, std::size_t obs) {
    const int cls = c.true_class[obs];
    return c.factors.class_factors.row(cls).transpose() +
           c.config.location_weight * c.factors.location_factors.row(static_cast<Eigen::Index>(obs)).transpose();
}

}  // namespace

void SynthConfig::validate() const {
    require(n_classes >= 1, "n_classes must be >= 1");
    require(n_observations >= 1, "n_observations must be >= 1");
    require(tail_exponent > 0.0 && std::isfinite(tail_exponent), "tail_exponent must be positive");
    require(view_dim_gl >= 1 && view_dim_a >= 1, "view dims must be >= 1");
    require(shared_signal >= 0.0 && shared_signal <= 1.0, "shared_signal must lie in [0, 1]");
    require(cluster_scale_m > 0.0, "cluster_scale_m must be positive");
    require(mean_views_per_obs >= 1.0, "mean_views_per_obs must be >= 1");
    require(noise_sigma > 0.0, "noise_sigma must be positive");
    require(latent_dim >= 1 && latent_dim <= std::min(view_dim_gl, view_dim_a),
            "latent_dim must be in [1, min(view dims)]");
    require(n_clusters >= 1, "n_clusters must be >= 1");
    require(location_weight >= 0.0, "location_weight must be non-negative");
    require(location_length_scale_m > 0.0, "location_length_scale_m must be positive");
    require(private_scale >= 0.0, "private_scale must be non-negative");
    require(window_deg > 0.0, "window_deg must be positive");
    require(origin_lat >= -90.0 && origin_lat + window_deg <= 90.0, "window latitude out of range");
    require(origin_lon >= -180.0 && origin_lon + window_deg <= 180.0, "window longitude out of range");
    require(group_cell_deg > 0.0, "group_cell_deg must be positive");
    require(research_grade_fraction >= 0.0 && research_grade_fraction <= 1.0, "research_grade_fraction in [0, 1]");
    require(species_level_fraction >= 0.0 && species_level_fraction <= 1.0, "species_level_fraction in [0, 1]");
    require(aerial_raster_size >= 1, "aerial_raster_size must be >= 1");
    require(raster_texture_sigma >= 0.0, "raster_texture_sigma must be non-negative");
}

std::size_t SynthCorpus::index_of(const std::string& obs_id) const {
    for (std::size_t i = 0; i < observations.size(); ++i) {
        if (observations[i].obs_id == obs_id) return i;
    }
    throw Error("unknown observation id '" + obs_id + "'");
}

SynthCorpus generate(const SynthConfig& config) {
    config.validate();
    Rng rng(config.seed);
    SynthCorpus c;
    c.config = config;
    const auto n = static_cast<std::size_t>(config.n_observations);
    const int latent = config.latent_dim;

    // Fixed factor tables drawn once.
    c.factors.class_factors = gaussian(config.n_classes, latent, 1.0, rng);
    const Matrix rff_freq = gaussian(latent, 2, 1.0 / config.location_length_scale_m, rng);
    Vector rff_phase(latent);
    {
        std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
        for (int d = 0; d < latent; ++d) rff_phase(d) = phase(rng);
    }
    std::vector<GeoPoint> centers(static_cast<std::size_t>(config.n_clusters));
    {
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (auto& p : centers) {
            p.lat = config.origin_lat + config.window_deg * unit(rng);
            p.lon = config.origin_lon + config.window_deg * unit(rng);
        }
    }

    std::vector<double> prior(static_cast<std::size_t>(config.n_classes));
    for (std::size_t k = 0; k < prior.size(); ++k) prior[k] = std::pow(static_cast<double>(k + 1), -config.tail_exponent);
    std::discrete_distribution<int> class_dist(prior.begin(), prior.end());
    std::uniform_int_distribution<int> cluster_dist(0, config.n_clusters - 1);
    std::normal_distribution<double> offset(0.0, config.cluster_scale_m);
    std::poisson_distribution<int> extra_views(config.mean_views_per_obs - 1.0);
    std::bernoulli_distribution research(config.research_grade_fraction);
    std::bernoulli_distribution species(config.species_level_fraction);

    const double mid_lat = config.origin_lat + config.window_deg / 2.0;
    const double m_per_deg_lon = kMetersPerDegree * std::cos(mid_lat * std::numbers::pi / 180.0);

    c.observations.resize(n);
    c.true_class.resize(n);
    c.factors.location_factors.resize(static_cast<Eigen::Index>(n), latent);
    for (std::size_t i = 0; i < n; ++i) {
        ObservationRecord& o = c.observations[i];
        o.obs_id = "obs" + std::to_string(i);
        c.true_class[i] = class_dist(rng);
        const GeoPoint& center = centers[static_cast<std::size_t>(cluster_dist(rng))];
        o.lat = std::clamp(center.lat + offset(rng) / kMetersPerDegree, -90.0, 90.0);
        o.lon = std::clamp(center.lon + offset(rng) / m_per_deg_lon, -180.0, 180.0);
        o.research_grade = research(rng);
        o.species_level = species(rng);
        if (o.species_level) o.class_id = c.true_class[i];
        const BlockId g = block_of(o.lat, o.lon, config.group_cell_deg);
        o.group_id = static_cast<int>(g.lat_index * 10000 + g.lon_index);
        o.n_ground_views = 1 + extra_views(rng);

        const double east = (o.lon - config.origin_lon) * m_per_deg_lon;
        const double north = (o.lat - config.origin_lat) * kMetersPerDegree;
        for (int d = 0; d < latent; ++d) {
            c.factors.location_factors(static_cast<Eigen::Index>(i), d) =
                std::sqrt(2.0) * std::cos(rff_freq(d, 0) * east + rff_freq(d, 1) * north + rff_phase(d));
        }
    }

    c.ground_views.resize(n);
    c.factors.gl_private.resize(n);
    c.factors.gl_noise.resize(n);
    c.factors.a_private = Matrix(static_cast<Eigen::Index>(n), config.view_dim_a);
    c.factors.a_noise = Matrix(static_cast<Eigen::Index>(n), config.view_dim_a);
    c.aerial_views = Matrix(static_cast<Eigen::Index>(n), config.view_dim_a);
    for (std::size_t i = 0; i < n; ++i) {
        const int views = c.observations[i].n_ground_views;
        c.factors.gl_private[i] = gaussian(views, config.view_dim_gl, config.private_scale, rng);
        c.factors.gl_noise[i] = gaussian(views, config.view_dim_gl, config.noise_sigma, rng);
        c.factors.a_private.row(static_cast<Eigen::Index>(i)) = gaussian(1, config.view_dim_a, config.private_scale, rng);
        c.factors.a_noise.row(static_cast<Eigen::Index>(i)) = gaussian(1, config.view_dim_a, config.noise_sigma, rng);

        c.ground_views[i].resize(views, config.view_dim_gl);
        for (int v = 0; v < views; ++v) c.ground_views[i].row(v) = rederive_ground_view(c, i, static_cast<std::size_t>(v));
        c.aerial_views.row(static_cast<Eigen::Index>(i)) = rederive_aerial_view(c, i);
    }
    return c;
}

Vector rederive_ground_view(const SynthCorpus& corpus, std::size_t obs, std::size_t view) {
    const auto v = static_cast<Eigen::Index>(view);
    return compose_view(corpus.config.shared_signal, latent_of(corpus, obs),
                        corpus.factors.gl_private[obs].row(v).transpose(), corpus.factors.gl_noise[obs].row(v).transpose());
}

Vector rederive_aerial_view(const SynthCorpus& corpus, std::size_t obs) {
    const auto i = static_cast<Eigen::Index>(obs);
    return compose_view(corpus.config.shared_signal, latent_of(corpus, obs),
                        corpus.factors.a_private.row(i).transpose(), corpus.factors.a_noise.row(i).transpose());
}

Raster aerial_raster(const SynthCorpus& corpus, std::size_t obs) {
    const int size = corpus.config.aerial_raster_size;
    const auto channels = static_cast<int>(corpus.aerial_views.cols());
    std::seed_seq seq{static_cast<std::uint32_t>(corpus.config.seed), static_cast<std::uint32_t>(corpus.config.seed >> 32),
                      static_cast<std::uint32_t>(obs), 0x5eedu};
    Rng rng(seq);
    std::normal_distribution<double> texture(0.0, corpus.config.raster_texture_sigma);
    Raster r(channels, size, size);
    for (int ch = 0; ch < channels; ++ch) {
        const double base = corpus.aerial_views(static_cast<Eigen::Index>(obs), ch);
        for (int y = 0; y < size; ++y) {
            for (int x = 0; x < size; ++x) {
                r.at(ch, y, x) = corpus.config.raster_texture_sigma > 0.0 ? base + texture(rng) : base;
            }
        }
    }
    return r;
}

CorpusStats corpus_stats(const SynthCorpus& corpus) {
    if (corpus.observations.empty()) throw EmptySetError("corpus_stats: empty corpus");
    CorpusStats s;
    s.observations = corpus.observations.size();
    s.min_lat = s.max_lat = corpus.observations.front().lat;
    s.min_lon = s.max_lon = corpus.observations.front().lon;
    for (std::size_t i = 0; i < corpus.observations.size(); ++i) {
        const auto& o = corpus.observations[i];
        const int cls = i < corpus.true_class.size() ? corpus.true_class[i] : o.class_id.value_or(-1);
        ++s.class_histogram[cls];
        ++s.views_histogram[o.n_ground_views];
        s.images += static_cast<std::size_t>(o.n_ground_views);
        s.min_lat = std::min(s.min_lat, o.lat);
        s.max_lat = std::max(s.max_lat, o.lat);
        s.min_lon = std::min(s.min_lon, o.lon);
        s.max_lon = std::max(s.max_lon, o.lon);
    }
    s.classes = s.class_histogram.size();
    s.mean_views_per_obs = static_cast<double>(s.images) / static_cast<double>(s.observations);
    return s;
}

}  // namespace crisp
