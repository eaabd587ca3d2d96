#include "crisp/augment.hpp"
#include "crisp/errors.hpp"
#include "crisp/synth.hpp"

#include "generators.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

using namespace crisp;

namespace {

Raster random_raster(Rng& rng, int c, int h, int w) {
    Raster r(c, h, w);
    for (int ch = 0; ch < c; ++ch) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) r.at(ch, y, x) = gen::uniform(rng, -1, 1);
        }
    }
    return r;
}

double window_sum(const Raster& r, int y0, int x0, int size) {
    double s = 0.0;
    for (int c = 0; c < r.channels(); ++c) {
        for (int y = y0; y < y0 + size; ++y) {
            for (int x = x0; x < x0 + size; ++x) s += r.at(c, y, x);
        }
    }
    return s;
}

}  // namespace

TEST(Augment, CenteredIdentityIsSubWindow) {
    Rng rng(0);
    const Raster img = random_raster(rng, 3, 11, 14);
    const Raster out = apply_augmentation(img, centered_identity(11, 14, 6));
    ASSERT_EQ(out.height(), 6);
    ASSERT_EQ(out.width(), 6);
    for (int c = 0; c < 3; ++c) {
        for (int y = 0; y < 6; ++y) {
            for (int x = 0; x < 6; ++x) EXPECT_EQ(out.at(c, y, x), img.at(c, y + 2, x + 4));
        }
    }
}

TEST(Augment, HalfTurnIsAnInvolution) {
    Rng rng(1);
    const Raster img = random_raster(rng, 2, 9, 9);
    AugmentDraw d = centered_identity(9, 9, 5);
    d.quarter_turns = 2;
    const Raster once = apply_augmentation(img, d);
    AugmentDraw full = centered_identity(5, 5, 5);
    full.quarter_turns = 2;
    const Raster twice = apply_augmentation(once, full);
    EXPECT_EQ(twice, apply_augmentation(img, centered_identity(9, 9, 5)));
    EXPECT_NE(once, twice);
}

TEST(Augment, QuarterTurnAndFlipGeometry) {
    Raster img(1, 2, 2, std::vector<double>{1, 2, 3, 4});  // [[1,2],[3,4]]
    AugmentDraw d = centered_identity(2, 2, 2);
    d.quarter_turns = 1;  // counter-clockwise: [[2,4],[1,3]]
    EXPECT_EQ(apply_augmentation(img, d).data(), (std::vector<double>{2, 4, 1, 3}));
    d = centered_identity(2, 2, 2);
    d.flip_horizontal = true;
    EXPECT_EQ(apply_augmentation(img, d).data(), (std::vector<double>{2, 1, 4, 3}));
    d = centered_identity(2, 2, 2);
    d.flip_vertical = true;
    EXPECT_EQ(apply_augmentation(img, d).data(), (std::vector<double>{3, 4, 1, 2}));
}

TEST(Augment, PixelSumEqualsCropWindow) {
    Rng rng(2);
    for (int t = 0; t < 200; ++t) {
        const int h = gen::uniform_int(rng, 4, 16);
        const int w = gen::uniform_int(rng, 4, 16);
        const int crop = gen::uniform_int(rng, 1, std::min(h, w));
        const Raster img = random_raster(rng, 2, h, w);
        const AugmentDraw d = draw_augmentation(h, w, crop, rng);
        const Raster out = apply_augmentation(img, d);
        EXPECT_NEAR(out.sum(), window_sum(img, d.crop_y, d.crop_x, crop), 1e-12);
        EXPECT_GE(d.crop_y, 0);
        EXPECT_LE(d.crop_y + crop, h);
        EXPECT_LE(d.crop_x + crop, w);
    }
}

TEST(Augment, DeterministicAndRoughlyUniform) {
    Rng a(9);
    Rng b(9);
    const Raster img = random_raster(a, 1, 10, 10);
    random_raster(b, 1, 10, 10);
    EXPECT_EQ(augment_aerial(img, 4, a), augment_aerial(img, 4, b));

    Rng rng(3);
    int hflips = 0;
    int vflips = 0;
    std::array<int, 4> turns{};
    const int n = 8000;
    for (int t = 0; t < n; ++t) {
        const AugmentDraw d = draw_augmentation(10, 10, 4, rng);
        hflips += d.flip_horizontal;
        vflips += d.flip_vertical;
        ++turns[static_cast<std::size_t>(d.quarter_turns)];
    }
    EXPECT_NEAR(hflips / double(n), 0.5, 0.03);
    EXPECT_NEAR(vflips / double(n), 0.5, 0.03);
    for (int c : turns) EXPECT_NEAR(c / double(n), 0.25, 0.03);
}

TEST(Augment, CropLargerThanImage) {
    Rng rng(0);
    EXPECT_THROW(draw_augmentation(5, 8, 6, rng), CropLargerThanImageError);
    EXPECT_THROW(augment_aerial(Raster(1, 4, 4), 5, rng), CropLargerThanImageError);
}

// ---------------------------------------------------------------------------

namespace {

SynthConfig small_config(std::uint64_t seed) {
    SynthConfig c;
    c.n_observations = 400;
    c.n_classes = 10;
    c.seed = seed;
    return c;
}

}  // namespace

TEST(Synth, DeterministicUnderSeed) {
    const SynthCorpus x = generate(small_config(7));
    const SynthCorpus y = generate(small_config(7));
    EXPECT_EQ(x.observations, y.observations);
    EXPECT_EQ(x.true_class, y.true_class);
    EXPECT_TRUE(x.aerial_views == y.aerial_views);
    ASSERT_EQ(x.ground_views.size(), y.ground_views.size());
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_TRUE(x.ground_views[i] == y.ground_views[i]);
    const SynthCorpus z = generate(small_config(8));
    EXPECT_FALSE(x.aerial_views == z.aerial_views);
}

TEST(Synth, ViewsRederiveBitwise) {
    const SynthCorpus c = generate(small_config(3));
    for (std::size_t i = 0; i < c.size(); ++i) {
        EXPECT_TRUE(rederive_aerial_view(c, i) == c.aerial_views.row(static_cast<Eigen::Index>(i)).transpose());
        for (Eigen::Index v = 0; v < c.ground_views[i].rows(); ++v) {
            EXPECT_TRUE(rederive_ground_view(c, i, static_cast<std::size_t>(v)) == c.ground_views[i].row(v).transpose());
        }
    }
}

TEST(Synth, StructureInvariants) {
    const SynthCorpus c = generate(small_config(4));
    for (std::size_t i = 0; i < c.size(); ++i) {
        const auto& o = c.observations[i];
        EXPECT_NO_THROW(o.validate());
        EXPECT_GE(o.n_ground_views, 1);
        EXPECT_EQ(c.ground_views[i].rows(), o.n_ground_views);
        if (o.class_id) EXPECT_EQ(*o.class_id, c.true_class[i]);
        EXPECT_GE(o.lat, 36.0 - 0.05);
        EXPECT_LE(o.lat, 37.0 + 0.05);
    }
    EXPECT_EQ(c.aerial_views.rows(), static_cast<Eigen::Index>(c.size()));
}

TEST(Synth, IndependentViewsWithoutSharedSignal) {
    SynthConfig cfg;
    cfg.n_observations = 10'000;
    cfg.shared_signal = 0.0;
    const SynthCorpus c = generate(cfg);
    for (int d = 0; d < cfg.latent_dim; ++d) {
        double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
        const double n = static_cast<double>(c.size());
        for (std::size_t i = 0; i < c.size(); ++i) {
            const double x = c.ground_views[i](0, d);
            const double y = c.aerial_views(static_cast<Eigen::Index>(i), d);
            sx += x;
            sy += y;
            sxx += x * x;
            syy += y * y;
            sxy += x * y;
        }
        const double rho = (sxy / n - sx * sy / (n * n)) /
                           std::sqrt((sxx / n - sx * sx / (n * n)) * (syy / n - sy * sy / (n * n)));
        EXPECT_LT(std::abs(rho), 0.05) << "channel " << d;
    }
}

TEST(Synth, LongTail) {
    SynthConfig cfg;
    cfg.tail_exponent = 1.1;
    cfg.n_classes = 50;
    cfg.n_observations = 5000;
    const CorpusStats s = corpus_stats(generate(cfg));
    const std::size_t head = s.class_histogram.count(0) ? s.class_histogram.at(0) : 0;
    const std::size_t tail = s.class_histogram.count(49) ? s.class_histogram.at(49) : 0;
    EXPECT_GE(head, 20 * tail);
    EXPECT_GT(head, 0u);
}

TEST(Synth, PairedViewsMostSimilarWithPureSharedSignal) {
    SynthConfig cfg = small_config(5);
    cfg.shared_signal = 1.0;
    cfg.noise_sigma = 1e-12;
    const SynthCorpus c = generate(cfg);
    Matrix gl(static_cast<Eigen::Index>(c.size()), cfg.view_dim_gl);
    for (std::size_t i = 0; i < c.size(); ++i) gl.row(static_cast<Eigen::Index>(i)) = c.ground_views[i].row(0);
    const Matrix sim = oracle::cosine_matrix(gl, c.aerial_views);
    for (Eigen::Index i = 0; i < sim.rows(); ++i) {
        for (Eigen::Index k = 0; k < sim.cols(); ++k) {
            if (k != i) EXPECT_GT(sim(i, i) - sim(i, k), 0.0);
        }
    }
}

TEST(Synth, InvalidConfig) {
    SynthConfig cfg;
    cfg.tail_exponent = -1.0;
    EXPECT_THROW(generate(cfg), InvalidConfigError);
    cfg = SynthConfig{};
    cfg.shared_signal = 1.5;
    EXPECT_THROW(generate(cfg), InvalidConfigError);
    cfg = SynthConfig{};
    cfg.n_observations = 0;
    EXPECT_THROW(generate(cfg), ConfigError);
}

TEST(CorpusStats, HandExample) {
    SynthCorpus c;
    for (int v : {2, 1, 3}) {
        ObservationRecord o;
        o.obs_id = "o" + std::to_string(v);
        o.n_ground_views = v;
        o.lat = 10.0 + v;
        o.lon = 20.0 - v;
        c.observations.push_back(o);
        c.true_class.push_back(v % 2);
    }
    const CorpusStats s = corpus_stats(c);
    EXPECT_EQ(s.images, 6u);
    EXPECT_NEAR(s.mean_views_per_obs, 2.0, 1e-12);
    EXPECT_EQ(s.observations, 3u);
    EXPECT_EQ(s.classes, 2u);
    EXPECT_EQ(s.min_lat, 11.0);
    EXPECT_EQ(s.max_lon, 19.0);
}

TEST(CorpusStats, RecountOracle) {
    const SynthCorpus c = generate(small_config(6));
    const CorpusStats s = corpus_stats(c);
    std::size_t images = 0;
    std::map<int, std::size_t> classes;
    std::map<int, std::size_t> views;
    for (std::size_t i = 0; i < c.size(); ++i) {
        images += static_cast<std::size_t>(c.ground_views[i].rows());
        ++classes[c.true_class[i]];
        ++views[static_cast<int>(c.ground_views[i].rows())];
    }
    EXPECT_EQ(s.images, images);
    EXPECT_EQ(s.class_histogram, classes);
    EXPECT_EQ(s.views_histogram, views);
    std::size_t total = 0;
    for (const auto& [_, n] : s.class_histogram) total += n;
    EXPECT_EQ(total, c.size());
    EXPECT_NEAR(s.mean_views_per_obs, double(images) / double(c.size()), 1e-9);
}
