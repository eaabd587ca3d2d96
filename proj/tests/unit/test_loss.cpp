#include "crisp/errors.hpp"
#include "crisp/loss.hpp"

#include "generators.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace crisp;

namespace {

std::vector<std::vector<bool>> to_bool(const Mask& m) {
    std::vector<std::vector<bool>> out(static_cast<std::size_t>(m.rows()), std::vector<bool>(static_cast<std::size_t>(m.cols())));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index k = 0; k < m.cols(); ++k) out[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] = m(i, k) != 0;
    }
    return out;
}

// Applies row permutations p (ground) and q (aerial): new ground i is old
// ground p[i], new aerial k is old aerial q[k].
PairedBatch permuted(const PairedBatch& b, const std::vector<std::size_t>& p, const std::vector<std::size_t>& q) {
    Matrix gl(b.gl.size(), b.gl.dim());
    Matrix a(b.a.size(), b.a.dim());
    std::vector<std::size_t> q_inv(q.size());
    for (std::size_t k = 0; k < q.size(); ++k) {
        a.row(static_cast<Eigen::Index>(k)) = b.a.vectors().row(static_cast<Eigen::Index>(q[k]));
        q_inv[q[k]] = k;
    }
    PairedBatch out;
    out.pair_index.resize(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        gl.row(static_cast<Eigen::Index>(i)) = b.gl.vectors().row(static_cast<Eigen::Index>(p[i]));
        out.pair_index[i] = q_inv[b.pair_index[p[i]]];
    }
    out.gl = EmbeddingBatch(gl);
    out.a = EmbeddingBatch(a);
    if (b.coords) {
        std::vector<GeoPoint> c;
        for (std::size_t k : q) c.push_back((*b.coords)[k]);
        out.coords = c;
    }
    return out;
}

const Temperature kTau = Temperature::from_log_inverse(kDefaultLogInverseTemperature);

}  // namespace

TEST(Temperature, LogInverseReading) {
    EXPECT_NEAR(kTau.tau(), std::exp(-2.659), 1e-15);
    EXPECT_NEAR(kTau.tau(), 0.07, 5e-4);
    EXPECT_THROW(Temperature::from_tau(0.0), NonPositiveTemperatureError);
    EXPECT_THROW(Temperature::from_tau(-1.0), NonPositiveTemperatureError);
}

TEST(StandardLoss, SingleItemIsZero) {
    Rng rng(0);
    for (int t = 0; t < 10; ++t) {
        const PairedBatch b = gen::bijective_batch(rng, 1, 5);
        const LossResult r = standard_crisp_loss(b, kTau);
        EXPECT_EQ(r.loss, 0.0);
        EXPECT_EQ(r.grad_gl.cwiseAbs().maxCoeff(), 0.0);
    }
}

TEST(StandardLoss, IdentityPairAtUnitTemperature) {
    PairedBatch b{EmbeddingBatch(Matrix::Identity(2, 2)), EmbeddingBatch(Matrix::Identity(2, 2)), {0, 1}, {}};
    const LossResult r = standard_crisp_loss(b, Temperature::from_tau(1.0));
    const double e = std::exp(1.0);
    EXPECT_NEAR(r.loss, -std::log(e / (e + 1.0)), 1e-15);
    EXPECT_NEAR(r.parts.l_gl, r.parts.l_a, 1e-15);
}

TEST(StandardLoss, MatchesReferenceFormulas) {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        Rng rng(seed);
        const int n = seed == 0 ? 8 : gen::uniform_int(rng, 1, 8);
        const PairedBatch b = gen::bijective_batch(rng, n, seed == 0 ? 16 : gen::uniform_int(rng, 1, 16));
        const LossResult r = standard_crisp_loss(b, kTau);
        const Matrix& g = b.gl.vectors();
        const Matrix& a = b.a.vectors();
        EXPECT_NEAR(r.parts.l_gl, oracle::ground_to_aerial(g, a, b.pair_index, kTau.tau()), 1e-12);
        EXPECT_NEAR(r.parts.l_a, oracle::aerial_to_ground(g, a, b.pair_index, kTau.tau()), 1e-12);
        EXPECT_NEAR(r.loss, oracle::symmetric(g, a, b.pair_index, kTau.tau()), 1e-12);
        EXPECT_NEAR(r.loss, 0.5 * (r.parts.l_gl + r.parts.l_a), 1e-12);
    }
}

TEST(StandardLoss, RejectsManyToOne) {
    Rng rng(1);
    PairedBatch b = gen::clustered_batch(rng, 5, 3, 4, 2);
    EXPECT_THROW(standard_crisp_loss(b, kTau), NonBijectivePairingError);
}

TEST(StandardLoss, PermutationInvariant) {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        Rng rng(seed);
        const int n = gen::uniform_int(rng, 2, 10);
        const PairedBatch b = gen::bijective_batch(rng, n, 6);
        const PairedBatch c = permuted(b, gen::permutation(rng, n), gen::permutation(rng, n));
        EXPECT_NEAR(standard_crisp_loss(b, kTau).loss, standard_crisp_loss(c, kTau).loss, 1e-12);
        EXPECT_NEAR(parameterized_crisp_loss(b, kTau, {0.7}).loss, parameterized_crisp_loss(c, kTau, {0.7}).loss, 1e-12);
    }
}

TEST(StandardLoss, SwapSymmetry) {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        Rng rng(seed);
        const int n = gen::uniform_int(rng, 2, 10);
        const PairedBatch b = gen::bijective_batch(rng, n, 6);
        PairedBatch s;
        s.gl = b.a;
        s.a = b.gl;
        s.pair_index.resize(b.pair_index.size());
        for (std::size_t i = 0; i < b.pair_index.size(); ++i) s.pair_index[b.pair_index[i]] = i;
        const LossResult x = standard_crisp_loss(b, kTau);
        const LossResult y = standard_crisp_loss(s, kTau);
        EXPECT_NEAR(x.loss, y.loss, 1e-12);
        EXPECT_NEAR(x.parts.l_gl, y.parts.l_a, 1e-12);
    }
}

TEST(ParameterizedLoss, ZeroWeightIsBitwiseStandard) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng(seed);
        const PairedBatch b = gen::bijective_batch(rng, gen::uniform_int(rng, 1, 16), gen::uniform_int(rng, 4, 32));
        const LossResult s = standard_crisp_loss(b, kTau);
        const LossResult p = parameterized_crisp_loss(b, kTau, {0.0});
        EXPECT_EQ(s.loss, p.loss);
        EXPECT_TRUE(s.grad_gl == p.grad_gl);
        EXPECT_TRUE(s.grad_a == p.grad_a);
    }
}

TEST(ParameterizedLoss, SaturatedWeightAndMixFormula) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed);
        const PairedBatch b = gen::bijective_batch(rng, gen::uniform_int(rng, 2, 8), 8);
        const LossResult hi = parameterized_crisp_loss(b, kTau, {50.0});
        EXPECT_NEAR(hi.loss, hi.parts.l_gl, 1e-12);
        const double w = gen::uniform(rng, -3, 3);
        EXPECT_NEAR(parameterized_crisp_loss(b, kTau, {w}).loss,
                    oracle::mixed(b.gl.vectors(), b.a.vectors(), b.pair_index, kTau.tau(), w), 1e-12);
    }
}

TEST(ParameterizedLoss, WeightGradientFiniteDifference) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed);
        const PairedBatch b = gen::bijective_batch(rng, 6, 8);
        const double w = 0.3;
        const double h = 1e-6;
        const double fd = (parameterized_crisp_loss(b, kTau, {w + h}).loss -
                           parameterized_crisp_loss(b, kTau, {w - h}).loss) / (2 * h);
        EXPECT_NEAR(*parameterized_crisp_loss(b, kTau, {w}).grad_w, fd, 1e-7);
    }
}

TEST(PositiveMask, Examples) {
    const std::vector<GeoPoint> one{{36.0, -120.0}};
    EXPECT_EQ(build_positive_mask(one, {0}, 250.0)(0, 0), 1);

    const double dlat_100 = 100.0 / 111'195.0;
    const std::vector<GeoPoint> near{{36.0, -120.0}, {36.0 + dlat_100, -120.0}};
    EXPECT_EQ(build_positive_mask(near, {0, 1}, 250.0).cast<int>().sum(), 4);

    const double dlat_300 = 300.0 / 111'195.0;
    const std::vector<GeoPoint> far{{36.0, -120.0}, {36.0 + dlat_300, -120.0}};
    const Mask m = build_positive_mask(far, {0, 1}, 250.0);
    EXPECT_EQ(m(0, 0), 1);
    EXPECT_EQ(m(1, 1), 1);
    EXPECT_EQ(m(0, 1), 0);
    EXPECT_EQ(m(1, 0), 0);

    EXPECT_THROW(build_positive_mask({}, {0}, 250.0), MissingCoordinatesError);
}

TEST(PositiveMask, MatchesPairwiseOracle) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed);
        const auto coords = gen::box_coords(rng, 20, 1000.0);
        std::vector<std::size_t> pair = gen::permutation(rng, 20);
        for (int extra = 0; extra < 5; ++extra) pair.push_back(static_cast<std::size_t>(gen::uniform_int(rng, 0, 19)));
        const Mask m = build_positive_mask(coords, pair, 250.0);
        EXPECT_EQ(to_bool(m), oracle::positive_mask(coords, pair, 250.0));
        for (Eigen::Index i = 0; i < m.rows(); ++i) EXPECT_GE(m.row(i).cast<int>().sum(), 1);
        for (Eigen::Index k = 0; k < m.cols(); ++k) EXPECT_GE(m.col(k).cast<int>().sum(), 1);
    }
}

TEST(ManyToOneLoss, RequiresCoordinates) {
    Rng rng(2);
    const PairedBatch b = gen::bijective_batch(rng, 3, 4);
    EXPECT_THROW(many_to_one_crisp_loss(b, kTau), MissingCoordinatesError);
}

TEST(ManyToOneLoss, NoColocationEqualsStandard) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng(seed);
        const int n = gen::uniform_int(rng, 1, 16);
        PairedBatch b = gen::bijective_batch(rng, n, gen::uniform_int(rng, 4, 32));
        b.coords = gen::spread_coords(rng, static_cast<std::size_t>(n));
        const LossResult s = standard_crisp_loss(b, kTau);
        const LossResult m = many_to_one_crisp_loss(b, kTau);
        EXPECT_NEAR(m.loss, s.loss, 1e-12);
        EXPECT_LE((m.grad_gl - s.grad_gl).cwiseAbs().maxCoeff(), 1e-12);
        // radius 0: only exact duplicates would link
        EXPECT_NEAR(many_to_one_crisp_loss(b, kTau, ManyToOneOptions{0.0, false}).loss, s.loss, 1e-12);
    }
}

TEST(ManyToOneLoss, AllColocatedIdenticalEmbeddings) {
    for (int n_gl : {2, 3, 5}) {
        for (int n_a = 1; n_a <= n_gl; ++n_a) {
            Rng rng(static_cast<std::uint64_t>(n_gl * 10 + n_a));
            const Matrix row = gen::gaussian(rng, 1, 4);
            PairedBatch b;
            b.gl = EmbeddingBatch(Matrix(row.replicate(n_gl, 1)));
            b.a = EmbeddingBatch(Matrix(row.replicate(n_a, 1)));
            for (int i = 0; i < n_gl; ++i) b.pair_index.push_back(static_cast<std::size_t>(i % n_a));
            b.coords = std::vector<GeoPoint>(static_cast<std::size_t>(n_a), GeoPoint{36.0, -120.0});
            const LossResult r = many_to_one_crisp_loss(b, kTau);
            // every link is positive: D = n_gl * n_a copies of one term
            const double d = static_cast<double>(n_gl * n_a);
            EXPECT_NEAR(r.parts.l_gl, std::log(d), 1e-12);
            EXPECT_NEAR(r.parts.l_a, std::log(d), 1e-12);
            const auto mask = std::vector<std::vector<bool>>(n_gl, std::vector<bool>(n_a, true));
            EXPECT_NEAR(r.loss, oracle::m2o_symmetric(b.gl.vectors(), b.a.vectors(), mask, kTau.tau()), 1e-12);
        }
    }
}

TEST(ManyToOneLoss, MatchesMultiPositiveReference) {
    for (std::uint64_t seed = 0; seed < 60; ++seed) {
        Rng rng(seed);
        const int n_gl = seed == 0 ? 6 : gen::uniform_int(rng, 1, 8);
        const int n_a = gen::uniform_int(rng, 1, n_gl);
        const PairedBatch b = gen::clustered_batch(rng, n_gl, n_a, gen::uniform_int(rng, 2, 12), 2);
        const auto mask = oracle::positive_mask(*b.coords, b.pair_index, 250.0);
        for (bool dedupe : {false, true}) {
            const LossResult r = many_to_one_crisp_loss(b, kTau, ManyToOneOptions{250.0, dedupe});
            const Matrix& g = b.gl.vectors();
            const Matrix& a = b.a.vectors();
            EXPECT_NEAR(r.parts.l_gl, oracle::m2o_ground_to_aerial(g, a, mask, kTau.tau(), dedupe), 1e-12);
            EXPECT_NEAR(r.parts.l_a, oracle::m2o_aerial_to_ground(g, a, mask, kTau.tau(), dedupe), 1e-12);
            EXPECT_NEAR(r.loss, 0.5 * (r.parts.l_gl + r.parts.l_a), 1e-12);
            EXPECT_GE(r.loss, 0.0);
        }
    }
}

TEST(ManyToOneLoss, PermutationInvariant) {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        Rng rng(seed);
        const int n_gl = gen::uniform_int(rng, 2, 10);
        const int n_a = gen::uniform_int(rng, 1, n_gl);
        const PairedBatch b = gen::clustered_batch(rng, n_gl, n_a, 5, 2);
        const PairedBatch c = permuted(b, gen::permutation(rng, static_cast<std::size_t>(n_gl)),
                                       gen::permutation(rng, static_cast<std::size_t>(n_a)));
        EXPECT_NEAR(many_to_one_crisp_loss(b, kTau).loss, many_to_one_crisp_loss(c, kTau).loss, 1e-12);
    }
}

TEST(Losses, NonNegative) {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        Rng rng(seed);
        const int n = gen::uniform_int(rng, 1, 12);
        PairedBatch b = gen::bijective_batch(rng, n, 4);
        EXPECT_GE(standard_crisp_loss(b, kTau).loss, 0.0);
        EXPECT_GE(parameterized_crisp_loss(b, kTau, {gen::uniform(rng, -5, 5)}).loss, 0.0);
        b.coords = gen::box_coords(rng, static_cast<std::size_t>(n), 600.0);
        EXPECT_GE(many_to_one_crisp_loss(b, kTau).loss, 0.0);
    }
}
