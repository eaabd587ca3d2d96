#include "crisp/encoder.hpp"
#include "crisp/errors.hpp"
#include "crisp/gradcheck.hpp"
#include "crisp/moe.hpp"
#include "crisp/optim.hpp"
#include "crisp/train.hpp"

#include "generators.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

using namespace crisp;

namespace {

std::vector<double> params_of(const ToyEncoder& e) { return {e.params().begin(), e.params().end()}; }

}  // namespace

// ---------------------------------------------------------------------------
// Encoder

TEST(ToyEncoder, ShapesAndParameterCount) {
    Rng rng(0);
    const EncoderArch arch{7, {5, 4}, 3};
    const ToyEncoder e(arch, rng);
    EXPECT_EQ(e.parameter_count(), static_cast<std::size_t>(7 * 5 + 5 + 5 * 4 + 4 + 4 * 3 + 3));
    EXPECT_EQ(e.parameter_count(), ToyEncoder::parameter_count(arch));
    EXPECT_EQ(e.forward(gen::gaussian(rng, 9, 7)).cols(), 3);
    EXPECT_THROW(ToyEncoder(arch, std::vector<double>(3, 0.0)), ShapeMismatchError);
    // biases are the decay-exempt entries
    const auto mask = e.decay_mask();
    EXPECT_EQ(std::count(mask.begin(), mask.end(), 0), 5 + 4 + 3);
}

TEST(ToyEncoder, BackwardMatchesFiniteDifferences) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(seed);
        const EncoderArch arch{gen::uniform_int(rng, 1, 6), {gen::uniform_int(rng, 1, 6)}, gen::uniform_int(rng, 1, 5)};
        const ToyEncoder e(arch, rng);
        const Matrix x = gen::gaussian(rng, 4, arch.input_dim);
        const Matrix w = gen::gaussian(rng, 4, arch.embed_dim);
        ToyEncoder::Cache cache;
        const Matrix out = e.forward(x, cache);
        std::vector<double> grad(e.parameter_count(), 0.0);
        const Matrix grad_x = e.backward(cache, w, grad);

        const auto p0 = params_of(e);
        Matrix p_mat = Eigen::Map<const Matrix>(p0.data(), 1, static_cast<Eigen::Index>(p0.size()));
        auto loss_of_params = [&](const Matrix& p) {
            return ToyEncoder(arch, std::vector<double>(p.data(), p.data() + p.size())).forward(x).cwiseProduct(w).sum();
        };
        const Matrix numeric_p = numeric_gradient(p_mat, loss_of_params, 1e-6);
        const Matrix analytic_p = Eigen::Map<const Matrix>(grad.data(), 1, static_cast<Eigen::Index>(grad.size()));
        EXPECT_LT(max_relative_error(analytic_p, numeric_p), 1e-5);

        const Matrix numeric_x = numeric_gradient(x, [&](const Matrix& xx) { return e.forward(xx).cwiseProduct(w).sum(); }, 1e-6);
        EXPECT_LT(max_relative_error(grad_x, numeric_x), 1e-5);
    }
}

// ---------------------------------------------------------------------------
// Optimizer

TEST(Sgd, ZeroGradientZeroDecayIsFixedPoint) {
    std::vector<double> p{1.0, -2.0, 3.0};
    const std::vector<double> g(3, 0.0);
    OptimizerState s(SgdConfig{0.1, 0.875, 0.0}, 10);
    for (int t = 0; t < 10; ++t) {
        const ParamBlock b{p, g};
        sgd_momentum_step({&b, 1}, s);
    }
    EXPECT_EQ(p, (std::vector<double>{1.0, -2.0, 3.0}));
}

TEST(Sgd, VanillaScalarStep) {
    std::vector<double> p{5.0};
    const std::vector<double> g{1.0};
    OptimizerState s(SgdConfig{0.1, 0.0, 0.0}, 100);
    const ParamBlock b{p, g};
    sgd_momentum_step({&b, 1}, s);
    EXPECT_DOUBLE_EQ(p[0], 4.9);
}

TEST(Sgd, CosineScheduleEndpoints) {
    const OptimizerState s(SgdConfig{0.37, 0.875, 3.05e-5}, 1234);
    EXPECT_EQ(s.lr_at(0), 0.37);
    EXPECT_NEAR(s.lr_at(1234), 0.0, 1e-15);
    EXPECT_NEAR(s.lr_at(617), 0.185, 1e-15);
    for (std::size_t t = 1; t <= 1234; ++t) EXPECT_LE(s.lr_at(t), s.lr_at(t - 1));
}

TEST(Sgd, DecayExemptionLeavesBiasesUnchanged) {
    std::vector<double> p{1.0, 2.0, 3.0, 4.0};
    const std::vector<double> g(4, 0.0);
    const std::vector<std::uint8_t> mask{1, 0, 1, 0};
    OptimizerState s(SgdConfig{0.1, 0.0, 0.5}, 5);
    const ParamBlock b{p, g, mask};
    sgd_momentum_step({&b, 1}, s);
    EXPECT_EQ(p[1], 2.0);
    EXPECT_EQ(p[3], 4.0);
    EXPECT_DOUBLE_EQ(p[0], 1.0 - 0.1 * 0.5 * 1.0);
    EXPECT_DOUBLE_EQ(p[2], 3.0 - 0.1 * 0.5 * 3.0);
}

TEST(Sgd, QuadraticTrajectoryMatchesRecurrence) {
    Rng rng(11);
    const std::size_t n = 6;
    std::vector<double> curv(n);
    std::vector<double> p(n);
    for (std::size_t i = 0; i < n; ++i) {
        curv[i] = gen::uniform(rng, 0.5, 1.0);
        p[i] = gen::uniform(rng, -3.0, 3.0);
    }
    std::vector<double> q = p;
    auto loss = [&](const std::vector<double>& x) {
        double f = 0.0;
        for (std::size_t i = 0; i < n; ++i) f += 0.5 * curv[i] * x[i] * x[i];
        return f;
    };
    const SgdConfig cfg{0.001, 0.875, 3.05e-5};
    OptimizerState state(cfg, 100);
    oracle::ScalarSgd ref{cfg.base_lr, cfg.momentum, cfg.weight_decay, 100, {}};
    double prev = loss(p);
    for (std::size_t t = 0; t < 100; ++t) {
        std::vector<double> g(n);
        for (std::size_t i = 0; i < n; ++i) g[i] = curv[i] * p[i];
        const ParamBlock b{p, g};
        sgd_momentum_step({&b, 1}, state);
        std::vector<double> gq(n);
        for (std::size_t i = 0; i < n; ++i) gq[i] = curv[i] * q[i];
        ref.step(q, gq, t);
        for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(p[i], q[i], 1e-14);
        const double now = loss(p);
        if (t >= 1) EXPECT_LT(now, prev);
        prev = now;
    }
    const ParamBlock b{p, p};
    EXPECT_THROW(sgd_momentum_step({&b, 1}, state), Error);
}

TEST(Sgd, ShapeMismatch) {
    std::vector<double> p(3, 0.0);
    const std::vector<double> g(2, 0.0);
    OptimizerState s(SgdConfig{}, 5);
    const ParamBlock b{p, g};
    EXPECT_THROW(sgd_momentum_step({&b, 1}, s), ShapeMismatchError);
}

// ---------------------------------------------------------------------------
// Label smoothing

TEST(LabelSmoothing, UniformLogitsGiveLogK) {
    for (int k : {2, 3, 10, 97}) {
        const Eigen::RowVectorXd logits = Eigen::RowVectorXd::Constant(k, 0.3);
        EXPECT_NEAR(label_smoothing_ce(logits, k - 1, 0.0).loss, std::log(double(k)), 1e-12);
        EXPECT_NEAR(label_smoothing_ce(logits, 0, 0.1).loss, std::log(double(k)), 1e-12);
    }
}

TEST(LabelSmoothing, FloorIsTargetEntropy) {
    const int k = 5;
    const double eps = 0.1;
    Eigen::RowVectorXd q = Eigen::RowVectorXd::Constant(k, eps / k);
    q(2) += 1.0 - eps;
    double entropy = 0.0;
    for (int i = 0; i < k; ++i) entropy -= q(i) * std::log(q(i));
    Eigen::RowVectorXd logq(k);
    for (int i = 0; i < k; ++i) logq(i) = std::log(q(i));
    EXPECT_NEAR(label_smoothing_ce(logq, 2, eps).loss, entropy, 1e-12);

    Eigen::RowVectorXd saturated = Eigen::RowVectorXd::Zero(k);
    saturated(2) = 60.0;
    EXPECT_GT(label_smoothing_ce(saturated, 2, eps).loss, entropy);
    Rng rng(1);
    for (int t = 0; t < 100; ++t) {
        const Eigen::RowVectorXd logits = gen::gaussian(rng, 1, k, 3.0);
        EXPECT_GE(label_smoothing_ce(logits, 2, eps).loss, entropy - 1e-12);
    }
}

TEST(LabelSmoothing, GradientMatchesFiniteDifferences) {
    Rng rng(2);
    for (int t = 0; t < 50; ++t) {
        const int k = gen::uniform_int(rng, 2, 12);
        const int rows = gen::uniform_int(rng, 1, 6);
        const Matrix logits = gen::gaussian(rng, rows, k, 2.0);
        const std::vector<int> targets = gen::labels(rng, static_cast<std::size_t>(rows), k);
        const double eps = gen::uniform(rng, 0.0, 0.5);
        const Matrix analytic = label_smoothing_ce(logits, targets, eps).grad;
        const Matrix numeric =
            numeric_gradient(logits, [&](const Matrix& x) { return label_smoothing_ce(x, targets, eps).loss; }, 1e-5);
        EXPECT_LE((analytic - numeric).cwiseAbs().maxCoeff(), 1e-6);
    }
}

TEST(LabelSmoothing, InvalidTargets) {
    EXPECT_THROW(label_smoothing_ce(Eigen::RowVectorXd::Zero(1), 0), InvalidTargetError);
    EXPECT_THROW(label_smoothing_ce(Eigen::RowVectorXd::Zero(3), 3), InvalidTargetError);
    EXPECT_THROW(label_smoothing_ce(Eigen::RowVectorXd::Zero(3), -1), InvalidTargetError);
    EXPECT_THROW(label_smoothing_ce(Eigen::RowVectorXd::Zero(3), 0, 1.0), InvalidTargetError);
}

// ---------------------------------------------------------------------------
// Pre-training

namespace {

SynthCorpus pretrain_corpus(double shared, std::uint64_t seed = 0) {
    SynthConfig cfg;
    cfg.n_observations = 600;
    cfg.n_classes = 10;
    cfg.shared_signal = shared;
    cfg.seed = seed;
    return generate(cfg);
}

std::vector<std::size_t> all_of(const SynthCorpus& c) {
    std::vector<std::size_t> pool(c.size());
    std::iota(pool.begin(), pool.end(), 0);
    return pool;
}

PretrainConfig small_pretrain(Objective obj) {
    PretrainConfig pc;
    pc.objective = obj;
    pc.epochs = 3;
    pc.batch_size = 100;
    pc.hidden_dim = 32;
    pc.embed_dim = 16;
    return pc;
}

}  // namespace

TEST(Pretrain, ZeroLearningRateLeavesParameters) {
    const SynthCorpus c = pretrain_corpus(0.9);
    for (Objective obj : {Objective::kStandard, Objective::kParameterized}) {
        PretrainConfig pc = small_pretrain(obj);
        pc.sgd.base_lr = 0.0;
        const PretrainResult r = pretrain(c, all_of(c), pc);
        EXPECT_EQ(r.encoders, init_encoder_pair(c, pc));
    }
}

TEST(Pretrain, ReducesLossOnPureSignal) {
    const SynthCorpus c = pretrain_corpus(1.0);
    PretrainConfig pc;
    pc.batch_size = 100;
    pc.epochs = 12;
    pc.sgd.base_lr = 0.05;
    const PretrainResult r = pretrain(c, all_of(c), pc);
    EXPECT_LE(r.final_eval_loss, 0.5 * r.initial_eval_loss)
        << r.initial_eval_loss << " -> " << r.final_eval_loss;
    EXPECT_EQ(r.history.size(), 12u);
    EXPECT_EQ(r.steps, 12u * 6u);
}

TEST(Pretrain, ManyToOneWithZeroRadiusTracksStandard) {
    const SynthCorpus c = pretrain_corpus(0.9);
    PretrainConfig s = small_pretrain(Objective::kStandard);
    PretrainConfig m = small_pretrain(Objective::kManyToOne);
    m.radius_m = 0.0;
    const PretrainResult rs = pretrain(c, all_of(c), s);
    const PretrainResult rm = pretrain(c, all_of(c), m);
    ASSERT_EQ(rs.history.size(), rm.history.size());
    for (std::size_t e = 0; e < rs.history.size(); ++e) EXPECT_NEAR(rs.history[e].loss, rm.history[e].loss, 1e-9);
}

TEST(Pretrain, DeterministicUnderSeed) {
    const SynthCorpus c = pretrain_corpus(0.9);
    for (Objective obj : {Objective::kAugmented, Objective::kManyToOne, Objective::kParameterized}) {
        const PretrainConfig pc = small_pretrain(obj);
        const PretrainResult a = pretrain(c, all_of(c), pc);
        const PretrainResult b = pretrain(c, all_of(c), pc);
        EXPECT_EQ(a.encoders, b.encoders);
        for (std::size_t e = 0; e < a.history.size(); ++e) EXPECT_EQ(a.history[e].loss, b.history[e].loss);
        EXPECT_EQ(a.rng_state, b.rng_state);
    }
}

TEST(Pretrain, ParameterizedGateStartsAtHalf) {
    const SynthCorpus c = pretrain_corpus(0.9);
    std::vector<double> mixes;
    pretrain(c, all_of(c), small_pretrain(Objective::kParameterized),
             [&](const EpochLog& log) { mixes.push_back(log.mix); });
    ASSERT_EQ(mixes.size(), 3u);
    EXPECT_EQ(mixes.front(), 0.5);
}

TEST(Pretrain, Errors) {
    const SynthCorpus c = pretrain_corpus(0.9);
    PretrainConfig pc = small_pretrain(Objective::kStandard);
    pc.batch_size = 1000;
    EXPECT_THROW(pretrain(c, all_of(c), pc), ConfigError);
    EXPECT_THROW(pretrain(c, {}, small_pretrain(Objective::kStandard)), EmptySetError);
    EXPECT_THROW(parse_objective("clip"), ConfigError);
    EXPECT_EQ(parse_objective("m2o"), Objective::kManyToOne);
}

// ---------------------------------------------------------------------------
// Supervised heads

namespace {

ToyEncoder identity_encoder(int dim) {
    std::vector<double> p(ToyEncoder::parameter_count({dim, {}, dim}), 0.0);
    for (int i = 0; i < dim; ++i) p[static_cast<std::size_t>(i * dim + i)] = 1.0;
    return ToyEncoder({dim, {}, dim}, p);
}

LabeledSet threshold_set(Rng& rng, int n, int dim) {
    LabeledSet s;
    s.inputs = gen::gaussian(rng, n, dim);
    for (int i = 0; i < n; ++i) {
        if (std::abs(s.inputs(i, 0)) < 0.3) s.inputs(i, 0) += s.inputs(i, 0) < 0 ? -0.3 : 0.3;
        s.labels.push_back(s.inputs(i, 0) > 0 ? 7 : 3);
        s.groups.push_back(0);
        s.obs_ids.push_back("s" + std::to_string(i));
    }
    return s;
}

LabeledSet random_label_set(Rng& rng, int n, int dim, int k) {
    LabeledSet s;
    s.inputs = gen::gaussian(rng, n, dim);
    s.labels = gen::labels(rng, static_cast<std::size_t>(n), k);
    s.groups.assign(static_cast<std::size_t>(n), 0);
    for (int i = 0; i < n; ++i) s.obs_ids.push_back("r" + std::to_string(i));
    return s;
}

}  // namespace

TEST(Finetune, SingleClassPredictsThatClass) {
    Rng rng(0);
    LabeledSet train = random_label_set(rng, 30, 4, 1);
    LabeledSet val = random_label_set(rng, 20, 4, 1);
    for (auto& l : train.labels) l = 5;
    for (auto& l : val.labels) l = 5;
    const ToyEncoder enc({4, {6}, 3}, rng);
    const FinetuneResult r = finetune(enc, train, val, FinetuneConfig{});
    EXPECT_EQ(r.classifier.class_ids, std::vector<int>{5});
    EXPECT_EQ(r.best_val_top1, 1.0);
    EXPECT_EQ(topk_accuracy(predict(r.classifier, val), 1), 1.0);
}

TEST(Finetune, FrozenEqualsLinearProbe) {
    Rng rng(1);
    const LabeledSet train = random_label_set(rng, 120, 5, 4);
    const LabeledSet val = random_label_set(rng, 40, 5, 4);
    const ToyEncoder enc({5, {8}, 6}, rng);
    FinetuneConfig cfg;
    cfg.epochs = 5;
    cfg.batch_size = 16;
    cfg.freeze_encoder = true;
    const FinetuneResult f = finetune(enc, train, val, cfg);
    cfg.freeze_encoder = false;
    const ProbeResult p = linear_probe(enc, train, val, cfg);
    EXPECT_EQ(f.classifier.head, p.classifier.head);
    EXPECT_EQ(f.best_val_top1, p.accuracy);
    EXPECT_EQ(p.classifier.encoder, enc);
}

TEST(Finetune, UnfrozenUpdatesEncoder) {
    Rng rng(2);
    const LabeledSet train = random_label_set(rng, 64, 5, 3);
    const ToyEncoder enc({5, {8}, 6}, rng);
    FinetuneConfig cfg;
    cfg.epochs = 2;
    cfg.early_stopping = false;
    cfg.sgd.base_lr = 0.1;
    const FinetuneResult f = finetune(enc, train, LabeledSet{}, cfg);
    EXPECT_FALSE(f.classifier.encoder == enc);
}

TEST(LinearProbe, SeparableLabelsReachPerfectAccuracy) {
    Rng rng(3);
    const LabeledSet train = threshold_set(rng, 300, 4);
    FinetuneConfig cfg;
    cfg.epochs = 100;
    cfg.batch_size = 32;
    cfg.sgd.base_lr = 0.5;
    const ProbeResult p = linear_probe(identity_encoder(4), train, LabeledSet{}, cfg);
    EXPECT_EQ(p.accuracy, 1.0);
    EXPECT_EQ(p.classifier.class_ids, (std::vector<int>{3, 7}));
}

TEST(LinearProbe, RandomLabelsAtChance) {
    Rng rng(4);
    const int k = 10;
    const LabeledSet train = random_label_set(rng, 500, 8, k);
    const LabeledSet val = random_label_set(rng, 4000, 8, k);
    FinetuneConfig cfg;
    cfg.epochs = 10;
    cfg.batch_size = 50;
    cfg.early_stopping = false;
    cfg.sgd.base_lr = 0.1;
    const ToyEncoder enc({8, {16}, 8}, rng);
    const ProbeResult p = linear_probe(enc, train, val, cfg);
    const double sd = std::sqrt(0.1 * 0.9 / 4000.0);
    EXPECT_NEAR(p.accuracy, 1.0 / k, 4.0 * sd);
}

TEST(LinearProbe, EncoderBitwiseUntouched) {
    Rng rng(5);
    const ToyEncoder enc({6, {7}, 5}, rng);
    const auto before = params_of(enc);
    const ProbeResult p = linear_probe(enc, random_label_set(rng, 80, 6, 3), random_label_set(rng, 30, 6, 3), {});
    EXPECT_EQ(params_of(p.classifier.encoder), before);
    EXPECT_EQ(params_of(enc), before);
}

TEST(Finetune, EmptySubset) {
    Rng rng(6);
    const ToyEncoder enc({3, {}, 3}, rng);
    LabeledSet empty;
    empty.inputs = Matrix(0, 3);
    EXPECT_THROW(finetune(enc, empty, empty, {}), EmptySubsetError);
}

TEST(Predict, DropsUnknownClassesAndMapsBins) {
    Rng rng(7);
    LabeledSet train = random_label_set(rng, 40, 3, 2);
    for (auto& l : train.labels) l += 10;  // classes 10, 11
    FinetuneConfig cfg;
    cfg.epochs = 1;
    const FinetuneResult r = finetune(ToyEncoder({3, {}, 3}, rng), train, LabeledSet{}, cfg);
    LabeledSet eval = random_label_set(rng, 10, 3, 3);
    for (auto& l : eval.labels) l += 10;  // 10, 11, 12 (unknown)
    const std::size_t known = static_cast<std::size_t>(std::count_if(eval.labels.begin(), eval.labels.end(), [](int l) { return l < 12; }));
    FrequencyBins bins;
    bins.bin_of = {{10, FrequencyBin::kRare}, {11, FrequencyBin::kFrequent}};
    const PredictionSet p = predict(r.classifier, eval, bins);
    EXPECT_EQ(p.true_class.size(), known);
    EXPECT_EQ(p.class_bins->bin_of.at(0), FrequencyBin::kRare);
    EXPECT_EQ(p.class_bins->bin_of.at(1), FrequencyBin::kFrequent);
}

// ---------------------------------------------------------------------------
// Mixture of experts

TEST(MoE, SaturatedAndBalancedGate) {
    Rng rng(0);
    MoEHead head = MoEHead::make(4, 5, 3, rng);
    const Matrix e_gl = gen::gaussian(rng, 6, 4);
    const Matrix e_a = gen::gaussian(rng, 6, 5);
    head.gate = 50.0;
    EXPECT_LE((moe_forward(head, e_gl, e_a) - head.proj_gl.forward(e_gl)).cwiseAbs().maxCoeff(), 1e-12);
    head.gate = -50.0;
    EXPECT_LE((moe_forward(head, e_gl, e_a) - head.proj_a.forward(e_a)).cwiseAbs().maxCoeff(), 1e-12);
    head.gate = 0.0;
    const Matrix mean = 0.5 * (head.proj_gl.forward(e_gl) + head.proj_a.forward(e_a));
    EXPECT_LE((moe_forward(head, e_gl, e_a) - mean).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_THROW(moe_forward(head, e_a, e_a), ShapeMismatchError);
}

TEST(MoE, GradientsMatchFiniteDifferences) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(seed);
        MoEHead head = MoEHead::make(4, 3, 5, rng);
        head.gate = gen::uniform(rng, -2, 2);
        const Matrix e_gl = gen::gaussian(rng, 7, 4);
        const Matrix e_a = gen::gaussian(rng, 7, 3);
        const std::vector<int> targets = gen::labels(rng, 7, 5);
        auto loss = [&](const MoEHead& h, const Matrix& g, const Matrix& a) {
            return label_smoothing_ce(moe_forward(h, g, a), targets, 0.1).loss;
        };
        const Matrix grad_logits = label_smoothing_ce(moe_forward(head, e_gl, e_a), targets, 0.1).grad;
        const MoEGradients g = moe_backward(head, e_gl, e_a, grad_logits);

        const double h = 1e-6;
        MoEHead up = head;
        MoEHead down = head;
        up.gate += h;
        down.gate -= h;
        const double fd = (loss(up, e_gl, e_a) - loss(down, e_gl, e_a)) / (2 * h);
        EXPECT_NEAR(g.gate, fd, 1e-6);

        EXPECT_LT(max_relative_error(g.e_gl, numeric_gradient(e_gl, [&](const Matrix& x) { return loss(head, x, e_a); }, 1e-6)), 1e-5);
        EXPECT_LT(max_relative_error(g.e_a, numeric_gradient(e_a, [&](const Matrix& x) { return loss(head, e_gl, x); }, 1e-6)), 1e-5);

        const auto p0 = params_of(head.proj_gl);
        const Matrix pm = Eigen::Map<const Matrix>(p0.data(), 1, static_cast<Eigen::Index>(p0.size()));
        const Matrix num = numeric_gradient(pm, [&](const Matrix& p) {
            MoEHead hh = head;
            hh.proj_gl = ToyEncoder(head.proj_gl.arch(), std::vector<double>(p.data(), p.data() + p.size()));
            return loss(hh, e_gl, e_a);
        }, 1e-6);
        const Matrix ana = Eigen::Map<const Matrix>(g.proj_gl.data(), 1, static_cast<Eigen::Index>(g.proj_gl.size()));
        EXPECT_LT(max_relative_error(ana, num), 1e-5);
    }
}

TEST(MoE, TrainingRunsAndScores) {
    SynthConfig cfg;
    cfg.n_observations = 300;
    cfg.n_classes = 5;
    const SynthCorpus c = generate(cfg);
    std::vector<std::string> ids;
    for (const auto& o : c.observations) ids.push_back(o.obs_id);
    const std::vector<std::string> tr(ids.begin(), ids.begin() + 200);
    const std::vector<std::string> va(ids.begin() + 200, ids.end());
    const PairedLabeledSet train = paired_samples(c, tr);
    const PairedLabeledSet val = paired_samples(c, va);
    Rng rng(1);
    const ToyEncoder g({cfg.view_dim_gl, {16}, 8}, rng);
    const ToyEncoder a({cfg.view_dim_a, {16}, 8}, rng);
    FinetuneConfig fc;
    fc.epochs = 5;
    fc.batch_size = 32;
    fc.sgd.base_lr = 0.05;
    const MoEResult r = train_moe(g, a, train, val, fc);
    const PredictionSet p = predict(r.classifier, val);
    EXPECT_EQ(p.scores.cols(), static_cast<Eigen::Index>(r.classifier.class_ids.size()));
    EXPECT_GE(r.best_val_top1, 0.0);
    EXPECT_LE(r.best_val_top1, 1.0);
    EXPECT_NEAR(topk_accuracy(p, 1), r.best_val_top1, 1e-12);
}
