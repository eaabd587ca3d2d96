#include "crisp/train.hpp"

#include "crisp/errors.hpp"

#include <algorithm>
#include <chrono>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace crisp {

// ---------------------------------------------------------------------------
// Label-smoothed cross-entropy

CrossEntropy label_smoothing_ce(const Eigen::Ref<const Eigen::RowVectorXd>& logits, int target, double epsilon) {
    const Eigen::Index k = logits.size();
    if (k < 2) throw InvalidTargetError("label smoothing needs at least two classes");
    if (target < 0 || target >= k) throw InvalidTargetError("target class " + std::to_string(target) + " out of range");
    if (!(epsilon >= 0.0 && epsilon < 1.0)) throw InvalidTargetError("label smoothing epsilon must lie in [0, 1)");

    const double max = logits.maxCoeff();
    const double lse = max + std::log((logits.array() - max).exp().sum());
    const double off = epsilon / static_cast<double>(k);

    CrossEntropy out;
    out.grad.resize(1, k);
    for (Eigen::Index j = 0; j < k; ++j) {
        const double q = off + (j == target ? 1.0 - epsilon : 0.0);
        const double log_p = logits(j) - lse;
        out.loss -= q * log_p;
        out.grad(0, j) = std::exp(log_p) - q;
    }
    return out;
}

CrossEntropy label_smoothing_ce(const Matrix& logits, const std::vector<int>& targets, double epsilon) {
    if (static_cast<Eigen::Index>(targets.size()) != logits.rows()) {
        throw ShapeMismatchError("one target per logit row required");
    }
    CrossEntropy out;
    out.grad.resize(logits.rows(), logits.cols());
    if (logits.rows() == 0) return out;
    const double inv = 1.0 / static_cast<double>(logits.rows());
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        const CrossEntropy row = label_smoothing_ce(logits.row(i), targets[static_cast<std::size_t>(i)], epsilon);
        out.loss += row.loss;
        out.grad.row(i) = row.grad * inv;
    }
    out.loss *= inv;
    return out;
}

// ---------------------------------------------------------------------------
// Contrastive pre-training

Objective parse_objective(std::string_view name) {
    if (name == "standard") return Objective::kStandard;
    if (name == "aug") return Objective::kAugmented;
    if (name == "m2o") return Objective::kManyToOne;
    if (name == "par") return Objective::kParameterized;
    throw ConfigError("unknown objective '" + std::string(name) + "' (expected standard, aug, m2o or par)");
}

std::string_view to_string(Objective objective) {
    switch (objective) {
        case Objective::kStandard: return "standard";
        case Objective::kAugmented: return "aug";
        case Objective::kManyToOne: return "m2o";
        case Objective::kParameterized: return "par";
    }
    return "standard";
}

Temperature PretrainConfig::temperature() const {
    return tau ? Temperature::from_tau(*tau) : Temperature::from_log_inverse(log_inverse_temperature);
}

void PretrainConfig::validate() const {
    if (epochs < 0) throw ConfigError("epochs must be non-negative");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (sgd.base_lr < 0.0) throw ConfigError("base_lr must be non-negative");
    if (radius_m < 0.0) throw ConfigError("radius_m must be non-negative");
    if (hidden_dim < 0 || embed_dim < 1) throw ConfigError("encoder widths must be positive");
    if (crop_size < 1) throw ConfigError("crop_size must be >= 1");
    (void)temperature();
}

namespace {

EncoderArch arch_for(int input_dim, const PretrainConfig& config) {
    EncoderArch arch{input_dim, {}, config.embed_dim};
    if (config.hidden_dim > 0) arch.hidden_dims.push_back(config.hidden_dim);
    return arch;
}

EncoderPair init_pair(const SynthCorpus& corpus, const PretrainConfig& config, Rng& rng) {
    EncoderPair pair;
    pair.gl = ToyEncoder(arch_for(static_cast<int>(corpus.ground_views.front().cols()), config), rng);
    pair.a = ToyEncoder(arch_for(static_cast<int>(corpus.aerial_views.cols()), config), rng);
    return pair;
}

struct BatchInputs {
    Matrix gl;
    Matrix a;
    std::vector<GeoPoint> coords;
};

LossResult objective_loss(Objective objective, const PairedBatch& batch, const PretrainConfig& config,
                          LossWeight weight) {
    const Temperature t = config.temperature();
    switch (objective) {
        case Objective::kStandard:
        case Objective::kAugmented: return standard_crisp_loss(batch, t);
        case Objective::kManyToOne:
            return many_to_one_crisp_loss(batch, t, ManyToOneOptions{config.radius_m, config.dedupe_denominator});
        case Objective::kParameterized: return parameterized_crisp_loss(batch, t, weight);
    }
    throw Error("unreachable objective");
}

PairedBatch make_batch(const Matrix& gl_emb, const Matrix& a_emb, std::vector<GeoPoint> coords) {
    const auto n = static_cast<std::size_t>(gl_emb.rows());
    std::vector<std::size_t> pairing(n);
    std::iota(pairing.begin(), pairing.end(), std::size_t{0});
    return PairedBatch{EmbeddingBatch(gl_emb), EmbeddingBatch(a_emb), std::move(pairing), std::move(coords)};
}

std::string rng_state_of(const Rng& rng) {
    std::ostringstream s;
    s << rng;
    return s.str();
}

}  // namespace

EncoderPair init_encoder_pair(const SynthCorpus& corpus, const PretrainConfig& config) {
    config.validate();
    Rng rng(config.seed);
    return init_pair(corpus, config, rng);
}

double evaluate_pretrain_loss(const SynthCorpus& corpus, const std::vector<std::size_t>& pool,
                              const EncoderPair& encoders, const PretrainConfig& config) {
    if (pool.empty()) throw EmptySetError("pre-training pool is empty");
    const auto batch = static_cast<std::size_t>(config.batch_size);
    double total = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < pool.size(); start += batch) {
        const std::size_t end = std::min(pool.size(), start + batch);
        BatchInputs in;
        in.gl.resize(static_cast<Eigen::Index>(end - start), corpus.ground_views.front().cols());
        in.a.resize(static_cast<Eigen::Index>(end - start), corpus.aerial_views.cols());
        for (std::size_t b = start; b < end; ++b) {
            const std::size_t o = pool[b];
            const auto row = static_cast<Eigen::Index>(b - start);
            in.gl.row(row) = corpus.ground_views[o].row(0);
            in.a.row(row) = corpus.aerial_views.row(static_cast<Eigen::Index>(o));
            in.coords.push_back(corpus.observations[o].location());
        }
        const PairedBatch pb = make_batch(encoders.gl.forward(in.gl), encoders.a.forward(in.a), std::move(in.coords));
        total += objective_loss(config.objective, pb, config, encoders.weight).loss;
        ++batches;
    }
    return total / static_cast<double>(batches);
}

PretrainResult pretrain(const SynthCorpus& corpus, const std::vector<std::size_t>& pool, const PretrainConfig& config,
                        const EpochCallback& on_epoch) {
    config.validate();
    if (pool.empty()) throw EmptySetError("pre-training pool is empty");
    for (std::size_t o : pool) {
        if (o >= corpus.size()) throw Error("pre-training pool index out of range");
    }
    if (static_cast<std::size_t>(config.batch_size) > pool.size()) {
        throw ConfigError("batch_size exceeds the pre-training pool size");
    }

    Rng rng(config.seed);
    PretrainResult result;
    result.encoders = init_pair(corpus, config, rng);
    EncoderPair& enc = result.encoders;
    result.initial_eval_loss = evaluate_pretrain_loss(corpus, pool, enc, config);

    const auto batch = static_cast<std::size_t>(config.batch_size);
    const std::size_t per_epoch = (pool.size() + batch - 1) / batch;
    OptimizerState opt(config.sgd, std::max<std::size_t>(1, per_epoch * static_cast<std::size_t>(config.epochs)));

    std::vector<double> grad_gl(enc.gl.parameter_count());
    std::vector<double> grad_a(enc.a.parameter_count());
    std::vector<double> weight_param(1);
    std::vector<double> grad_weight(1);
    const std::uint8_t no_decay[1] = {0};

    std::vector<std::size_t> order = pool;
    const auto started = std::chrono::steady_clock::now();
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        EpochLog log;
        log.epoch = epoch;
        log.lr = opt.current_lr();
        log.mix = enc.weight.mix();
        std::shuffle(order.begin(), order.end(), rng);

        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::size_t end = std::min(order.size(), start + batch);
            BatchInputs in;
            in.gl.resize(static_cast<Eigen::Index>(end - start), corpus.ground_views.front().cols());
            in.a.resize(static_cast<Eigen::Index>(end - start), corpus.aerial_views.cols());
            for (std::size_t b = start; b < end; ++b) {
                const std::size_t o = order[b];
                const auto row = static_cast<Eigen::Index>(b - start);
                const Matrix& views = corpus.ground_views[o];
                const auto v = std::uniform_int_distribution<Eigen::Index>(0, views.rows() - 1)(rng);
                in.gl.row(row) = views.row(v);
                if (config.objective == Objective::kAugmented) {
                    in.a.row(row) = augment_aerial(aerial_raster(corpus, o), config.crop_size, rng).channel_means();
                } else {
                    in.a.row(row) = corpus.aerial_views.row(static_cast<Eigen::Index>(o));
                }
                in.coords.push_back(corpus.observations[o].location());
            }

            ToyEncoder::Cache cache_gl;
            ToyEncoder::Cache cache_a;
            const Matrix emb_gl = enc.gl.forward(in.gl, cache_gl);
            const Matrix emb_a = enc.a.forward(in.a, cache_a);
            const LossResult lr = objective_loss(config.objective, make_batch(emb_gl, emb_a, std::move(in.coords)),
                                                 config, enc.weight);
            loss_sum += lr.loss;

            std::fill(grad_gl.begin(), grad_gl.end(), 0.0);
            std::fill(grad_a.begin(), grad_a.end(), 0.0);
            enc.gl.backward(cache_gl, lr.grad_gl, grad_gl);
            enc.a.backward(cache_a, lr.grad_a, grad_a);

            std::vector<ParamBlock> blocks{{enc.gl.params(), grad_gl, enc.gl.decay_mask()},
                                           {enc.a.params(), grad_a, enc.a.decay_mask()}};
            if (config.objective == Objective::kParameterized) {
                weight_param[0] = enc.weight.w;
                grad_weight[0] = lr.grad_w.value_or(0.0);
                blocks.push_back({weight_param, grad_weight, no_decay});
            }
            sgd_momentum_step(blocks, opt);
            if (config.objective == Objective::kParameterized) enc.weight.w = weight_param[0];
        }
        log.loss = loss_sum / static_cast<double>(per_epoch);
        log.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        result.history.push_back(log);
        if (on_epoch) on_epoch(log);
    }
    result.steps = opt.step;
    result.final_eval_loss = evaluate_pretrain_loss(corpus, pool, enc, config);
    result.rng_state = rng_state_of(rng);
    return result;
}

// ---------------------------------------------------------------------------
// Supervised heads

View parse_view(std::string_view name) {
    if (name == "gl" || name == "ground") return View::kGround;
    if (name == "a" || name == "aerial") return View::kAerial;
    throw ConfigError("unknown view '" + std::string(name) + "' (expected gl or a)");
}

std::string_view to_string(View view) { return view == View::kGround ? "gl" : "a"; }

namespace {

std::unordered_map<std::string, std::size_t> id_index(const SynthCorpus& corpus) {
    std::unordered_map<std::string, std::size_t> out;
    for (std::size_t i = 0; i < corpus.observations.size(); ++i) out.emplace(corpus.observations[i].obs_id, i);
    return out;
}

bool keep_class(const ObservationRecord& o, const std::set<int>& classes) {
    return o.class_id && (classes.empty() || classes.count(*o.class_id) > 0);
}

}  // namespace

LabeledSet labeled_samples(const SynthCorpus& corpus, const std::vector<std::string>& obs_ids, View view,
                           const std::set<int>& classes) {
    const auto index = id_index(corpus);
    LabeledSet s;
    std::vector<Vector> rows;
    for (const auto& id : obs_ids) {
        const auto it = index.find(id);
        if (it == index.end()) throw Error("unknown observation id '" + id + "'");
        const ObservationRecord& o = corpus.observations[it->second];
        if (!keep_class(o, classes)) continue;
        if (view == View::kGround) {
            const Matrix& views = corpus.ground_views[it->second];
            for (Eigen::Index v = 0; v < views.rows(); ++v) {
                rows.emplace_back(views.row(v).transpose());
                s.labels.push_back(*o.class_id);
                s.groups.push_back(o.group_id);
                s.obs_ids.push_back(o.obs_id);
            }
        } else {
            rows.emplace_back(corpus.aerial_views.row(static_cast<Eigen::Index>(it->second)).transpose());
            s.labels.push_back(*o.class_id);
            s.groups.push_back(o.group_id);
            s.obs_ids.push_back(o.obs_id);
        }
    }
    const Eigen::Index dim = view == View::kGround ? corpus.ground_views.front().cols() : corpus.aerial_views.cols();
    s.inputs.resize(static_cast<Eigen::Index>(rows.size()), dim);
    for (std::size_t i = 0; i < rows.size(); ++i) s.inputs.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
    return s;
}

PairedLabeledSet paired_samples(const SynthCorpus& corpus, const std::vector<std::string>& obs_ids,
                                const std::set<int>& classes) {
    PairedLabeledSet p;
    p.gl = labeled_samples(corpus, obs_ids, View::kGround, classes);
    const auto index = id_index(corpus);
    p.aerial_inputs.resize(static_cast<Eigen::Index>(p.gl.size()), corpus.aerial_views.cols());
    for (std::size_t i = 0; i < p.gl.size(); ++i) {
        p.aerial_inputs.row(static_cast<Eigen::Index>(i)) =
            corpus.aerial_views.row(static_cast<Eigen::Index>(index.at(p.gl.obs_ids[i])));
    }
    return p;
}

void FinetuneConfig::validate() const {
    if (epochs < 0) throw ConfigError("epochs must be non-negative");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (sgd.base_lr < 0.0) throw ConfigError("base_lr must be non-negative");
    if (!(label_smoothing >= 0.0 && label_smoothing < 1.0)) throw ConfigError("label_smoothing must lie in [0, 1)");
}

namespace {

Matrix featurize(const Matrix& embeddings, bool normalize) {
    return normalize ? l2_normalize_rows(embeddings) : embeddings;
}

/// Indices of the first maximum per row (ties to the lowest column).
int argmax_row(const Matrix& scores, Eigen::Index i) {
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < scores.cols(); ++j) {
        if (scores(i, j) > scores(i, best)) best = j;
    }
    return static_cast<int>(best);
}

/// Top-1 over every sample; a sample whose class the model lacks is a miss.
double top1_including_unknown(const Matrix& scores, const std::vector<int>& class_ids, const std::vector<int>& labels) {
    if (labels.empty()) return 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (class_ids[static_cast<std::size_t>(argmax_row(scores, static_cast<Eigen::Index>(i)))] == labels[i]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(labels.size());
}

std::vector<int> sorted_classes(const std::vector<int>& labels) {
    std::vector<int> c = labels;
    std::sort(c.begin(), c.end());
    c.erase(std::unique(c.begin(), c.end()), c.end());
    return c;
}

std::vector<int> to_indices(const std::vector<int>& labels, const std::vector<int>& class_ids) {
    std::vector<int> out(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        out[i] = static_cast<int>(std::lower_bound(class_ids.begin(), class_ids.end(), labels[i]) - class_ids.begin());
    }
    return out;
}

Matrix gather_rows(const Matrix& m, const std::vector<std::size_t>& order, std::size_t begin, std::size_t end) {
    Matrix out(static_cast<Eigen::Index>(end - begin), m.cols());
    for (std::size_t i = begin; i < end; ++i) out.row(static_cast<Eigen::Index>(i - begin)) = m.row(static_cast<Eigen::Index>(order[i]));
    return out;
}

std::vector<int> gather(const std::vector<int>& v, const std::vector<std::size_t>& order, std::size_t begin,
                        std::size_t end) {
    std::vector<int> out;
    out.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i) out.push_back(v[order[i]]);
    return out;
}

std::optional<FrequencyBins> bins_by_column(const std::optional<FrequencyBins>& by_class_id,
                                            const std::vector<int>& class_ids) {
    if (!by_class_id) return std::nullopt;
    FrequencyBins out = *by_class_id;
    out.bin_of.clear();
    for (std::size_t j = 0; j < class_ids.size(); ++j) {
        const auto it = by_class_id->bin_of.find(class_ids[j]);
        if (it != by_class_id->bin_of.end()) out.bin_of.emplace(static_cast<int>(j), it->second);
    }
    return out;
}

}  // namespace

Matrix Classifier::scores(const Matrix& inputs) const {
    return head.forward(featurize(encoder.forward(inputs), normalize_features));
}

FinetuneResult finetune(const ToyEncoder& encoder, const LabeledSet& train, const LabeledSet& val,
                        const FinetuneConfig& config) {
    config.validate();
    if (train.size() == 0) throw EmptySubsetError("fine-tuning set is empty");

    Rng rng(config.seed);
    FinetuneResult result;
    Classifier& model = result.classifier;
    model.encoder = encoder;
    model.class_ids = sorted_classes(train.labels);
    model.normalize_features = config.normalize_features;
    model.head = ToyEncoder(EncoderArch{encoder.arch().embed_dim, {}, static_cast<int>(model.class_ids.size())}, rng);
    const std::vector<int> targets = to_indices(train.labels, model.class_ids);

    auto val_top1 = [&] { return top1_including_unknown(model.scores(val.inputs), model.class_ids, val.labels); };
    if (model.class_ids.size() < 2) {
        // One class: every input is scored for it, nothing to learn.
        result.best_val_top1 = val.size() > 0 ? val_top1() : 1.0;
        return result;
    }

    const std::size_t n = train.size();
    const auto batch = static_cast<std::size_t>(config.batch_size);
    const std::size_t per_epoch = (n + batch - 1) / batch;
    OptimizerState opt(config.sgd, std::max<std::size_t>(1, per_epoch * static_cast<std::size_t>(config.epochs)));

    Matrix frozen_features;
    if (config.freeze_encoder) frozen_features = featurize(model.encoder.forward(train.inputs), config.normalize_features);

    std::vector<double> grad_head(model.head.parameter_count());
    std::vector<double> grad_enc(model.encoder.parameter_count());
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});

    Classifier best = model;
    result.best_val_top1 = -1.0;
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t end = std::min(n, start + batch);
            const std::vector<int> y = gather(targets, order, start, end);
            ToyEncoder::Cache enc_cache;
            Matrix embeddings;
            Matrix features;
            if (config.freeze_encoder) {
                features = gather_rows(frozen_features, order, start, end);
            } else {
                embeddings = model.encoder.forward(gather_rows(train.inputs, order, start, end), enc_cache);
                features = featurize(embeddings, config.normalize_features);
            }
            ToyEncoder::Cache head_cache;
            const Matrix logits = model.head.forward(features, head_cache);
            const CrossEntropy ce = label_smoothing_ce(logits, y, config.label_smoothing);

            std::fill(grad_head.begin(), grad_head.end(), 0.0);
            const Matrix grad_features = model.head.backward(head_cache, ce.grad, grad_head);
            std::vector<ParamBlock> blocks{{model.head.params(), grad_head, model.head.decay_mask()}};
            if (!config.freeze_encoder) {
                std::fill(grad_enc.begin(), grad_enc.end(), 0.0);
                const Matrix grad_emb = config.normalize_features
                                            ? l2_normalize_backward(embeddings, features, grad_features)
                                            : grad_features;
                model.encoder.backward(enc_cache, grad_emb, grad_enc);
                blocks.push_back({model.encoder.params(), grad_enc, model.encoder.decay_mask()});
            }
            sgd_momentum_step(blocks, opt);
        }
        const double acc = val.size() > 0 ? val_top1() : 0.0;
        result.val_top1_history.push_back(acc);
        if (!config.early_stopping || acc > result.best_val_top1) {
            result.best_val_top1 = acc;
            result.best_epoch = epoch;
            best = model;
        }
    }
    if (config.epochs == 0) result.best_val_top1 = val.size() > 0 ? val_top1() : 0.0;
    if (config.epochs > 0) model = std::move(best);
    return result;
}

ProbeResult linear_probe(const ToyEncoder& encoder, const LabeledSet& train, const LabeledSet& val,
                         FinetuneConfig config) {
    config.freeze_encoder = true;
    if (val.size() == 0) config.early_stopping = false;
    FinetuneResult r = finetune(encoder, train, val, config);
    ProbeResult out;
    out.classifier = std::move(r.classifier);
    out.accuracy = val.size() > 0 ? r.best_val_top1
                                  : top1_including_unknown(out.classifier.scores(train.inputs),
                                                           out.classifier.class_ids, train.labels);
    return out;
}

PredictionSet predict(const Classifier& classifier, const LabeledSet& samples,
                      const std::optional<FrequencyBins>& bins_by_class_id) {
    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (std::binary_search(classifier.class_ids.begin(), classifier.class_ids.end(), samples.labels[i])) {
            kept.push_back(i);
        }
    }
    PredictionSet p;
    p.scores = classifier.scores(gather_rows(samples.inputs, kept, 0, kept.size()));
    p.true_class = to_indices(gather(samples.labels, kept, 0, kept.size()), classifier.class_ids);
    p.group_id = gather(samples.groups, kept, 0, kept.size());
    p.class_bins = bins_by_column(bins_by_class_id, classifier.class_ids);
    return p;
}

// ---------------------------------------------------------------------------
// Mixture of experts

Matrix MoEClassifier::scores(const Matrix& inputs_gl, const Matrix& inputs_a) const {
    return moe_forward(head, featurize(encoder_gl.forward(inputs_gl), normalize_features),
                       featurize(encoder_a.forward(inputs_a), normalize_features));
}

MoEResult train_moe(const ToyEncoder& encoder_gl, const ToyEncoder& encoder_a, const PairedLabeledSet& train,
                    const PairedLabeledSet& val, const FinetuneConfig& config) {
    config.validate();
    if (train.size() == 0) throw EmptySubsetError("fine-tuning set is empty");
    if (train.aerial_inputs.rows() != static_cast<Eigen::Index>(train.size())) {
        throw ShapeMismatchError("paired set needs one aerial row per ground sample");
    }

    Rng rng(config.seed);
    MoEResult result;
    MoEClassifier& model = result.classifier;
    model.encoder_gl = encoder_gl;
    model.encoder_a = encoder_a;
    model.class_ids = sorted_classes(train.gl.labels);
    model.normalize_features = config.normalize_features;
    model.head = MoEHead::make(encoder_gl.arch().embed_dim, encoder_a.arch().embed_dim,
                               static_cast<int>(model.class_ids.size()), rng);
    const std::vector<int> targets = to_indices(train.gl.labels, model.class_ids);
    auto val_top1 = [&] {
        return top1_including_unknown(model.scores(val.gl.inputs, val.aerial_inputs), model.class_ids, val.gl.labels);
    };
    if (model.class_ids.size() < 2) {
        result.best_val_top1 = val.size() > 0 ? val_top1() : 1.0;
        return result;
    }

    const std::size_t n = train.size();
    const auto batch = static_cast<std::size_t>(config.batch_size);
    const std::size_t per_epoch = (n + batch - 1) / batch;
    OptimizerState opt(config.sgd, std::max<std::size_t>(1, per_epoch * static_cast<std::size_t>(config.epochs)));

    std::vector<double> grad_gl(model.encoder_gl.parameter_count());
    std::vector<double> grad_a(model.encoder_a.parameter_count());
    std::vector<double> gate(1);
    std::vector<double> grad_gate(1);
    const std::uint8_t no_decay[1] = {0};
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});

    MoEClassifier best = model;
    result.best_val_top1 = -1.0;
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t end = std::min(n, start + batch);
            ToyEncoder::Cache cache_gl;
            ToyEncoder::Cache cache_a;
            const Matrix emb_gl = model.encoder_gl.forward(gather_rows(train.gl.inputs, order, start, end), cache_gl);
            const Matrix emb_a = model.encoder_a.forward(gather_rows(train.aerial_inputs, order, start, end), cache_a);
            const Matrix f_gl = featurize(emb_gl, config.normalize_features);
            const Matrix f_a = featurize(emb_a, config.normalize_features);
            const CrossEntropy ce = label_smoothing_ce(moe_forward(model.head, f_gl, f_a),
                                                       gather(targets, order, start, end), config.label_smoothing);
            MoEGradients g = moe_backward(model.head, f_gl, f_a, ce.grad);
            gate[0] = model.head.gate;
            grad_gate[0] = g.gate;
            std::vector<ParamBlock> blocks{{model.head.proj_gl.params(), g.proj_gl, model.head.proj_gl.decay_mask()},
                                           {model.head.proj_a.params(), g.proj_a, model.head.proj_a.decay_mask()},
                                           {gate, grad_gate, no_decay}};
            if (!config.freeze_encoder) {
                std::fill(grad_gl.begin(), grad_gl.end(), 0.0);
                std::fill(grad_a.begin(), grad_a.end(), 0.0);
                model.encoder_gl.backward(
                    cache_gl, config.normalize_features ? l2_normalize_backward(emb_gl, f_gl, g.e_gl) : g.e_gl, grad_gl);
                model.encoder_a.backward(
                    cache_a, config.normalize_features ? l2_normalize_backward(emb_a, f_a, g.e_a) : g.e_a, grad_a);
                blocks.push_back({model.encoder_gl.params(), grad_gl, model.encoder_gl.decay_mask()});
                blocks.push_back({model.encoder_a.params(), grad_a, model.encoder_a.decay_mask()});
            }
            sgd_momentum_step(blocks, opt);
            model.head.gate = gate[0];
        }
        const double acc = val.size() > 0 ? val_top1() : 0.0;
        if (!config.early_stopping || acc > result.best_val_top1) {
            result.best_val_top1 = acc;
            result.best_epoch = epoch;
            best = model;
        }
    }
    if (config.epochs == 0) result.best_val_top1 = val.size() > 0 ? val_top1() : 0.0;
    if (config.epochs > 0) model = std::move(best);
    return result;
}

PredictionSet predict(const MoEClassifier& classifier, const PairedLabeledSet& samples,
                      const std::optional<FrequencyBins>& bins_by_class_id) {
    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (std::binary_search(classifier.class_ids.begin(), classifier.class_ids.end(), samples.gl.labels[i])) {
            kept.push_back(i);
        }
    }
    PredictionSet p;
    p.scores = classifier.scores(gather_rows(samples.gl.inputs, kept, 0, kept.size()),
                                 gather_rows(samples.aerial_inputs, kept, 0, kept.size()));
    p.true_class = to_indices(gather(samples.gl.labels, kept, 0, kept.size()), classifier.class_ids);
    p.group_id = gather(samples.gl.groups, kept, 0, kept.size());
    p.class_bins = bins_by_column(bins_by_class_id, classifier.class_ids);
    return p;
}

}  // namespace crisp
