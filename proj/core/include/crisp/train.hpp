#pragma once

// Desk-scale training: contrastive pre-training of a ground/aerial encoder
// pair, supervised fine-tuning with label smoothing and early stopping,
// frozen-feature linear probing, and mixture-of-experts fusion.

#include "crisp/common.hpp"
#include "crisp/encoder.hpp"
#include "crisp/loss.hpp"
#include "crisp/metrics.hpp"
#include "crisp/moe.hpp"
#include "crisp/optim.hpp"
#include "crisp/synth.hpp"

#include <functional>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace crisp {

// ---------------------------------------------------------------------------
// Label-smoothed cross-entropy

inline constexpr double kDefaultLabelSmoothing = 0.1;

struct CrossEntropy {
    double loss = 0.0;
    Matrix grad;  // d loss / d logits
};

/// Cross-entropy of one logit row against the smoothed target
/// (1 - epsilon) * onehot(target) + epsilon / K.
/// Throws InvalidTargetError for K < 2, a target out of range or epsilon
/// outside [0, 1).
CrossEntropy label_smoothing_ce(const Eigen::Ref<const Eigen::RowVectorXd>& logits, int target,
                                double epsilon = kDefaultLabelSmoothing);

/// Mean of label_smoothing_ce over the rows of `logits`.
CrossEntropy label_smoothing_ce(const Matrix& logits, const std::vector<int>& targets,
                                double epsilon = kDefaultLabelSmoothing);

// ---------------------------------------------------------------------------
// Contrastive pre-training

enum class Objective { kStandard, kAugmented, kManyToOne, kParameterized };

/// "standard", "aug", "m2o", "par". Throws ConfigError otherwise.
Objective parse_objective(std::string_view name);
std::string_view to_string(Objective objective);

struct PretrainConfig {
    Objective objective = Objective::kStandard;
    int epochs = 12;
    int batch_size = 350;
    SgdConfig sgd{};
    double log_inverse_temperature = kDefaultLogInverseTemperature;
    /// Overrides log_inverse_temperature when set.
    std::optional<double> tau;
    double radius_m = kCoLocationRadiusM;
    bool dedupe_denominator = false;
    int hidden_dim = 64;
    int embed_dim = 32;
    int crop_size = 8;
    std::uint64_t seed = 0;

    [[nodiscard]] Temperature temperature() const;
    void validate() const;
};

struct EncoderPair {
    ToyEncoder gl;
    ToyEncoder a;
    LossWeight weight;

    friend bool operator==(const EncoderPair&, const EncoderPair&) = default;
};

/// The freshly initialized pair pretrain() starts from for this corpus and
/// config (same seed, same draws).
EncoderPair init_encoder_pair(const SynthCorpus& corpus, const PretrainConfig& config);

struct EpochLog {
    int epoch = 0;
    double loss = 0.0;        // mean minibatch loss over the epoch
    double lr = 0.0;          // learning rate of the epoch's first step
    double mix = 0.5;         // sigmoid(w) at the start of the epoch
    double wall_time_s = 0.0;
};

struct PretrainResult {
    EncoderPair encoders;
    std::vector<EpochLog> history;
    /// Objective on a fixed pass (every pool observation in order, first
    /// ground view, unaugmented aerial view) before and after training.
    double initial_eval_loss = 0.0;
    double final_eval_loss = 0.0;
    std::size_t steps = 0;
    std::string rng_state;
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// Minibatches sample observations; each contributes one uniformly chosen
/// ground view and its aerial view, so aerial views are unique within a batch.
/// The augmented objective feeds per-channel means of an augmented aerial
/// raster crop instead of the aerial feature vector.
PretrainResult pretrain(const SynthCorpus& corpus, const std::vector<std::size_t>& pool, const PretrainConfig& config,
                        const EpochCallback& on_epoch = {});

/// Objective value over the fixed evaluation pass described in PretrainResult.
double evaluate_pretrain_loss(const SynthCorpus& corpus, const std::vector<std::size_t>& pool,
                              const EncoderPair& encoders, const PretrainConfig& config);

// ---------------------------------------------------------------------------
// Supervised heads

enum class View { kGround, kAerial };

View parse_view(std::string_view name);
std::string_view to_string(View view);

/// Samples of one view with class labels and eco-group tags.
struct LabeledSet {
    Matrix inputs;
    std::vector<int> labels;
    std::vector<int> groups;
    std::vector<std::string> obs_ids;

    [[nodiscard]] std::size_t size() const { return labels.size(); }
};

/// One sample per ground view (or per observation for the aerial view) of
/// the listed observations whose class is in `classes` (all labeled
/// observations when `classes` is empty).
LabeledSet labeled_samples(const SynthCorpus& corpus, const std::vector<std::string>& obs_ids, View view,
                           const std::set<int>& classes = {});

struct FinetuneConfig {
    int epochs = 25;
    int batch_size = 256;
    SgdConfig sgd{};
    double label_smoothing = kDefaultLabelSmoothing;
    bool freeze_encoder = false;
    /// L2-normalize embeddings before the linear head.
    bool normalize_features = true;
    bool early_stopping = true;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Encoder followed by a linear head over `classes` (column j scores class_ids[j]).
struct Classifier {
    ToyEncoder encoder;
    ToyEncoder head;
    std::vector<int> class_ids;
    bool normalize_features = true;

    [[nodiscard]] Matrix scores(const Matrix& inputs) const;
};

struct FinetuneResult {
    Classifier classifier;
    int best_epoch = 0;
    double best_val_top1 = 0.0;
    std::vector<double> val_top1_history;
};

/// Trains a fresh linear head (and the encoder unless frozen) with
/// label-smoothed cross-entropy, checking validation Top-1 after every epoch
/// and restoring the best epoch. Throws EmptySubsetError on an empty train set.
FinetuneResult finetune(const ToyEncoder& encoder, const LabeledSet& train, const LabeledSet& val,
                        const FinetuneConfig& config);

struct ProbeResult {
    Classifier classifier;
    /// Top-1 on `val`, or on `train` when val is empty.
    double accuracy = 0.0;
};

/// finetune() with the encoder frozen.
ProbeResult linear_probe(const ToyEncoder& encoder, const LabeledSet& train, const LabeledSet& val,
                         FinetuneConfig config);

/// Samples whose class the classifier knows, scored and indexed for metrics.
PredictionSet predict(const Classifier& classifier, const LabeledSet& samples,
                      const std::optional<FrequencyBins>& bins_by_class_id = std::nullopt);

// ---------------------------------------------------------------------------
// Mixture of experts

/// Ground views paired with their observation's aerial view.
struct PairedLabeledSet {
    LabeledSet gl;
    Matrix aerial_inputs;  // one row per gl sample

    [[nodiscard]] std::size_t size() const { return gl.size(); }
};

PairedLabeledSet paired_samples(const SynthCorpus& corpus, const std::vector<std::string>& obs_ids,
                                const std::set<int>& classes = {});

struct MoEClassifier {
    ToyEncoder encoder_gl;
    ToyEncoder encoder_a;
    MoEHead head;
    std::vector<int> class_ids;
    bool normalize_features = true;

    [[nodiscard]] Matrix scores(const Matrix& inputs_gl, const Matrix& inputs_a) const;
};

struct MoEResult {
    MoEClassifier classifier;
    int best_epoch = 0;
    double best_val_top1 = 0.0;
};

/// Trains both encoders (unless frozen), both projections and the gate.
MoEResult train_moe(const ToyEncoder& encoder_gl, const ToyEncoder& encoder_a, const PairedLabeledSet& train,
                    const PairedLabeledSet& val, const FinetuneConfig& config);

PredictionSet predict(const MoEClassifier& classifier, const PairedLabeledSet& samples,
                      const std::optional<FrequencyBins>& bins_by_class_id = std::nullopt);

}  // namespace crisp
