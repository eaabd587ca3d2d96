#pragma once

// On-disk formats.
//
//   observations.jsonl   one JSON object per observation; unknown fields ignored
//   <name>.json + .bin   matrix sidecar: {"format", "dtype": "<f8", "shape",
//                        "row_ids", "data_file"} plus a little-endian float64 blob
//   manifest.json        SplitManifest, lambda keys as decimal strings
//   *.ckpt               one line of JSON header, then the float64 parameter blob

#include "crisp/common.hpp"
#include "crisp/split.hpp"
#include "crisp/synth.hpp"
#include "crisp/train.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace crisp::io {

namespace fs = std::filesystem;
using nlohmann::json;

std::string read_text(const fs::path& path);
/// Creates parent directories as needed.
void write_text(const fs::path& path, const std::string& text);
json read_json(const fs::path& path);
/// Pretty-printed with two-space indentation and a trailing newline.
void write_json(const fs::path& path, const json& value);

// Observations -------------------------------------------------------------

json to_json(const ObservationRecord& obs);
/// Throws FormatError on missing or mistyped fields.
ObservationRecord observation_from_json(const json& j);

/// `true_class`, when non-empty, adds each observation's generating class.
void write_observations(const fs::path& path, const std::vector<ObservationRecord>& obs,
                        const std::vector<int>& true_class = {});
std::vector<ObservationRecord> read_observations(const fs::path& path, std::vector<int>* true_class = nullptr);

// Matrices -----------------------------------------------------------------

struct MatrixFile {
    Matrix data;
    std::vector<std::string> row_ids;
};

/// Writes `header` and a sibling blob named after it with a .bin extension.
void write_matrix(const fs::path& header, const Matrix& data, const std::vector<std::string>& row_ids);
MatrixFile read_matrix(const fs::path& header);

std::string encode_f64(const double* values, std::size_t n);
std::vector<double> decode_f64(std::string_view bytes);

// Synthetic corpora --------------------------------------------------------

json to_json(const SynthConfig& config);
/// Starts from `base` and applies every key of `j`; unknown keys and
/// mistyped values throw ConfigError.
SynthConfig synth_config_from_json(const json& j, SynthConfig base = {});

/// observations.jsonl, synth_config.json, ground_views.{json,bin},
/// aerial_views.{json,bin}. Ground rows are named "<obs_id>:<view>".
void write_corpus(const fs::path& dir, const SynthCorpus& corpus);
/// Loads views and records; generating factors are not stored and stay empty.
SynthCorpus read_corpus(const fs::path& dir);

// Split manifests ----------------------------------------------------------

/// Shortest decimal string that reads back as the same double ("0.0025").
std::string lambda_key(double lambda);

json to_json(const SplitManifest& manifest);
SplitManifest manifest_from_json(const json& j);

// Checkpoints --------------------------------------------------------------

struct CheckpointBlock {
    std::string name;
    std::vector<double> values;
};

struct Checkpoint {
    std::string kind;
    json architecture = json::object();
    std::size_t step = 0;
    std::string rng_state;
    std::vector<CheckpointBlock> blocks;

    [[nodiscard]] const CheckpointBlock& block(const std::string& name) const;
};

void write_checkpoint(const fs::path& path, const Checkpoint& ckpt);
/// Throws FormatError on a malformed header or truncated blob.
Checkpoint read_checkpoint(const fs::path& path);

json to_json(const EncoderArch& arch);
EncoderArch encoder_arch_from_json(const json& j);

Checkpoint to_checkpoint(const EncoderPair& pair, std::size_t step, const std::string& rng_state);
EncoderPair encoder_pair_from(const Checkpoint& ckpt);

Checkpoint to_checkpoint(const Classifier& classifier);
Classifier classifier_from(const Checkpoint& ckpt);

Checkpoint to_checkpoint(const MoEClassifier& classifier);
MoEClassifier moe_classifier_from(const Checkpoint& ckpt);

// Predictions --------------------------------------------------------------

/// {"scores": [[...]], "true_class": [...], "group_id": [...]?,
///  "class_bins": {"<column>": "frequent"|"common"|"rare"}?}
PredictionSet predictions_from_json(const json& j);
json to_json(const PredictionSet& p);

}  // namespace crisp::io
