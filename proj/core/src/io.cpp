#include "crisp/io.hpp"

#include "crisp/errors.hpp"

#include <bit>
#include <charconv>
#include <fstream>
#include <sstream>

namespace crisp::io {

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path.string() + "' for reading");
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out) throw Error("failed writing '" + path.string() + "'");
}

json read_json(const fs::path& path) {
    try {
        return json::parse(read_text(path));
    } catch (const json::parse_error& e) {
        throw FormatError("'" + path.string() + "' is not valid JSON: " + e.what());
    }
}

void write_json(const fs::path& path, const json& value) { write_text(path, value.dump(2) + "\n"); }

namespace {

template <class T>
T field(const json& j, const char* key) {
    const auto it = j.find(key);
    if (it == j.end()) throw FormatError(std::string("missing field '") + key + "'");
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        throw FormatError(std::string("field '") + key + "' has the wrong type");
    }
}

template <class T>
T field_or(const json& j, const char* key, T fallback) {
    return j.contains(key) ? field<T>(j, key) : fallback;
}

}  // namespace

// Observations -------------------------------------------------------------

json to_json(const ObservationRecord& obs) {
    json j;
    j["obs_id"] = obs.obs_id;
    j["lat"] = obs.lat;
    j["lon"] = obs.lon;
    j["class_id"] = obs.class_id ? json(*obs.class_id) : json(nullptr);
    j["research_grade"] = obs.research_grade;
    j["species_level"] = obs.species_level;
    j["group_id"] = obs.group_id;
    j["n_ground_views"] = obs.n_ground_views;
    return j;
}

ObservationRecord observation_from_json(const json& j) {
    if (!j.is_object()) throw FormatError("observation record must be a JSON object");
    ObservationRecord o;
    o.obs_id = field<std::string>(j, "obs_id");
    o.lat = field<double>(j, "lat");
    o.lon = field<double>(j, "lon");
    if (j.contains("class_id") && !j.at("class_id").is_null()) o.class_id = field<int>(j, "class_id");
    o.research_grade = field_or<bool>(j, "research_grade", false);
    o.species_level = field_or<bool>(j, "species_level", false);
    o.group_id = field_or<int>(j, "group_id", 0);
    o.n_ground_views = field_or<int>(j, "n_ground_views", 1);
    return o;
}

void write_observations(const fs::path& path, const std::vector<ObservationRecord>& obs,
                        const std::vector<int>& true_class) {
    if (!true_class.empty() && true_class.size() != obs.size()) {
        throw ShapeMismatchError("one true class per observation required");
    }
    std::string text;
    for (std::size_t i = 0; i < obs.size(); ++i) {
        json j = to_json(obs[i]);
        if (!true_class.empty()) j["true_class"] = true_class[i];
        text += j.dump();
        text += '\n';
    }
    write_text(path, text);
}

std::vector<ObservationRecord> read_observations(const fs::path& path, std::vector<int>* true_class) {
    std::istringstream in(read_text(path));
    std::vector<ObservationRecord> out;
    if (true_class) true_class->clear();
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error&) {
            throw FormatError(path.string() + ":" + std::to_string(line_no) + ": not a JSON object");
        }
        try {
            out.push_back(observation_from_json(j));
            out.back().validate();
            if (true_class) true_class->push_back(field_or<int>(j, "true_class", out.back().class_id.value_or(-1)));
        } catch (const Error& e) {
            throw FormatError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

// Matrices -----------------------------------------------------------------

std::string encode_f64(const double* values, std::size_t n) {
    std::string bytes(n * 8, '\0');
    for (std::size_t i = 0; i < n; ++i) {
        const auto bits = std::bit_cast<std::uint64_t>(values[i]);
        for (int b = 0; b < 8; ++b) bytes[i * 8 + static_cast<std::size_t>(b)] = static_cast<char>((bits >> (8 * b)) & 0xFF);
    }
    return bytes;
}

std::vector<double> decode_f64(std::string_view bytes) {
    if (bytes.size() % 8 != 0) throw FormatError("float64 blob length is not a multiple of 8");
    std::vector<double> out(bytes.size() / 8);
    for (std::size_t i = 0; i < out.size(); ++i) {
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b) {
            bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i * 8 + static_cast<std::size_t>(b)]))
                    << (8 * b);
        }
        out[i] = std::bit_cast<double>(bits);
    }
    return out;
}

void write_matrix(const fs::path& header, const Matrix& data, const std::vector<std::string>& row_ids) {
    if (static_cast<Eigen::Index>(row_ids.size()) != data.rows()) {
        throw ShapeMismatchError("one row id per matrix row required");
    }
    fs::path blob = header;
    blob.replace_extension(".bin");
    json h;
    h["format"] = "crisp-matrix-v1";
    h["dtype"] = "<f8";
    h["shape"] = {data.rows(), data.cols()};
    h["row_ids"] = row_ids;
    h["data_file"] = blob.filename().string();
    write_json(header, h);
    write_text(blob, encode_f64(data.data(), static_cast<std::size_t>(data.size())));
}

MatrixFile read_matrix(const fs::path& header) {
    const json h = read_json(header);
    if (field<std::string>(h, "dtype") != "<f8") throw FormatError("only little-endian float64 matrices are supported");
    const auto shape = field<std::vector<std::int64_t>>(h, "shape");
    if (shape.size() != 2 || shape[0] < 0 || shape[1] < 0) throw FormatError("matrix shape must be [rows, cols]");
    MatrixFile m;
    m.row_ids = field<std::vector<std::string>>(h, "row_ids");
    if (static_cast<std::int64_t>(m.row_ids.size()) != shape[0]) throw FormatError("row_ids disagree with shape");
    const std::vector<double> values = decode_f64(read_text(header.parent_path() / field<std::string>(h, "data_file")));
    if (static_cast<std::int64_t>(values.size()) != shape[0] * shape[1]) {
        throw FormatError("matrix blob size disagrees with its header");
    }
    m.data = Eigen::Map<const Matrix>(values.data(), shape[0], shape[1]);
    return m;
}

// Synthetic corpora --------------------------------------------------------

json to_json(const SynthConfig& c) {
    return json{{"n_classes", c.n_classes},
                {"n_observations", c.n_observations},
                {"tail_exponent", c.tail_exponent},
                {"view_dim_gl", c.view_dim_gl},
                {"view_dim_a", c.view_dim_a},
                {"shared_signal", c.shared_signal},
                {"cluster_scale_m", c.cluster_scale_m},
                {"mean_views_per_obs", c.mean_views_per_obs},
                {"noise_sigma", c.noise_sigma},
                {"seed", c.seed},
                {"latent_dim", c.latent_dim},
                {"n_clusters", c.n_clusters},
                {"location_weight", c.location_weight},
                {"location_length_scale_m", c.location_length_scale_m},
                {"private_scale", c.private_scale},
                {"origin_lat", c.origin_lat},
                {"origin_lon", c.origin_lon},
                {"window_deg", c.window_deg},
                {"group_cell_deg", c.group_cell_deg},
                {"research_grade_fraction", c.research_grade_fraction},
                {"species_level_fraction", c.species_level_fraction},
                {"aerial_raster_size", c.aerial_raster_size},
                {"raster_texture_sigma", c.raster_texture_sigma}};
}

SynthConfig synth_config_from_json(const json& j, SynthConfig base) {
    if (!j.is_object()) throw ConfigError("synthetic config must be a JSON object");
    json merged = to_json(base);
    for (const auto& [key, value] : j.items()) {
        if (!merged.contains(key)) throw ConfigError("unknown synthetic config key '" + key + "'");
        const bool want_int = merged[key].is_number_integer();
        if (want_int ? !value.is_number_integer() : !value.is_number()) {
            throw ConfigError("synthetic config key '" + key + "' needs " + (want_int ? "an integer" : "a number"));
        }
        if (key == "seed" && value.is_number_integer() && value.get<std::int64_t>() < 0) {
            throw ConfigError("seed must be non-negative");
        }
        merged[key] = value;
    }
    SynthConfig c;
    c.n_classes = merged["n_classes"].get<int>();
    c.n_observations = merged["n_observations"].get<int>();
    c.tail_exponent = merged["tail_exponent"].get<double>();
    c.view_dim_gl = merged["view_dim_gl"].get<int>();
    c.view_dim_a = merged["view_dim_a"].get<int>();
    c.shared_signal = merged["shared_signal"].get<double>();
    c.cluster_scale_m = merged["cluster_scale_m"].get<double>();
    c.mean_views_per_obs = merged["mean_views_per_obs"].get<double>();
    c.noise_sigma = merged["noise_sigma"].get<double>();
    c.seed = merged["seed"].get<std::uint64_t>();
    c.latent_dim = merged["latent_dim"].get<int>();
    c.n_clusters = merged["n_clusters"].get<int>();
    c.location_weight = merged["location_weight"].get<double>();
    c.location_length_scale_m = merged["location_length_scale_m"].get<double>();
    c.private_scale = merged["private_scale"].get<double>();
    c.origin_lat = merged["origin_lat"].get<double>();
    c.origin_lon = merged["origin_lon"].get<double>();
    c.window_deg = merged["window_deg"].get<double>();
    c.group_cell_deg = merged["group_cell_deg"].get<double>();
    c.research_grade_fraction = merged["research_grade_fraction"].get<double>();
    c.species_level_fraction = merged["species_level_fraction"].get<double>();
    c.aerial_raster_size = merged["aerial_raster_size"].get<int>();
    c.raster_texture_sigma = merged["raster_texture_sigma"].get<double>();
    return c;
}

void write_corpus(const fs::path& dir, const SynthCorpus& corpus) {
    fs::create_directories(dir);
    write_observations(dir / "observations.jsonl", corpus.observations, corpus.true_class);
    write_json(dir / "synth_config.json", to_json(corpus.config));

    Eigen::Index rows = 0;
    for (const Matrix& m : corpus.ground_views) rows += m.rows();
    const Eigen::Index dim_gl = corpus.ground_views.empty() ? 0 : corpus.ground_views.front().cols();
    Matrix gl(rows, dim_gl);
    std::vector<std::string> gl_ids;
    gl_ids.reserve(static_cast<std::size_t>(rows));
    Eigen::Index r = 0;
    for (std::size_t o = 0; o < corpus.size(); ++o) {
        const Matrix& m = corpus.ground_views[o];
        gl.middleRows(r, m.rows()) = m;
        r += m.rows();
        for (Eigen::Index v = 0; v < m.rows(); ++v) gl_ids.push_back(corpus.observations[o].obs_id + ":" + std::to_string(v));
    }
    write_matrix(dir / "ground_views.json", gl, gl_ids);

    std::vector<std::string> a_ids;
    a_ids.reserve(corpus.size());
    for (const auto& o : corpus.observations) a_ids.push_back(o.obs_id);
    write_matrix(dir / "aerial_views.json", corpus.aerial_views, a_ids);
}

SynthCorpus read_corpus(const fs::path& dir) {
    SynthCorpus c;
    c.config = synth_config_from_json(read_json(dir / "synth_config.json"));
    c.observations = read_observations(dir / "observations.jsonl", &c.true_class);

    MatrixFile aerial = read_matrix(dir / "aerial_views.json");
    if (aerial.row_ids.size() != c.size()) throw FormatError("aerial views disagree with the observation count");
    for (std::size_t o = 0; o < c.size(); ++o) {
        if (aerial.row_ids[o] != c.observations[o].obs_id) throw FormatError("aerial view rows out of order");
    }
    c.aerial_views = std::move(aerial.data);

    const MatrixFile gl = read_matrix(dir / "ground_views.json");
    Eigen::Index r = 0;
    for (const auto& o : c.observations) {
        const auto n = static_cast<Eigen::Index>(o.n_ground_views);
        if (r + n > gl.data.rows()) throw FormatError("ground views missing for '" + o.obs_id + "'");
        for (Eigen::Index v = 0; v < n; ++v) {
            if (gl.row_ids[static_cast<std::size_t>(r + v)] != o.obs_id + ":" + std::to_string(v)) {
                throw FormatError("ground view rows out of order at '" + o.obs_id + "'");
            }
        }
        c.ground_views.emplace_back(gl.data.middleRows(r, n));
        r += n;
    }
    if (r != gl.data.rows()) throw FormatError("ground view file has extra rows");
    return c;
}

// Split manifests ----------------------------------------------------------

std::string lambda_key(double lambda) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, lambda);
    return std::string(buf, res.ptr);
}

namespace {

json summary_json(const SplitSummary& s) {
    return json{{"blocks", s.blocks},
                {"observations_before_filtering", s.observations_before_filtering},
                {"observations", s.observations},
                {"labeled_train", s.labeled_train},
                {"dropped_by_proximity", s.dropped_by_proximity},
                {"dropped_by_quality", s.dropped_by_quality},
                {"dropped_by_class", s.dropped_by_class}};
}

SplitSummary summary_from(const json& j) {
    SplitSummary s;
    s.blocks = field<std::map<std::string, std::size_t>>(j, "blocks");
    s.observations_before_filtering = field<std::map<std::string, std::size_t>>(j, "observations_before_filtering");
    s.observations = field<std::map<std::string, std::size_t>>(j, "observations");
    s.labeled_train = field<std::size_t>(j, "labeled_train");
    s.dropped_by_proximity = field<std::size_t>(j, "dropped_by_proximity");
    s.dropped_by_quality = field<std::size_t>(j, "dropped_by_quality");
    s.dropped_by_class = field<std::size_t>(j, "dropped_by_class");
    return s;
}

}  // namespace

json to_json(const SplitManifest& m) {
    json blocks = json::array();
    for (const auto& [id, split] : m.block_assignment) {
        blocks.push_back({{"lat_index", id.lat_index}, {"lon_index", id.lon_index}, {"split", to_string(split)}});
    }
    json obs = json::object();
    for (const auto& [id, split] : m.obs_assignment) obs[id] = to_string(split);
    json lambdas = json::object();
    for (const auto& [lambda, ids] : m.lambda_subsets) lambdas[lambda_key(lambda)] = ids;
    return json{{"format", "crisp-split-manifest-v1"},
                {"cell_deg", m.cell_deg},
                {"proximity_m", m.proximity_m},
                {"block_assignment", blocks},
                {"obs_assignment", obs},
                {"labeled_train", m.labeled_train},
                {"lambda_subsets", lambdas},
                {"class_universe", m.class_universe},
                {"summary", summary_json(m.summary)}};
}

SplitManifest manifest_from_json(const json& j) {
    if (!j.is_object()) throw FormatError("manifest must be a JSON object");
    SplitManifest m;
    m.cell_deg = field<double>(j, "cell_deg");
    m.proximity_m = field<double>(j, "proximity_m");
    for (const json& b : field<json>(j, "block_assignment")) {
        m.block_assignment[BlockId{field<std::int64_t>(b, "lat_index"), field<std::int64_t>(b, "lon_index")}] =
            parse_split(field<std::string>(b, "split"));
    }
    const json obs = field<json>(j, "obs_assignment");
    for (const auto& [id, split] : obs.items()) {
        m.obs_assignment[id] = parse_split(split.get<std::string>());
    }
    m.labeled_train = field<std::set<std::string>>(j, "labeled_train");
    const json lambdas = field<json>(j, "lambda_subsets");
    for (const auto& [key, ids] : lambdas.items()) {
        double lambda = 0.0;
        const auto res = std::from_chars(key.data(), key.data() + key.size(), lambda);
        if (res.ec != std::errc{} || res.ptr != key.data() + key.size()) {
            throw FormatError("lambda key '" + key + "' is not a decimal number");
        }
        m.lambda_subsets[lambda] = ids.get<std::set<std::string>>();
    }
    m.class_universe = field<std::set<int>>(j, "class_universe");
    if (j.contains("summary")) m.summary = summary_from(j.at("summary"));
    return m;
}

// Checkpoints --------------------------------------------------------------

const CheckpointBlock& Checkpoint::block(const std::string& name) const {
    for (const auto& b : blocks) {
        if (b.name == name) return b;
    }
    throw FormatError("checkpoint has no parameter block '" + name + "'");
}

void write_checkpoint(const fs::path& path, const Checkpoint& ckpt) {
    json blocks = json::array();
    std::size_t offset = 0;
    std::string blob;
    for (const auto& b : ckpt.blocks) {
        blocks.push_back({{"name", b.name}, {"offset", offset}, {"size", b.values.size()}});
        offset += b.values.size();
        blob += encode_f64(b.values.data(), b.values.size());
    }
    const json header{{"format", "crisp-checkpoint-v1"},
                      {"kind", ckpt.kind},
                      {"architecture", ckpt.architecture},
                      {"step", ckpt.step},
                      {"rng_state", ckpt.rng_state},
                      {"dtype", "<f8"},
                      {"blocks", blocks}};
    write_text(path, header.dump() + "\n" + blob);
}

Checkpoint read_checkpoint(const fs::path& path) {
    const std::string text = read_text(path);
    const auto newline = text.find('\n');
    if (newline == std::string::npos) throw FormatError("checkpoint header is not terminated");
    json header;
    try {
        header = json::parse(text.substr(0, newline));
    } catch (const json::parse_error&) {
        throw FormatError("checkpoint header is not valid JSON");
    }
    if (field<std::string>(header, "format") != "crisp-checkpoint-v1") throw FormatError("not a crisp checkpoint");
    const std::vector<double> values = decode_f64(std::string_view(text).substr(newline + 1));

    Checkpoint c;
    c.kind = field<std::string>(header, "kind");
    c.architecture = field<json>(header, "architecture");
    c.step = field<std::size_t>(header, "step");
    c.rng_state = field<std::string>(header, "rng_state");
    for (const json& b : field<json>(header, "blocks")) {
        const auto offset = field<std::size_t>(b, "offset");
        const auto size = field<std::size_t>(b, "size");
        if (offset + size > values.size()) throw FormatError("checkpoint blob is truncated");
        c.blocks.push_back({field<std::string>(b, "name"),
                            std::vector<double>(values.begin() + static_cast<std::ptrdiff_t>(offset),
                                                values.begin() + static_cast<std::ptrdiff_t>(offset + size))});
    }
    return c;
}

json to_json(const EncoderArch& arch) {
    return json{{"input_dim", arch.input_dim}, {"hidden_dims", arch.hidden_dims}, {"embed_dim", arch.embed_dim}};
}

EncoderArch encoder_arch_from_json(const json& j) {
    return EncoderArch{field<int>(j, "input_dim"), field<std::vector<int>>(j, "hidden_dims"), field<int>(j, "embed_dim")};
}

namespace {

std::vector<double> copy(std::span<const double> s) { return {s.begin(), s.end()}; }

ToyEncoder encoder_from(const Checkpoint& c, const char* arch_key, const char* block) {
    return ToyEncoder(encoder_arch_from_json(field<json>(c.architecture, arch_key)), c.block(block).values);
}

void expect_kind(const Checkpoint& c, const char* kind) {
    if (c.kind != kind) throw FormatError("expected a '" + std::string(kind) + "' checkpoint, got '" + c.kind + "'");
}

}  // namespace

Checkpoint to_checkpoint(const EncoderPair& pair, std::size_t step, const std::string& rng_state) {
    Checkpoint c;
    c.kind = "encoder_pair";
    c.architecture = json{{"gl", to_json(pair.gl.arch())}, {"a", to_json(pair.a.arch())}};
    c.step = step;
    c.rng_state = rng_state;
    c.blocks = {{"gl", copy(pair.gl.params())}, {"a", copy(pair.a.params())}, {"w", {pair.weight.w}}};
    return c;
}

EncoderPair encoder_pair_from(const Checkpoint& c) {
    expect_kind(c, "encoder_pair");
    EncoderPair p;
    p.gl = encoder_from(c, "gl", "gl");
    p.a = encoder_from(c, "a", "a");
    const auto& w = c.block("w").values;
    if (w.size() != 1) throw FormatError("loss weight block must hold one value");
    p.weight.w = w[0];
    return p;
}

Checkpoint to_checkpoint(const Classifier& m) {
    Checkpoint c;
    c.kind = "classifier";
    c.architecture = json{{"encoder", to_json(m.encoder.arch())},
                          {"head", to_json(m.head.arch())},
                          {"class_ids", m.class_ids},
                          {"normalize_features", m.normalize_features}};
    c.blocks = {{"encoder", copy(m.encoder.params())}, {"head", copy(m.head.params())}};
    return c;
}

Classifier classifier_from(const Checkpoint& c) {
    expect_kind(c, "classifier");
    Classifier m;
    m.encoder = encoder_from(c, "encoder", "encoder");
    m.head = encoder_from(c, "head", "head");
    m.class_ids = field<std::vector<int>>(c.architecture, "class_ids");
    m.normalize_features = field<bool>(c.architecture, "normalize_features");
    return m;
}

Checkpoint to_checkpoint(const MoEClassifier& m) {
    Checkpoint c;
    c.kind = "moe_classifier";
    c.architecture = json{{"encoder_gl", to_json(m.encoder_gl.arch())},
                          {"encoder_a", to_json(m.encoder_a.arch())},
                          {"proj_gl", to_json(m.head.proj_gl.arch())},
                          {"proj_a", to_json(m.head.proj_a.arch())},
                          {"class_ids", m.class_ids},
                          {"normalize_features", m.normalize_features}};
    c.blocks = {{"encoder_gl", copy(m.encoder_gl.params())},
                {"encoder_a", copy(m.encoder_a.params())},
                {"proj_gl", copy(m.head.proj_gl.params())},
                {"proj_a", copy(m.head.proj_a.params())},
                {"gate", {m.head.gate}}};
    return c;
}

MoEClassifier moe_classifier_from(const Checkpoint& c) {
    expect_kind(c, "moe_classifier");
    MoEClassifier m;
    m.encoder_gl = encoder_from(c, "encoder_gl", "encoder_gl");
    m.encoder_a = encoder_from(c, "encoder_a", "encoder_a");
    m.head.proj_gl = encoder_from(c, "proj_gl", "proj_gl");
    m.head.proj_a = encoder_from(c, "proj_a", "proj_a");
    const auto& gate = c.block("gate").values;
    if (gate.size() != 1) throw FormatError("gate block must hold one value");
    m.head.gate = gate[0];
    m.class_ids = field<std::vector<int>>(c.architecture, "class_ids");
    m.normalize_features = field<bool>(c.architecture, "normalize_features");
    return m;
}

// Predictions --------------------------------------------------------------

namespace {

FrequencyBin parse_bin(const std::string& s) {
    if (s == "frequent") return FrequencyBin::kFrequent;
    if (s == "common") return FrequencyBin::kCommon;
    if (s == "rare") return FrequencyBin::kRare;
    throw FormatError("unknown frequency bin '" + s + "'");
}

}  // namespace

PredictionSet predictions_from_json(const json& j) {
    PredictionSet p;
    const auto rows = field<std::vector<std::vector<double>>>(j, "scores");
    const std::size_t cols = rows.empty() ? 0 : rows.front().size();
    p.scores.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != cols) throw FormatError("score rows differ in length");
        for (std::size_t k = 0; k < cols; ++k) p.scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
    }
    p.true_class = field<std::vector<int>>(j, "true_class");
    if (j.contains("group_id") && !j.at("group_id").is_null()) p.group_id = field<std::vector<int>>(j, "group_id");
    if (j.contains("class_bins") && !j.at("class_bins").is_null()) {
        FrequencyBins bins;
        for (const auto& [key, value] : j.at("class_bins").items()) {
            bins.bin_of[std::stoi(key)] = parse_bin(value.get<std::string>());
        }
        p.class_bins = bins;
    }
    p.validate();
    return p;
}

json to_json(const PredictionSet& p) {
    json scores = json::array();
    for (Eigen::Index i = 0; i < p.scores.rows(); ++i) {
        std::vector<double> row(p.scores.row(i).begin(), p.scores.row(i).end());
        scores.push_back(row);
    }
    json j{{"scores", scores}, {"true_class", p.true_class}};
    if (p.group_id) j["group_id"] = *p.group_id;
    if (p.class_bins) {
        json bins = json::object();
        for (const auto& [cls, bin] : p.class_bins->bin_of) bins[std::to_string(cls)] = std::string(to_string(bin));
        j["class_bins"] = bins;
    }
    return j;
}

}  // namespace crisp::io
