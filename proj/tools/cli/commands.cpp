#include "commands.hpp"

#include "config.hpp"

#include "crisp/errors.hpp"
#include "crisp/gradcheck.hpp"
#include "crisp/io.hpp"
#include "crisp/kmeans.hpp"
#include "crisp/metrics.hpp"
#include "crisp/report.hpp"
#include "crisp/split.hpp"
#include "crisp/synth.hpp"
#include "crisp/train.hpp"

#include <CLI11.hpp>

#include <functional>
#include <map>
#include <ostream>

namespace crisp::cli {

namespace {

namespace fs = std::filesystem;

struct Context {
    json config;
    std::ostream& out;
    std::ostream& err;
};

using Handler = std::function<int(Context&)>;

struct Command {
    std::string name;
    std::string help;
    Schema schema;
    Handler handler;
};

// ---------------------------------------------------------------------------
// Config helpers

Key req_string(std::string name) { return {std::move(name), Kind::kString, nullptr, true}; }
Key opt_string(std::string name) { return {std::move(name), Kind::kOptionalString, nullptr, false}; }
Key integer(std::string name, std::int64_t v) { return {std::move(name), Kind::kInteger, v, false}; }
Key number(std::string name, double v) { return {std::move(name), Kind::kNumber, v, false}; }
Key boolean(std::string name, bool v) { return {std::move(name), Kind::kBool, v, false}; }
Key text(std::string name, std::string v) { return {std::move(name), Kind::kString, std::move(v), false}; }

fs::path path(const Context& c, const char* key) { return fs::path(c.config.at(key).get<std::string>()); }

std::optional<fs::path> opt_path(const Context& c, const char* key) {
    const json& v = c.config.at(key);
    if (v.is_null()) return std::nullopt;
    return fs::path(v.get<std::string>());
}

int get_int(const Context& c, const char* key) { return c.config.at(key).get<int>(); }
double get_num(const Context& c, const char* key) { return c.config.at(key).get<double>(); }
bool get_bool(const Context& c, const char* key) { return c.config.at(key).get<bool>(); }
std::string get_str(const Context& c, const char* key) { return c.config.at(key).get<std::string>(); }

std::uint64_t get_seed(const Context& c) {
    const auto seed = c.config.at("seed").get<std::int64_t>();
    if (seed < 0) throw ConfigError("seed must be non-negative");
    return static_cast<std::uint64_t>(seed);
}

void write_resolved(const fs::path& out_dir, const std::string& command, const json& config) {
    json resolved = config;
    resolved["command"] = command;
    io::write_json(out_dir / "resolved_config.json", resolved);
}

// Input files are read through these so that unreadable inputs surface as
// runtime failures rather than configuration errors.
SynthCorpus load_corpus(const Context& c) { return io::read_corpus(path(c, "corpus_dir")); }
SplitManifest load_manifest(const fs::path& p) { return io::manifest_from_json(io::read_json(p)); }

std::vector<std::string> formats_of(const Context& c) {
    std::vector<std::string> out;
    for (const json& f : c.config.at("formats")) {
        out.push_back(f.get<std::string>());
        (void)parse_report_format(out.back());
    }
    return out;
}

void write_report(const fs::path& out_dir, const std::string& stem, const MetricReport& report,
                  const std::vector<std::string>& formats) {
    for (const auto& f : formats) {
        io::write_text(out_dir / (stem + "." + f), emit_report(report, parse_report_format(f)));
    }
}

SgdConfig sgd_of(const Context& c) {
    return SgdConfig{get_num(c, "base_lr"), get_num(c, "momentum"), get_num(c, "weight_decay")};
}

std::vector<std::size_t> ks_of(const Context& c) {
    std::vector<std::size_t> ks;
    for (const json& k : c.config.at("ks")) {
        if (!k.is_number_integer() || k.get<std::int64_t>() < 1) throw ConfigError("every k must be an integer >= 1");
        ks.push_back(k.get<std::size_t>());
    }
    return ks;
}

// ---------------------------------------------------------------------------
// Metric reports

MetricReport metric_report(const PredictionSet& p, const std::string& column, const std::vector<std::size_t>& ks) {
    MetricReport r;
    r.set("n_samples", column, static_cast<double>(p.scores.rows()));
    const bool empty = p.scores.rows() == 0;
    for (std::size_t k : ks) {
        const std::string name = "top" + std::to_string(k);
        r.set(name, column, empty ? std::nullopt : std::optional<double>(topk_accuracy(p, k)));
        r.set(name + "_macro", column, empty ? std::nullopt : std::optional<double>(topk_macro_accuracy(p, k)));
    }
    if (p.group_id) r.set("eco_top1", column, empty ? std::nullopt : std::optional<double>(eco_accuracy(p, 1)));
    if (p.class_bins) {
        const BinnedAccuracy b = empty ? BinnedAccuracy{} : binned_macro_accuracy(p, 1);
        r.set("top1_macro_frequent", column, b.frequent);
        r.set("top1_macro_common", column, b.common);
        r.set("top1_macro_rare", column, b.rare);
    }
    return r;
}

/// Frequency bins from the ground images per class over the labeled train,
/// val and test observations combined.
FrequencyBins class_bins(const SynthCorpus& corpus, const SplitManifest& m, const std::set<int>& classes) {
    std::map<int, std::size_t> counts;
    for (int cls : classes) counts[cls] = 0;
    auto add = [&](const std::string& id) {
        const auto& o = corpus.observations[corpus.index_of(id)];
        if (o.class_id && classes.count(*o.class_id)) counts[*o.class_id] += static_cast<std::size_t>(o.n_ground_views);
    };
    for (const auto& id : m.labeled_train) add(id);
    for (const auto& id : m.ids_in(Split::kVal)) add(id);
    for (const auto& id : m.ids_in(Split::kTest)) add(id);
    return bin_by_frequency(counts);
}

// ---------------------------------------------------------------------------
// gen-data

Schema gen_data_schema() {
    Schema s{req_string("out_dir")};
    const json defaults = io::to_json(SynthConfig{});
    for (const auto& [name, value] : defaults.items()) {
        s.push_back({name, value.is_number_integer() ? Kind::kInteger : Kind::kNumber, value, false});
    }
    return s;
}

int cmd_gen_data(Context& c) {
    json synth = c.config;
    synth.erase("out_dir");
    const SynthConfig sc = io::synth_config_from_json(synth);
    sc.validate();
    const fs::path out_dir = path(c, "out_dir");
    const SynthCorpus corpus = generate(sc);
    io::write_corpus(out_dir, corpus);
    write_resolved(out_dir, "gen-data", c.config);

    const CorpusStats s = corpus_stats(corpus);
    c.out << json{{"observations", s.observations},
                  {"images", s.images},
                  {"classes", s.classes},
                  {"mean_views_per_obs", s.mean_views_per_obs}}
                 .dump()
          << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// split

Schema split_schema() {
    return {req_string("corpus_dir"),
            req_string("out_dir"),
            integer("seed", 0),
            number("cell_deg", kDefaultCellDeg),
            number("proximity_m", kDefaultProximityM),
            number("test_fraction", BlockFractions{}.test),
            number("val_fraction", BlockFractions{}.val),
            {"lambdas", Kind::kNumberList, kDefaultLambdas, false}};
}

int cmd_split(Context& c) {
    const double cell = get_num(c, "cell_deg");
    const double proximity = get_num(c, "proximity_m");
    const BlockFractions fractions{get_num(c, "test_fraction"), get_num(c, "val_fraction")};
    if (!(cell > 0.0)) throw ConfigError("cell_deg must be positive");
    if (proximity < 0.0) throw ConfigError("proximity_m must be non-negative");
    if (fractions.test < 0.0 || fractions.val < 0.0 || fractions.test + fractions.val >= 1.0) {
        throw ConfigError("test_fraction and val_fraction must be non-negative and sum below 1");
    }
    const auto lambdas = c.config.at("lambdas").get<std::vector<double>>();
    for (double l : lambdas) {
        if (!(l > 0.0 && l <= 1.0)) throw ConfigError("every lambda must lie in (0, 1]");
    }

    const std::uint64_t seed = get_seed(c);
    const fs::path out_dir = path(c, "out_dir");
    const SynthCorpus corpus = load_corpus(c);

    Rng rng(seed);
    const BlockAssignment blocks = assign_blocks(blocks_of(corpus.observations, cell), fractions, rng);
    SplitManifest m = build_split(corpus.observations, blocks, SplitOptions{cell, proximity});
    add_lambda_subsets(m, lambdas, rng);

    io::write_json(out_dir / "manifest.json", io::to_json(m));
    write_resolved(out_dir, "split", c.config);

    json sizes = json::object();
    for (const auto& [lambda, ids] : m.lambda_subsets) sizes[io::lambda_key(lambda)] = ids.size();
    c.out << json{{"blocks", m.summary.blocks},
                  {"observations", m.summary.observations},
                  {"labeled_train", m.labeled_train.size()},
                  {"classes", m.class_universe.size()},
                  {"lambda_subsets", sizes}}
                 .dump()
          << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// pretrain

Schema pretrain_schema() {
    const PretrainConfig d;
    return {req_string("corpus_dir"),
            req_string("manifest"),
            req_string("out_dir"),
            text("objective", "standard"),
            integer("epochs", d.epochs),
            integer("batch_size", d.batch_size),
            number("base_lr", d.sgd.base_lr),
            number("momentum", d.sgd.momentum),
            number("weight_decay", d.sgd.weight_decay),
            number("log_inverse_temperature", d.log_inverse_temperature),
            {"tau", Kind::kOptionalNumber, nullptr, false},
            number("radius_m", d.radius_m),
            boolean("dedupe_denominator", d.dedupe_denominator),
            integer("hidden_dim", d.hidden_dim),
            integer("embed_dim", d.embed_dim),
            integer("crop_size", d.crop_size),
            integer("seed", 0)};
}

PretrainConfig pretrain_config_of(const Context& c) {
    PretrainConfig p;
    p.objective = parse_objective(get_str(c, "objective"));
    p.epochs = get_int(c, "epochs");
    p.batch_size = get_int(c, "batch_size");
    p.sgd = sgd_of(c);
    p.log_inverse_temperature = get_num(c, "log_inverse_temperature");
    if (!c.config.at("tau").is_null()) p.tau = get_num(c, "tau");
    p.radius_m = get_num(c, "radius_m");
    p.dedupe_denominator = get_bool(c, "dedupe_denominator");
    p.hidden_dim = get_int(c, "hidden_dim");
    p.embed_dim = get_int(c, "embed_dim");
    p.crop_size = get_int(c, "crop_size");
    p.seed = get_seed(c);
    try {
        p.validate();
    } catch (const NonPositiveTemperatureError& e) {
        throw ConfigError(e.what());
    }
    return p;
}

int cmd_pretrain(Context& c) {
    const PretrainConfig pc = pretrain_config_of(c);
    const fs::path out_dir = path(c, "out_dir");
    const SynthCorpus corpus = load_corpus(c);
    const SplitManifest m = load_manifest(path(c, "manifest"));

    std::vector<std::size_t> pool;
    for (const auto& id : m.ids_in(Split::kTrain)) pool.push_back(corpus.index_of(id));
    if (pool.size() < static_cast<std::size_t>(pc.batch_size)) {
        throw ConfigError("batch_size " + std::to_string(pc.batch_size) + " exceeds the " +
                          std::to_string(pool.size()) + " training observations");
    }

    fs::create_directories(out_dir);
    write_resolved(out_dir, "pretrain", c.config);
    std::string log_lines;
    const PretrainResult r = pretrain(corpus, pool, pc, [&](const EpochLog& e) {
        json line{{"epoch", e.epoch}, {"loss", e.loss}, {"lr", e.lr}, {"wall_time_s", e.wall_time_s}};
        if (pc.objective == Objective::kParameterized) line["sigma_w"] = e.mix;
        c.out << line.dump() << "\n";
        log_lines += line.dump() + "\n";
    });

    io::write_checkpoint(out_dir / "encoders.ckpt", io::to_checkpoint(r.encoders, r.steps, r.rng_state));
    io::write_text(out_dir / "train_log.jsonl", log_lines);
    json history = json::array();
    for (const auto& e : r.history) {
        json h{{"epoch", e.epoch}, {"loss", e.loss}, {"lr", e.lr}};
        if (pc.objective == Objective::kParameterized) h["sigma_w"] = e.mix;
        history.push_back(h);
    }
    const json summary{{"objective", std::string(to_string(pc.objective))},
                       {"pool_size", pool.size()},
                       {"steps", r.steps},
                       {"initial_eval_loss", r.initial_eval_loss},
                       {"final_eval_loss", r.final_eval_loss},
                       {"final_sigma_w", r.encoders.weight.mix()},
                       {"history", history}};
    io::write_json(out_dir / "pretrain_summary.json", summary);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// finetune / probe

Schema finetune_schema(bool probe) {
    const FinetuneConfig d;
    Schema s{req_string("corpus_dir"),
             req_string("manifest"),
             req_string("out_dir"),
             opt_string("encoders"),
             number("lambda", 0.01),
             text("view", "gl"),
             boolean("moe", false),
             integer("epochs", d.epochs),
             integer("batch_size", d.batch_size),
             number("base_lr", d.sgd.base_lr),
             number("momentum", d.sgd.momentum),
             number("weight_decay", d.sgd.weight_decay),
             number("label_smoothing", d.label_smoothing),
             boolean("normalize_features", d.normalize_features),
             boolean("early_stopping", d.early_stopping),
             integer("hidden_dim", PretrainConfig{}.hidden_dim),
             integer("embed_dim", PretrainConfig{}.embed_dim),
             integer("seed", 0),
             {"ks", Kind::kNumberList, json::array({1, 5}), false},
             {"formats", Kind::kStringList, json::array({"json", "csv"}), false}};
    if (!probe) s.push_back(boolean("freeze_encoder", d.freeze_encoder));
    return s;
}

struct LabeledData {
    SynthCorpus corpus;
    SplitManifest manifest;
    double lambda = 0.0;
    std::set<int> classes;
    std::vector<std::string> train_ids;
};

LabeledData labeled_data(const Context& c) {
    LabeledData d{load_corpus(c), load_manifest(path(c, "manifest")), get_num(c, "lambda"), {}, {}};
    const auto it = d.manifest.lambda_subsets.find(d.lambda);
    if (it == d.manifest.lambda_subsets.end()) {
        std::string have;
        for (const auto& [l, ids] : d.manifest.lambda_subsets) have += " " + io::lambda_key(l);
        throw ConfigError("manifest has no subset for lambda " + io::lambda_key(d.lambda) + " (available:" + have + ")");
    }
    d.classes = lambda_class_universe(d.manifest, d.lambda, d.corpus.observations);
    d.train_ids.assign(it->second.begin(), it->second.end());
    return d;
}

EncoderPair encoders_of(const Context& c, const SynthCorpus& corpus) {
    if (const auto p = opt_path(c, "encoders")) return io::encoder_pair_from(io::read_checkpoint(*p));
    PretrainConfig init;
    init.hidden_dim = get_int(c, "hidden_dim");
    init.embed_dim = get_int(c, "embed_dim");
    init.seed = get_seed(c);
    return init_encoder_pair(corpus, init);
}

int cmd_finetune(Context& c, bool probe) {
    FinetuneConfig fc;
    fc.epochs = get_int(c, "epochs");
    fc.batch_size = get_int(c, "batch_size");
    fc.sgd = sgd_of(c);
    fc.label_smoothing = get_num(c, "label_smoothing");
    fc.freeze_encoder = probe || get_bool(c, "freeze_encoder");
    fc.normalize_features = get_bool(c, "normalize_features");
    fc.early_stopping = get_bool(c, "early_stopping");
    fc.seed = get_seed(c);
    fc.validate();
    const View view = parse_view(get_str(c, "view"));
    const bool moe = get_bool(c, "moe");
    const auto ks = ks_of(c);
    const auto formats = formats_of(c);
    const fs::path out_dir = path(c, "out_dir");
    const char* command = probe ? "probe" : "finetune";

    const LabeledData d = labeled_data(c);
    const EncoderPair enc = encoders_of(c, d.corpus);
    const FrequencyBins bins = class_bins(d.corpus, d.manifest, d.classes);
    const auto val_ids = d.manifest.ids_in(Split::kVal);
    const auto test_ids = d.manifest.ids_in(Split::kTest);

    fs::create_directories(out_dir);
    write_resolved(out_dir, command, c.config);

    MetricReport report;
    json summary{{"lambda", d.lambda}, {"classes", d.classes.size()}, {"moe", moe}};
    if (moe) {
        const PairedLabeledSet train = paired_samples(d.corpus, d.train_ids, d.classes);
        const PairedLabeledSet val = paired_samples(d.corpus, val_ids, d.classes);
        const PairedLabeledSet test = paired_samples(d.corpus, test_ids, d.classes);
        const MoEResult r = train_moe(enc.gl, enc.a, train, val, fc);
        io::write_checkpoint(out_dir / "classifier.ckpt", io::to_checkpoint(r.classifier));
        report.merge(metric_report(predict(r.classifier, val, bins), "val", ks));
        report.merge(metric_report(predict(r.classifier, test, bins), "test", ks));
        summary["n_train_samples"] = train.size();
        summary["best_epoch"] = r.best_epoch;
        summary["best_val_top1"] = r.best_val_top1;
        summary["gate_mix"] = r.classifier.head.mix();
    } else {
        const ToyEncoder& encoder = view == View::kGround ? enc.gl : enc.a;
        const LabeledSet train = labeled_samples(d.corpus, d.train_ids, view, d.classes);
        const LabeledSet val = labeled_samples(d.corpus, val_ids, view, d.classes);
        const LabeledSet test = labeled_samples(d.corpus, test_ids, view, d.classes);
        const FinetuneResult r = finetune(encoder, train, val, fc);
        io::write_checkpoint(out_dir / "classifier.ckpt", io::to_checkpoint(r.classifier));
        report.merge(metric_report(predict(r.classifier, val, bins), "val", ks));
        report.merge(metric_report(predict(r.classifier, test, bins), "test", ks));
        summary["n_train_samples"] = train.size();
        summary["view"] = std::string(to_string(view));
        summary["best_epoch"] = r.best_epoch;
        summary["best_val_top1"] = r.best_val_top1;
        summary["val_top1_history"] = r.val_top1_history;
    }
    io::write_json(out_dir / (std::string(command) + "_summary.json"), summary);
    write_report(out_dir, "report", report, formats);
    c.out << emit_report(report, ReportFormat::kJson) << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// eval

Schema eval_schema() {
    return {req_string("out_dir"),
            opt_string("predictions"),
            opt_string("classifier"),
            opt_string("corpus_dir"),
            opt_string("manifest"),
            {"lambda", Kind::kOptionalNumber, nullptr, false},
            text("split", "test"),
            {"ks", Kind::kNumberList, json::array({1, 5}), false},
            {"formats", Kind::kStringList, json::array({"json", "csv"}), false}};
}

int cmd_eval(Context& c) {
    const auto ks = ks_of(c);
    const auto formats = formats_of(c);
    const fs::path out_dir = path(c, "out_dir");
    const auto predictions = opt_path(c, "predictions");
    const auto classifier = opt_path(c, "classifier");
    if (predictions.has_value() == classifier.has_value()) {
        throw ConfigError("give exactly one of 'predictions' and 'classifier'");
    }
    const std::string split_name = get_str(c, "split");

    MetricReport report;
    if (predictions) {
        const PredictionSet p = io::predictions_from_json(io::read_json(*predictions));
        report = metric_report(p, split_name, ks);
    } else {
        const Split split = [&] {
            try {
                return parse_split(split_name);
            } catch (const FormatError& e) {
                throw ConfigError(e.what());
            }
        }();
        if (c.config.at("corpus_dir").is_null() || c.config.at("manifest").is_null()) {
            throw ConfigError("evaluating a classifier needs 'corpus_dir' and 'manifest'");
        }
        const SynthCorpus corpus = load_corpus(c);
        const SplitManifest m = load_manifest(path(c, "manifest"));
        const std::set<int> classes = c.config.at("lambda").is_null()
                                          ? m.class_universe
                                          : lambda_class_universe(m, get_num(c, "lambda"), corpus.observations);
        const FrequencyBins bins = class_bins(corpus, m, classes);
        const io::Checkpoint ckpt = io::read_checkpoint(*classifier);
        if (ckpt.kind == "moe_classifier") {
            const MoEClassifier model = io::moe_classifier_from(ckpt);
            report = metric_report(predict(model, paired_samples(corpus, m.ids_in(split), classes), bins), split_name, ks);
        } else {
            const Classifier model = io::classifier_from(ckpt);
            const View view = model.encoder.arch().input_dim == corpus.aerial_views.cols() &&
                                      model.encoder.arch().input_dim != corpus.ground_views.front().cols()
                                  ? View::kAerial
                                  : View::kGround;
            report = metric_report(predict(model, labeled_samples(corpus, m.ids_in(split), view, classes), bins),
                                   split_name, ks);
        }
    }
    fs::create_directories(out_dir);
    write_resolved(out_dir, "eval", c.config);
    write_report(out_dir, "report", report, formats);
    c.out << emit_report(report, ReportFormat::kJson) << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// gradcheck

Schema gradcheck_schema() {
    const GradcheckOptions d;
    return {req_string("out_dir"),
            {"objectives", Kind::kStringList, json::array({"standard", "m2o", "par"}), false},
            integer("instances", static_cast<std::int64_t>(d.instances)),
            integer("seed", 0),
            number("step", d.step),
            number("tolerance", d.tolerance),
            integer("min_n", d.min_n),
            integer("max_n", d.max_n),
            integer("min_dim", d.min_dim),
            integer("max_dim", d.max_dim),
            number("log_inverse_temperature", d.log_inverse_temperature),
            boolean("corrupt_gradient", false)};
}

int cmd_gradcheck(Context& c) {
    GradcheckOptions o;
    const int instances = get_int(c, "instances");
    if (instances < 1) throw ConfigError("instances must be >= 1");
    o.instances = static_cast<std::size_t>(instances);
    o.seed = get_seed(c);
    o.step = get_num(c, "step");
    o.tolerance = get_num(c, "tolerance");
    o.min_n = get_int(c, "min_n");
    o.max_n = get_int(c, "max_n");
    o.min_dim = get_int(c, "min_dim");
    o.max_dim = get_int(c, "max_dim");
    o.log_inverse_temperature = get_num(c, "log_inverse_temperature");
    o.corrupt_gradient = get_bool(c, "corrupt_gradient");
    std::vector<Objective> objectives;
    for (const json& name : c.config.at("objectives")) objectives.push_back(parse_objective(name.get<std::string>()));
    if (objectives.empty()) throw ConfigError("objectives must not be empty");

    const auto results = run_gradcheck(objectives, o);
    bool all = true;
    json rows = json::array();
    for (const auto& r : results) {
        all = all && r.passed;
        rows.push_back({{"objective", std::string(to_string(r.objective))},
                        {"instances", r.instances},
                        {"max_rel_error", r.max_rel_error},
                        {"passed", r.passed}});
    }
    const json report{{"tolerance", o.tolerance}, {"step", o.step}, {"objectives", rows}, {"passed", all}};
    const fs::path out_dir = path(c, "out_dir");
    write_resolved(out_dir, "gradcheck", c.config);
    io::write_json(out_dir / "gradcheck.json", report);
    c.out << report.dump() << "\n";
    if (!all) c.err << "gradient check failed\n";
    return all ? kExitOk : kExitFailure;
}

// ---------------------------------------------------------------------------
// cluster-eval

Schema cluster_schema() {
    return {req_string("corpus_dir"),
            req_string("out_dir"),
            opt_string("encoders"),
            opt_string("manifest"),
            text("split", "train"),
            integer("min_views", 9),
            {"k", Kind::kOptionalInteger, nullptr, false},
            integer("max_iters", 300),
            integer("noise_dim", 32),
            integer("seed", 0),
            {"formats", Kind::kStringList, json::array({"json", "csv"}), false}};
}

int cmd_cluster_eval(Context& c) {
    const int min_views = get_int(c, "min_views");
    const int max_iters = get_int(c, "max_iters");
    const int noise_dim = get_int(c, "noise_dim");
    if (min_views < 1) throw ConfigError("min_views must be >= 1");
    if (max_iters < 1) throw ConfigError("max_iters must be >= 1");
    if (noise_dim < 1) throw ConfigError("noise_dim must be >= 1");
    const std::uint64_t seed = get_seed(c);
    const auto formats = formats_of(c);
    const fs::path out_dir = path(c, "out_dir");

    const SynthCorpus corpus = load_corpus(c);
    std::vector<std::size_t> candidates;
    if (const auto m = opt_path(c, "manifest")) {
        Split split = Split::kTrain;
        try {
            split = parse_split(get_str(c, "split"));
        } catch (const FormatError& e) {
            throw ConfigError(e.what());
        }
        for (const auto& id : load_manifest(*m).ids_in(split)) candidates.push_back(corpus.index_of(id));
    } else {
        for (std::size_t o = 0; o < corpus.size(); ++o) candidates.push_back(o);
    }

    std::vector<std::size_t> kept;
    Eigen::Index rows = 0;
    for (std::size_t o : candidates) {
        if (corpus.ground_views[o].rows() >= min_views) {
            kept.push_back(o);
            rows += corpus.ground_views[o].rows();
        }
    }
    if (kept.empty()) throw Error("no observation has at least " + std::to_string(min_views) + " ground views");

    Matrix views(rows, corpus.ground_views.front().cols());
    ClusteringPair pair;
    Eigen::Index r = 0;
    for (std::size_t n = 0; n < kept.size(); ++n) {
        const Matrix& v = corpus.ground_views[kept[n]];
        views.middleRows(r, v.rows()) = v;
        r += v.rows();
        pair.true_label.insert(pair.true_label.end(), static_cast<std::size_t>(v.rows()), static_cast<int>(n));
    }

    Matrix embeddings;
    if (const auto p = opt_path(c, "encoders")) {
        embeddings = io::encoder_pair_from(io::read_checkpoint(*p)).gl.forward(views);
    } else {
        Rng rng(seed);
        std::normal_distribution<double> normal(0.0, 1.0);
        embeddings.resize(rows, noise_dim);
        for (Eigen::Index i = 0; i < rows; ++i) {
            for (Eigen::Index j = 0; j < noise_dim; ++j) embeddings(i, j) = normal(rng);
        }
    }

    const int k = c.config.at("k").is_null() ? static_cast<int>(kept.size()) : get_int(c, "k");
    if (k < 1) throw ConfigError("k must be >= 1");
    const KMeansResult km = kmeans_pp(embeddings, KMeansConfig{k, max_iters, 1e-10, seed});
    pair.predicted_cluster = km.assignments;
    const ClusteringAgreement a = clustering_agreement(pair);

    MetricReport report;
    const std::string col = c.config.at("encoders").is_null() ? "noise" : "encoder";
    report.set("homogeneity", col, a.homogeneity);
    report.set("completeness", col, a.completeness);
    report.set("v_measure", col, a.v_measure);
    report.set("adjusted_rand", col, a.adjusted_rand);
    report.set("adjusted_mutual_info", col, a.adjusted_mutual_info);
    report.set("n_points", col, static_cast<double>(rows));
    report.set("n_observations", col, static_cast<double>(kept.size()));
    report.set("k", col, static_cast<double>(k));

    fs::create_directories(out_dir);
    write_resolved(out_dir, "cluster-eval", c.config);
    write_report(out_dir, "cluster_report", report, formats);
    c.out << emit_report(report, ReportFormat::kJson) << "\n";
    return kExitOk;
}

std::vector<Command> commands() {
    return {
        {"gen-data", "Generate a synthetic multi-view corpus", gen_data_schema(), cmd_gen_data},
        {"split", "Build a spatial block split manifest", split_schema(), cmd_split},
        {"pretrain", "Contrastive pre-training of a ground/aerial encoder pair", pretrain_schema(), cmd_pretrain},
        {"finetune", "Fine-tune a classifier on a lambda subset", finetune_schema(false),
         [](Context& c) { return cmd_finetune(c, false); }},
        {"probe", "Fit a linear head on frozen features", finetune_schema(true),
         [](Context& c) { return cmd_finetune(c, true); }},
        {"eval", "Score predictions or a classifier checkpoint", eval_schema(), cmd_eval},
        {"gradcheck", "Finite-difference check of every objective", gradcheck_schema(), cmd_gradcheck},
        {"cluster-eval", "Cluster ground embeddings of multi-view observations", cluster_schema(), cmd_cluster_eval},
    };
}

std::string schema_help(const Schema& schema) {
    std::string s = "Config keys:\n";
    for (const Key& k : schema) {
        s += "  " + k.name + (k.required ? " (required)" : " = " + k.fallback.dump()) + "\n";
    }
    return s;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    const std::vector<Command> all = commands();

    CLI::App app{"Ground-level/aerial contrastive pre-training toolkit", "crisp"};
    app.require_subcommand(1);
    std::map<std::string, std::string> config_files;
    std::map<std::string, std::vector<std::string>> overrides;
    for (const Command& cmd : all) {
        CLI::App* sub = app.add_subcommand(cmd.name, cmd.help);
        sub->add_option("-c,--config", config_files[cmd.name], "JSON config file");
        sub->add_option("-s,--set", overrides[cmd.name], "Override one config key (key=value)")->allow_extra_args(false);
        sub->footer(schema_help(cmd.schema));
    }

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? kExitOk : kExitConfig;
    }

    for (const Command& cmd : all) {
        if (!app.got_subcommand(cmd.name)) continue;
        try {
            const std::string& file = config_files[cmd.name];
            Context ctx{resolve_config(cmd.schema, file.empty() ? std::nullopt : std::optional<fs::path>(file),
                                       overrides[cmd.name]),
                        out, err};
            return cmd.handler(ctx);
        } catch (const ConfigError& e) {
            err << "config error: " << e.what() << "\n";
            return kExitConfig;
        } catch (const std::exception& e) {
            err << "error: " << e.what() << "\n";
            return kExitFailure;
        }
    }
    return kExitConfig;
}

}  // namespace crisp::cli
