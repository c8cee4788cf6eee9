#include "isgd/bench.hpp"

#include "isgd/error.hpp"
#include "isgd/experiments.hpp"
#include "isgd/validation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>

namespace isgd {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const char* where, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw FormatError(std::string(where) + " must be an object");
    for (const auto& [key, _] : obj.items()) {
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
            throw FormatError("unknown key '" + key + "' in " + where);
    }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_relative() && !base.empty() ? base / path : path;
}

DatasetSpec parse_dataset(const json& j, const std::filesystem::path& base) {
    check_keys(j, "dataset",
               {"kind", "images", "labels", "path", "target_columns", "classification", "standardize", "limit",
                "classes", "per_class", "count", "dims", "spread", "noise", "seed"});
    DatasetSpec s;
    s.kind = j.at("kind").get<std::string>();
    if (s.kind == "idx") {
        s.images = resolve(base, j.at("images").get<std::string>());
        s.labels = resolve(base, j.at("labels").get<std::string>());
    } else if (s.kind == "csv") {
        s.path = resolve(base, j.at("path").get<std::string>());
        s.csv.target_columns = j.value("target_columns", s.csv.target_columns);
        s.csv.classification = j.value("classification", s.csv.classification);
        s.csv.standardize = j.value("standardize", s.csv.standardize);
    } else if (s.kind != "blobs" && s.kind != "linreg") {
        throw FormatError("unknown dataset kind '" + s.kind + "'");
    }
    s.limit = j.value("limit", s.limit);
    s.classes = j.value("classes", s.classes);
    s.per_class = j.value("per_class", s.per_class);
    s.count = j.value("count", s.count);
    s.dims = j.value("dims", s.dims);
    s.spread = j.value("spread", s.spread);
    s.noise = j.value("noise", s.noise);
    s.seed = j.value("seed", s.seed);
    return s;
}

std::vector<ScoreKind> parse_arms(const json& j) {
    std::vector<ScoreKind> arms;
    for (const auto& a : j) arms.push_back(parse_score_kind(a.get<std::string>()));
    return arms;
}

double parse_threshold(const json& j, bool& automatic) {
    automatic = false;
    if (j.is_number()) return j.get<double>();
    const auto s = j.get<std::string>();
    if (s == "auto") {
        automatic = true;
        return 1.0;
    }
    if (s == "inf" || s == "infinity") return std::numeric_limits<double>::infinity();
    throw FormatError("tau_th must be a number, \"auto\" or \"inf\"");
}

void parse_train(const json& j, ExperimentConfig& c) {
    check_keys(j, "train",
               {"presample_size", "batch_size", "tau_th", "a_tau", "initial_tau", "tau_mode", "learning_rate",
                "momentum", "weight_decay", "lr_schedule", "max_iterations", "seed", "loss", "eval_every",
                "checkpoint_every", "checkpoint_path"});
    TrainConfig& t = c.train;
    t.presample_size = j.value("presample_size", t.presample_size);
    t.batch_size = j.value("batch_size", t.batch_size);
    if (j.contains("tau_th")) t.tau_th = parse_threshold(j["tau_th"], c.auto_tau_th);
    t.a_tau = j.value("a_tau", t.a_tau);
    t.initial_tau = j.value("initial_tau", t.initial_tau);
    if (j.contains("tau_mode")) t.tau_mode = parse_tau_mode(j["tau_mode"].get<std::string>());
    t.learning_rate = j.value("learning_rate", t.learning_rate);
    t.momentum = j.value("momentum", t.momentum);
    t.weight_decay = j.value("weight_decay", t.weight_decay);
    if (j.contains("lr_schedule")) {
        for (const auto& s : j["lr_schedule"])
            t.lr_schedule.push_back({s.at("iteration").get<std::size_t>(), s.at("multiplier").get<double>()});
    }
    t.max_iterations = j.value("max_iterations", t.max_iterations);
    t.seed = j.value("seed", t.seed);
    if (j.contains("loss")) t.loss = parse_loss(j["loss"].get<std::string>());
    t.eval_every = j.value("eval_every", t.eval_every);
    t.checkpoint_every = j.value("checkpoint_every", t.checkpoint_every);
    if (j.contains("checkpoint_path")) t.checkpoint_path = j["checkpoint_path"].get<std::string>();
}

void write_json(const std::filesystem::path& path, const json& doc) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << doc.dump(2) << '\n';
}

std::ofstream open_jsonl(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    return out;
}

std::size_t score_kind_index(ScoreKind kind) { return static_cast<std::size_t>(kind); }

struct Prepared {
    Dataset train;
    std::optional<Dataset> eval;
    Network network;
};

Prepared prepare(const ExperimentConfig& config) {
    Dataset train = load_dataset(config.dataset);
    std::optional<Dataset> eval;
    if (config.eval_dataset) eval = load_dataset(*config.eval_dataset);
    Network net = config.network_path ? load_network(*config.network_path) : initial_network(config, train);
    return {std::move(train), std::move(eval), std::move(net)};
}

// Trains with uniform sampling and calls `visit` at each requested iteration.
template <typename Visit>
void walk_checkpoints(const ExperimentConfig& config, const Prepared& p, std::vector<std::size_t> checkpoints,
                      Visit visit) {
    std::sort(checkpoints.begin(), checkpoints.end());
    checkpoints.erase(std::unique(checkpoints.begin(), checkpoints.end()), checkpoints.end());
    if (checkpoints.empty()) throw ArgumentError("no checkpoints requested");
    TrainConfig tc = arm_config(config, ScoreKind::uniform);
    tc.max_iterations = checkpoints.back();
    tc.eval_every = 0;
    tc.checkpoint_every = 0;
    if (tc.max_iterations == 0) {
        visit(p.network, std::size_t{0});
        return;
    }
    Trainer trainer(tc, p.network, p.train);
    std::size_t next = 0;
    if (checkpoints.front() == 0) {
        visit(trainer.network(), std::size_t{0});
        ++next;
    }
    while (!trainer.done()) {
        trainer.step();
        if (next < checkpoints.size() && trainer.iteration() == checkpoints[next]) {
            visit(trainer.network(), trainer.iteration());
            ++next;
        }
    }
}

}  // namespace

Dataset load_dataset(const DatasetSpec& spec) {
    Dataset data;
    if (spec.kind == "idx") {
        data = load_idx(spec.images, spec.labels);
    } else if (spec.kind == "csv") {
        data = load_csv(spec.path, spec.csv);
    } else if (spec.kind == "blobs") {
        data = synth_blobs(spec.classes, spec.per_class, spec.dims, spec.spread, spec.seed);
    } else if (spec.kind == "linreg") {
        data = synth_linreg(spec.count, spec.dims, spec.noise, spec.seed).data;
    } else {
        throw FormatError("unknown dataset kind '" + spec.kind + "'");
    }
    if (spec.limit > 0) data = data.head(spec.limit);
    return data;
}

ExperimentConfig parse_experiment(const json& doc, const std::filesystem::path& base_dir) {
    check_keys(doc, "config",
               {"dataset", "eval_dataset", "network", "train", "arms", "presample_sweep", "output", "probe",
                "correlate", "network_path"});
    ExperimentConfig c;
    c.dataset = parse_dataset(doc.at("dataset"), base_dir);
    if (doc.contains("eval_dataset")) c.eval_dataset = parse_dataset(doc["eval_dataset"], base_dir);
    if (doc.contains("network")) {
        const auto& n = doc["network"];
        check_keys(n, "network", {"hidden", "activation", "bias", "init_seed"});
        c.network.hidden = n.value("hidden", c.network.hidden);
        if (n.contains("activation")) c.network.activation = parse_activation(n["activation"].get<std::string>());
        c.network.bias = n.value("bias", c.network.bias);
        if (n.contains("init_seed")) c.network.init_seed = n["init_seed"].get<std::uint64_t>();
    }
    if (doc.contains("train")) parse_train(doc["train"], c);
    if (doc.contains("arms")) c.arms = parse_arms(doc["arms"]);
    if (c.arms.empty()) throw FormatError("at least one arm is required");
    c.presample_sweep = doc.value("presample_sweep", c.presample_sweep);
    if (doc.contains("output")) c.output = resolve(base_dir, doc["output"].get<std::string>());
    if (doc.contains("probe")) {
        const auto& p = doc["probe"];
        check_keys(p, "probe", {"presample_size", "batch_size", "resamples", "checkpoints", "arms"});
        c.probe.presample_size = p.value("presample_size", c.probe.presample_size);
        c.probe.batch_size = p.value("batch_size", c.probe.batch_size);
        c.probe.resamples = p.value("resamples", c.probe.resamples);
        c.probe.checkpoints = p.value("checkpoints", c.probe.checkpoints);
        if (p.contains("arms")) c.probe.arms = parse_arms(p["arms"]);
    }
    if (doc.contains("correlate")) {
        const auto& p = doc["correlate"];
        check_keys(p, "correlate", {"checkpoints", "samples"});
        c.correlate.checkpoints = p.value("checkpoints", c.correlate.checkpoints);
        c.correlate.samples = p.value("samples", c.correlate.samples);
    }
    if (doc.contains("network_path")) c.network_path = resolve(base_dir, doc["network_path"].get<std::string>());

    for (auto kind : c.arms) arm_config(c, kind).validate();
    for (auto presample : c.presample_sweep)
        for (auto kind : c.arms)
            if (kind != ScoreKind::uniform) arm_config(c, kind, presample).validate();
    return c;
}

ExperimentConfig load_experiment(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw FormatError("config " + path.string() + ": " + e.what());
    }
    try {
        return parse_experiment(doc, path.parent_path());
    } catch (const json::exception& e) {
        throw FormatError("config " + path.string() + ": " + e.what());
    }
}

Network initial_network(const ExperimentConfig& config, const Dataset& data) {
    std::vector<std::size_t> dims{data.features()};
    dims.insert(dims.end(), config.network.hidden.begin(), config.network.hidden.end());
    dims.push_back(data.targets.has_classes() ? data.num_classes()
                                              : static_cast<std::size_t>(data.targets.matrix().cols()));
    InitOptions options;
    options.hidden_activation = config.network.activation;
    options.bias = config.network.bias;
    return glorot_init(dims, config.network.init_seed.value_or(config.train.seed), options);
}

TrainConfig arm_config(const ExperimentConfig& config, ScoreKind kind, std::size_t presample_size) {
    TrainConfig t = config.train;
    t.score_kind = kind;
    if (presample_size > 0) t.presample_size = presample_size;
    if (config.auto_tau_th) t.tau_th = guaranteed_speedup_threshold(t.presample_size, t.batch_size);
    // Each arm draws from its own stream; the uniform arm keeps the base seed
    // so it coincides with a plain SGD run.
    if (kind != ScoreKind::uniform) t.seed = mix_seed(config.train.seed * 8 + score_kind_index(kind));
    return t;
}

std::string arm_label(ScoreKind kind, std::size_t presample_size, bool sweep) {
    std::string label(to_string(kind));
    if (sweep && kind != ScoreKind::uniform) label += "-B" + std::to_string(presample_size);
    return label;
}

json run_train(const ExperimentConfig& config, std::ostream& log) {
    const Prepared p = prepare(config);
    std::filesystem::create_directories(config.output);
    const Dataset& eval_set = p.eval ? *p.eval : p.train;

    struct Run {
        ScoreKind kind;
        std::size_t presample;
        bool sweep;
    };
    std::vector<Run> runs;
    for (auto kind : config.arms) runs.push_back({kind, config.train.presample_size, false});
    for (auto presample : config.presample_sweep)
        for (auto kind : config.arms)
            if (kind != ScoreKind::uniform) runs.push_back({kind, presample, true});

    json summary = {{"train_samples", p.train.size()}, {"eval_samples", eval_set.size()}, {"arms", json::array()}};
    for (const auto& run : runs) {
        const TrainConfig tc = arm_config(config, run.kind, run.presample);
        const std::string label = arm_label(run.kind, run.presample, run.sweep);
        const auto metrics_path = config.output / (label + ".jsonl");
        std::ofstream out = open_jsonl(metrics_path);
        log << "training arm " << label << " (B=" << tc.presample_size << ", b=" << tc.batch_size
            << ", tau_th=" << tc.tau_th << ")\n";

        std::size_t importance_steps = 0;
        MetricsRecord last;
        train(tc, p.network, p.train, tc.eval_every > 0 ? &eval_set : nullptr,
              [&](const MetricsRecord& r, const Network&) {
                  out << to_json(r).dump() << '\n';
                  out.flush();
                  if (r.mode == SamplingMode::importance) ++importance_steps;
                  last = r;
              });

        json arm = {{"arm", label},
                    {"score_kind", to_string(run.kind)},
                    {"presample_size", tc.presample_size},
                    {"batch_size", tc.batch_size},
                    {"tau_th", std::isfinite(tc.tau_th) ? json(tc.tau_th) : json("inf")},
                    {"seed", tc.seed},
                    {"iterations", last.iteration},
                    {"importance_iterations", importance_steps},
                    {"final_train_loss", last.train_loss},
                    {"forward_count", last.forward_count},
                    {"backward_count", last.backward_count},
                    {"cost_units", last.cost_units()},
                    {"wall_clock_seconds", last.wall_clock_seconds},
                    {"metrics_file", metrics_path.filename().string()}};
        if (last.eval_loss) arm["final_eval_loss"] = *last.eval_loss;
        if (last.eval_error) arm["final_eval_error"] = *last.eval_error;
        summary["arms"].push_back(arm);
        log << "  final eval loss " << (last.eval_loss ? *last.eval_loss : std::nan("")) << ", importance steps "
            << importance_steps << "/" << last.iteration << "\n";
    }
    write_json(config.output / "summary.json", summary);
    return summary;
}

json run_variance_probe(const ExperimentConfig& config, std::ostream& log) {
    const Prepared p = prepare(config);
    if (config.probe.presample_size > p.train.size())
        throw ArgumentError("probe presample size exceeds the training set");
    std::filesystem::create_directories(config.output);
    std::ofstream out = open_jsonl(config.output / "variance_probe.jsonl");
    json summary = json::array();
    walk_checkpoints(config, p, config.probe.checkpoints, [&](const Network& net, std::size_t iteration) {
        const std::uint64_t seed = mix_seed(config.train.seed + 0x5bd1e995ULL * (iteration + 1));
        Rng rng(seed);
        const auto presample = uniform_batch(p.train.size(), config.probe.presample_size, rng);
        const ProbeReport report = probe_variance(net, p.train, config.train.loss, presample, config.probe.batch_size,
                                                  config.probe.resamples, config.probe.arms, seed);
        log << "iteration " << iteration << ":";
        for (const auto& arm : report.arms) {
            json line = {{"iteration", iteration},
                         {"arm", to_string(arm.kind)},
                         {"mean_distance", arm.mean_distance},
                         {"normalized", arm.normalized},
                         {"distances", arm.distances}};
            out << line.dump() << '\n';
            out.flush();
            summary.push_back(line);
            log << ' ' << to_string(arm.kind) << '=' << std::setprecision(4) << arm.normalized;
        }
        log << '\n';
    });
    return summary;
}

json run_correlate(const ExperimentConfig& config, std::ostream& log) {
    const Prepared p = prepare(config);
    std::filesystem::create_directories(config.output);
    json summary = json::array();
    walk_checkpoints(config, p, config.correlate.checkpoints, [&](const Network& net, std::size_t iteration) {
        std::vector<std::size_t> indices;
        if (config.correlate.samples == 0 || config.correlate.samples >= p.train.size()) {
            indices.resize(p.train.size());
            std::iota(indices.begin(), indices.end(), 0);
        } else {
            Rng rng(mix_seed(config.train.seed + iteration));
            indices = uniform_batch(p.train.size(), config.correlate.samples, rng);
        }
        const CorrelationReport report = correlate_scores(net, p.train, config.train.loss, indices);
        std::ofstream out = open_jsonl(config.output / ("correlate-" + std::to_string(iteration) + ".jsonl"));
        for (std::size_t k = 0; k < report.indices.size(); ++k) {
            out << json{{"index", report.indices[k]},
                        {"loss", report.loss_probs[k]},
                        {"upper_bound", report.upper_probs[k]},
                        {"gradient_norm", report.gradnorm_probs[k]}}
                       .dump()
                << '\n';
        }
        json entry = {{"iteration", iteration},          {"samples", report.indices.size()},
                      {"sse_loss", report.sse_loss},     {"sse_upper_bound", report.sse_upper},
                      {"pearson_loss", report.pearson_loss}, {"pearson_upper_bound", report.pearson_upper}};
        summary.push_back(entry);
        log << "iteration " << iteration << ": SSE loss " << report.sse_loss << ", SSE upper bound "
            << report.sse_upper << ", Pearson loss " << report.pearson_loss << ", Pearson upper bound "
            << report.pearson_upper << '\n';
    });
    write_json(config.output / "correlate_summary.json", summary);
    return summary;
}

bool run_validate(std::uint64_t seed, std::ostream& out) {
    bool ok = true;
    for (const auto& r : run_validation_suite(seed)) {
        out << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << '\n';
        ok = ok && r.passed;
    }
    return ok;
}

}  // namespace isgd
