#pragma once

#include "isgd/datasets.hpp"
#include "isgd/nn.hpp"
#include "isgd/scoring.hpp"
#include "isgd/trainer.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace isgd {

/// Where samples come from. `kind` is one of idx, csv, blobs, linreg; the
/// remaining fields are read according to it. Relative paths are resolved
/// against the directory of the config file.
struct DatasetSpec {
    std::string kind = "blobs";
    std::filesystem::path images;
    std::filesystem::path labels;
    std::filesystem::path path;
    CsvOptions csv;
    /// Keep only the first `limit` samples (0: all).
    std::size_t limit = 0;
    std::size_t classes = 3;
    std::size_t per_class = 100;
    std::size_t count = 1000;
    std::size_t dims = 2;
    double spread = 1.0;
    double noise = 0.1;
    std::uint64_t seed = 0;
};

Dataset load_dataset(const DatasetSpec& spec);

struct NetworkSpec {
    std::vector<std::size_t> hidden;
    ActivationKind activation = ActivationKind::rectifier;
    bool bias = true;
    /// Defaults to the training seed.
    std::optional<std::uint64_t> init_seed;
};

/// Periodic measurements on a network trained with uniform sampling.
struct ProbeSpec {
    std::size_t presample_size = 1024;
    std::size_t batch_size = 128;
    std::size_t resamples = 10;
    /// Iterations at which to measure (0 is the initial network).
    std::vector<std::size_t> checkpoints{0};
    std::vector<ScoreKind> arms{ScoreKind::loss, ScoreKind::upper_bound, ScoreKind::gradient_norm};
};

struct CorrelateSpec {
    std::vector<std::size_t> checkpoints{0};
    /// Samples to score per checkpoint (0: the whole training set).
    std::size_t samples = 0;
};

struct ExperimentConfig {
    DatasetSpec dataset;
    std::optional<DatasetSpec> eval_dataset;
    NetworkSpec network;
    TrainConfig train;
    /// When true, tau_th is set per presample size to the guaranteed-speedup
    /// threshold.
    bool auto_tau_th = false;
    std::vector<ScoreKind> arms{ScoreKind::uniform, ScoreKind::upper_bound};
    /// Extra presample sizes for every non-uniform arm.
    std::vector<std::size_t> presample_sweep;
    std::filesystem::path output = "runs";
    ProbeSpec probe;
    CorrelateSpec correlate;
    /// Start from a saved network instead of a fresh initialization.
    std::optional<std::filesystem::path> network_path;
};

/// Parses the JSON config document. `base_dir` anchors relative paths.
ExperimentConfig parse_experiment(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment(const std::filesystem::path& path);

/// The shared initial network for `data`: input width from the data, output
/// width from the class count or the target width.
Network initial_network(const ExperimentConfig& config, const Dataset& data);

/// Training settings for one arm. `presample_size` of 0 keeps the configured B.
TrainConfig arm_config(const ExperimentConfig& config, ScoreKind kind, std::size_t presample_size = 0);

/// Arm label used in file names: the score kind, plus -B<n> inside a sweep.
std::string arm_label(ScoreKind kind, std::size_t presample_size, bool sweep);

/// One JSONL metrics file per arm plus summary.json in the output directory.
/// Returns the summary document.
nlohmann::json run_train(const ExperimentConfig& config, std::ostream& log);

/// variance_probe.jsonl: one line per checkpoint and arm.
nlohmann::json run_variance_probe(const ExperimentConfig& config, std::ostream& log);

/// correlate-<iteration>.jsonl with per-sample probability triples plus
/// correlate_summary.json.
nlohmann::json run_correlate(const ExperimentConfig& config, std::ostream& log);

/// Prints one line per property; returns true when all pass.
bool run_validate(std::uint64_t seed, std::ostream& out);

}  // namespace isgd
