#pragma once

#include "isgd/datasets.hpp"
#include "isgd/losses.hpp"
#include "isgd/nn.hpp"
#include "isgd/rng.hpp"
#include "isgd/scoring.hpp"
#include "isgd/variance.hpp"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace isgd {

/// From `iteration` on, the learning rate is the base rate times `multiplier`.
struct LrStep {
    std::size_t iteration = 0;
    double multiplier = 1.0;
};

struct TrainConfig {
    std::size_t presample_size = 128;  // B
    std::size_t batch_size = 32;       // b
    double tau_th = 1.5;
    double a_tau = 0.9;
    /// Starting value of the tau average (0 means start uniform).
    double initial_tau = 0.0;
    TauMode tau_mode = TauMode::standard;
    double learning_rate = 0.1;
    double momentum = 0.0;
    double weight_decay = 0.0;
    std::vector<LrStep> lr_schedule;
    std::size_t max_iterations = 1000;
    std::uint64_t seed = 0;
    /// uniform means plain SGD: no scoring and no switch.
    ScoreKind score_kind = ScoreKind::upper_bound;
    LossKind loss = LossKind::softmax_cross_entropy;
    /// Evaluate on the eval set every N iterations (0: never).
    std::size_t eval_every = 0;
    /// Save the network every N iterations (0: never).
    std::size_t checkpoint_every = 0;
    std::filesystem::path checkpoint_path;

    /// Throws ArgumentError describing the first violated constraint.
    void validate() const;
    double learning_rate_at(std::size_t iteration) const;
};

enum class SamplingMode { uniform, importance };
std::string_view to_string(SamplingMode mode);

/// One iteration of the training loop. Counters are cumulative per-sample
/// pass counts.
struct MetricsRecord {
    std::size_t iteration = 0;
    double wall_clock_seconds = 0.0;
    SamplingMode mode = SamplingMode::uniform;
    /// Mean of w_j * loss_j over the update batch.
    double train_loss = 0.0;
    double tau = 0.0;
    std::uint64_t forward_count = 0;
    std::uint64_t backward_count = 0;
    std::optional<double> eval_loss;
    std::optional<double> eval_error;

    /// forward + 2 * backward.
    std::uint64_t cost_units() const { return forward_count + 2 * backward_count; }
};

nlohmann::json to_json(const MetricsRecord& record);
MetricsRecord metrics_from_json(const nlohmann::json& doc);

/// velocity <- momentum * velocity + grads + weight_decay * weights;
/// theta <- theta - learning_rate * velocity. Weight decay skips biases.
/// Throws TrainingAborted on a non-finite gradient.
void sgd_step(Network& network, const GradientSet& grads, double learning_rate, double momentum,
              double weight_decay, GradientSet& velocity);

struct EvalResult {
    double mean_loss = 0.0;
    /// Fraction of argmax mismatches (sign mismatches for the sigmoid NLL);
    /// empty for squared-error regression.
    std::optional<double> error_rate;
};

/// Full pass, in fixed-size chunks. Ties in argmax go to the lowest index.
EvalResult evaluate(const Network& network, const Dataset& data, LossKind kind);

/// Importance-sampling SGD with a uniform warmup.
///
/// While the tau average stays at or below tau_th each step draws b samples
/// uniformly, updates with unit weights, and scores the same batch from the
/// forward pass it already ran. Once tau exceeds tau_th each step draws a
/// uniform presample of B, scores it, resamples b with replacement in
/// proportion to the scores, and updates with weights 1/(B g). tau is
/// refreshed after every step from whichever distribution was computed.
class Trainer {
public:
    Trainer(TrainConfig config, Network network, const Dataset& train_set, const Dataset* eval_set = nullptr);

    MetricsRecord step();
    bool done() const { return iteration_ >= config_.max_iterations; }

    const Network& network() const { return network_; }
    const TrainConfig& config() const { return config_; }
    const TauEstimator& tau_estimator() const { return tau_; }
    std::size_t iteration() const { return iteration_; }

private:
    MetricsRecord uniform_step();
    MetricsRecord importance_step();
    double apply_update(const ForwardTrace& trace, const Targets& targets, std::span<const double> weights);

    TrainConfig config_;
    Network network_;
    const Dataset& train_;
    const Dataset* eval_;
    GradientSet velocity_;
    TauEstimator tau_;
    Rng rng_;
    std::size_t iteration_ = 0;
    std::uint64_t forward_count_ = 0;
    std::uint64_t backward_count_ = 0;
    std::chrono::steady_clock::time_point start_;
};

using MetricsSink = std::function<void(const MetricsRecord&, const Network&)>;

/// Runs a Trainer to max_iterations, handing each record to `sink`.
/// Returns the trained network.
Network train(const TrainConfig& config, Network network, const Dataset& train_set, const Dataset* eval_set,
              const MetricsSink& sink);

}  // namespace isgd
