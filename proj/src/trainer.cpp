#include "isgd/trainer.hpp"

#include "isgd/error.hpp"
#include "isgd/sampling.hpp"

#include <algorithm>
#include <cmath>

namespace isgd {

void TrainConfig::validate() const {
    if (batch_size == 0) throw ArgumentError("batch size b must be positive");
    if (presample_size == 0) throw ArgumentError("presample size B must be positive");
    if (batch_size > presample_size) throw ArgumentError("batch size b must not exceed presample size B");
    if (!(tau_th >= 1.0)) throw ArgumentError("tau_th must be at least 1");
    if (!(a_tau >= 0.0 && a_tau < 1.0)) throw ArgumentError("a_tau must lie in [0, 1)");
    if (!(initial_tau >= 0.0) || !std::isfinite(initial_tau)) throw ArgumentError("initial tau must be finite and >= 0");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ArgumentError("learning rate must be positive");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw ArgumentError("momentum must lie in [0, 1)");
    if (!(weight_decay >= 0.0)) throw ArgumentError("weight decay must be non-negative");
    for (const auto& s : lr_schedule)
        if (!(s.multiplier > 0.0)) throw ArgumentError("learning-rate multipliers must be positive");
    if (checkpoint_every > 0 && checkpoint_path.empty())
        throw ArgumentError("checkpoint_every needs a checkpoint path");
}

double TrainConfig::learning_rate_at(std::size_t iteration) const {
    double multiplier = 1.0;
    std::size_t latest = 0;
    bool found = false;
    for (const auto& s : lr_schedule) {
        if (s.iteration <= iteration && (!found || s.iteration >= latest)) {
            multiplier = s.multiplier;
            latest = s.iteration;
            found = true;
        }
    }
    return learning_rate * multiplier;
}

std::string_view to_string(SamplingMode mode) { return mode == SamplingMode::importance ? "importance" : "uniform"; }

nlohmann::json to_json(const MetricsRecord& r) {
    nlohmann::json j = {{"iteration", r.iteration},
                        {"wall_clock_seconds", r.wall_clock_seconds},
                        {"mode", to_string(r.mode)},
                        {"train_loss", r.train_loss},
                        {"tau", r.tau},
                        {"forward_count", r.forward_count},
                        {"backward_count", r.backward_count}};
    if (r.eval_loss) j["eval_loss"] = *r.eval_loss;
    if (r.eval_error) j["eval_error"] = *r.eval_error;
    return j;
}

MetricsRecord metrics_from_json(const nlohmann::json& j) {
    MetricsRecord r;
    r.iteration = j.at("iteration").get<std::size_t>();
    r.wall_clock_seconds = j.at("wall_clock_seconds").get<double>();
    const auto mode = j.at("mode").get<std::string>();
    if (mode != "uniform" && mode != "importance") throw FormatError("unknown sampling mode '" + mode + "'");
    r.mode = mode == "importance" ? SamplingMode::importance : SamplingMode::uniform;
    r.train_loss = j.at("train_loss").get<double>();
    r.tau = j.at("tau").get<double>();
    r.forward_count = j.at("forward_count").get<std::uint64_t>();
    r.backward_count = j.at("backward_count").get<std::uint64_t>();
    if (j.contains("eval_loss")) r.eval_loss = j["eval_loss"].get<double>();
    if (j.contains("eval_error")) r.eval_error = j["eval_error"].get<double>();
    return r;
}

void sgd_step(Network& network, const GradientSet& grads, double learning_rate, double momentum,
              double weight_decay, GradientSet& velocity) {
    if (grads.layers.size() != network.depth() || velocity.layers.size() != network.depth())
        throw ShapeError("gradient set does not match the network");
    if (!grads.all_finite()) throw TrainingAborted("non-finite gradient; aborting the run");
    for (std::size_t l = 0; l < network.depth(); ++l) {
        Layer& layer = network.mutable_layer(l);
        const auto& g = grads.layers[l];
        auto& v = velocity.layers[l];
        if (g.weights.rows() != layer.weights.rows() || g.weights.cols() != layer.weights.cols())
            throw ShapeError("gradient shape mismatch at layer " + std::to_string(l));
        v.weights = momentum * v.weights + g.weights;
        if (weight_decay > 0.0) v.weights += weight_decay * layer.weights;
        layer.weights -= learning_rate * v.weights;
        if (layer.has_bias) {
            v.bias = momentum * v.bias + g.bias;
            layer.bias -= learning_rate * v.bias;
        }
    }
}

EvalResult evaluate(const Network& network, const Dataset& data, LossKind kind) {
    if (data.size() == 0) throw ArgumentError("cannot evaluate on an empty dataset");
    constexpr std::size_t kChunk = 1024;
    double loss_sum = 0.0;
    std::size_t mistakes = 0;
    for (std::size_t start = 0; start < data.size(); start += kChunk) {
        const std::size_t stop = std::min(data.size(), start + kChunk);
        std::vector<std::size_t> idx(stop - start);
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = start + i;
        const Matrix z = forward(network, data.rows(idx)).final_pre_activation();
        const Targets targets = data.targets.select(idx);
        loss_sum += loss_values(kind, z, targets).sum();
        for (Eigen::Index i = 0; i < z.rows(); ++i) {
            const auto row = static_cast<std::size_t>(i);
            if (kind == LossKind::softmax_cross_entropy) {
                Eigen::Index best = 0;
                z.row(i).maxCoeff(&best);  // first maximum on ties
                if (static_cast<std::size_t>(best) != targets.labels()[row]) ++mistakes;
            } else if (kind == LossKind::sigmoid_binary_nll) {
                bool wrong = false;
                for (Eigen::Index k = 0; k < z.cols(); ++k) {
                    const double predicted = z(i, k) > 0.0 ? 1.0 : -1.0;
                    wrong = wrong || predicted != targets.matrix()(i, k);
                }
                if (wrong) ++mistakes;
            }
        }
    }
    EvalResult result;
    result.mean_loss = loss_sum / static_cast<double>(data.size());
    if (kind != LossKind::squared_error)
        result.error_rate = static_cast<double>(mistakes) / static_cast<double>(data.size());
    return result;
}

Trainer::Trainer(TrainConfig config, Network network, const Dataset& train_set, const Dataset* eval_set)
    : config_(std::move(config)),
      network_(std::move(network)),
      train_(train_set),
      eval_(eval_set),
      velocity_(GradientSet::zeros_like(network_)),
      rng_(config_.seed),
      start_(std::chrono::steady_clock::now()) {
    config_.validate();
    if (train_.size() == 0) throw ArgumentError("training set is empty");
    if (train_.features() != network_.input_width())
        throw ShapeError("dataset width does not match the network input");
    if (config_.batch_size > train_.size()) throw ArgumentError("batch size exceeds the training set");
    if (config_.score_kind != ScoreKind::uniform && config_.presample_size > train_.size())
        throw ArgumentError("presample size exceeds the training set");
    tau_.tau = config_.initial_tau;
    tau_.a_tau = config_.a_tau;
    tau_.tau_th = config_.tau_th;
    tau_.mode = config_.tau_mode;
}

MetricsRecord Trainer::step() {
    const bool importance = config_.score_kind != ScoreKind::uniform && should_switch(tau_);
    MetricsRecord record = importance ? importance_step() : uniform_step();
    ++iteration_;
    record.iteration = iteration_;
    record.tau = tau_.tau;
    record.forward_count = forward_count_;
    record.backward_count = backward_count_;
    if (eval_ && config_.eval_every > 0 && (iteration_ % config_.eval_every == 0 || done())) {
        const auto eval = evaluate(network_, *eval_, config_.loss);
        record.eval_loss = eval.mean_loss;
        record.eval_error = eval.error_rate;
    }
    if (config_.checkpoint_every > 0 && iteration_ % config_.checkpoint_every == 0)
        save_network(network_, config_.checkpoint_path);
    record.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    return record;
}

namespace {

ForwardTrace checked_forward(const Network& network, const Matrix& inputs, std::size_t iteration) {
    ForwardTrace trace = forward(network, inputs);
    if (!trace.output().allFinite())
        throw TrainingAborted("non-finite network output at iteration " + std::to_string(iteration));
    return trace;
}

void update_tau(TauEstimator& tau, std::span<const double> g) {
    // A single-sample distribution carries no information about the gain.
    if (g.size() < 2) {
        tau.tau = tau.a_tau * tau.tau + (1.0 - tau.a_tau) * 1.0;
        return;
    }
    tau = ema_update(tau, g);
}

}  // namespace

double Trainer::apply_update(const ForwardTrace& trace, const Targets& targets, std::span<const double> weights) {
    const Matrix& z = trace.final_pre_activation();
    const Vector losses = loss_values(config_.loss, z, targets);
    if (!losses.allFinite())
        throw TrainingAborted("non-finite loss at iteration " + std::to_string(iteration_ + 1));
    Matrix out = output_gradients(config_.loss, z, targets);
    const auto b = static_cast<double>(weights.size());
    double weighted_loss = 0.0;
    for (std::size_t j = 0; j < weights.size(); ++j) {
        out.row(static_cast<Eigen::Index>(j)) *= weights[j];
        weighted_loss += weights[j] * losses(static_cast<Eigen::Index>(j));
    }
    out /= b;
    const GradientSet grads = backward(network_, trace, out);
    backward_count_ += weights.size();
    sgd_step(network_, grads, config_.learning_rate_at(iteration_), config_.momentum, config_.weight_decay,
             velocity_);
    return weighted_loss / b;
}

MetricsRecord Trainer::uniform_step() {
    const auto batch = uniform_batch(train_.size(), config_.batch_size, rng_);
    const Targets targets = train_.targets.select(batch);
    const ForwardTrace trace = checked_forward(network_, train_.rows(batch), iteration_ + 1);
    forward_count_ += batch.size();

    // Scores come from the pre-update forward pass.
    std::vector<double> g;
    if (config_.score_kind != ScoreKind::uniform) {
        const ScoreVector scores = compute_scores(config_.score_kind, network_, trace, config_.loss, targets);
        if (config_.score_kind == ScoreKind::gradient_norm) backward_count_ += batch.size();
        g = normalize(scores);
    } else {
        g.assign(batch.size(), 1.0 / static_cast<double>(batch.size()));
    }

    const std::vector<double> unit(batch.size(), 1.0);
    MetricsRecord record;
    record.mode = SamplingMode::uniform;
    record.train_loss = apply_update(trace, targets, unit);
    update_tau(tau_, g);
    return record;
}

MetricsRecord Trainer::importance_step() {
    const auto presample = uniform_batch(train_.size(), config_.presample_size, rng_);
    const Targets presample_targets = train_.targets.select(presample);
    const ForwardTrace presample_trace = checked_forward(network_, train_.rows(presample), iteration_ + 1);
    forward_count_ += presample.size();

    const ScoreVector scores =
        compute_scores(config_.score_kind, network_, presample_trace, config_.loss, presample_targets);
    if (config_.score_kind == ScoreKind::gradient_norm) backward_count_ += presample.size();
    const SamplingPlan plan = make_plan(scores, config_.batch_size, rng_);

    std::vector<std::size_t> rows;
    rows.reserve(plan.selected.size());
    for (auto j : plan.selected) rows.push_back(presample[j]);
    const Targets targets = train_.targets.select(rows);
    const ForwardTrace trace = checked_forward(network_, train_.rows(rows), iteration_ + 1);
    forward_count_ += rows.size();

    MetricsRecord record;
    record.mode = SamplingMode::importance;
    record.train_loss = apply_update(trace, targets, plan.weights);
    update_tau(tau_, plan.probabilities);
    return record;
}

Network train(const TrainConfig& config, Network network, const Dataset& train_set, const Dataset* eval_set,
              const MetricsSink& sink) {
    Trainer trainer(config, std::move(network), train_set, eval_set);
    while (!trainer.done()) {
        const MetricsRecord record = trainer.step();
        if (sink) sink(record, trainer.network());
    }
    return trainer.network();
}

}  // namespace isgd
