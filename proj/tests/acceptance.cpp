// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
//
//   acceptance            all criteria
//   acceptance 6 8        only the listed ones

#include "isgd/bench.hpp"
#include "isgd/experiments.hpp"
#include "isgd/validation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace isgd;

namespace {

struct Outcome {
    bool passed = false;
    std::string detail;
};

ExperimentConfig mnist_preset() {
    return load_experiment(std::filesystem::path(ISGD_SOURCE_DIR) / "configs" / "mnist5k.json");
}

Outcome from_property(const PropertyResult& r) { return {r.passed, r.detail}; }

Outcome criterion_1() { return from_property(check_variance_identity(1000, 101)); }

Outcome criterion_2() { return from_property(check_unbiasedness(12, 202)); }

Outcome criterion_3() { return from_property(check_gradient_bound(20, 16, 303)); }

Outcome criterion_4() { return from_property(check_finite_differences(10, 404)); }

Outcome criterion_5() {
    const auto values = check_tau_values();
    const auto semantics = check_tau_semantics(20, 100000, 505);
    return {values.passed && semantics.passed, values.detail + "; " + semantics.detail};
}

Outcome criterion_6() {
    ExperimentConfig config = mnist_preset();
    const Dataset data = load_dataset(config.dataset);
    TrainConfig tc = arm_config(config, ScoreKind::uniform);
    tc.max_iterations = 2000;
    tc.eval_every = 0;
    const Network trained = train(tc, initial_network(config, data), data, nullptr, {});
    std::vector<std::size_t> all(data.size());
    std::iota(all.begin(), all.end(), 0);
    const auto r = correlate_scores(trained, data, tc.loss, all);
    std::ostringstream d;
    d << "SSE upper-bound " << r.sse_upper << " < SSE loss " << r.sse_loss << ", Pearson upper-bound "
      << r.pearson_upper << " (> 0.95), Pearson loss " << r.pearson_loss;
    return {r.sse_upper < r.sse_loss && r.pearson_upper > 0.95, d.str()};
}

Outcome criterion_7() {
    ExperimentConfig config = mnist_preset();
    const Dataset data = load_dataset(config.dataset);
    TrainConfig tc = arm_config(config, ScoreKind::uniform);
    tc.eval_every = 0;
    std::vector<std::size_t> checkpoints = config.probe.checkpoints;
    tc.max_iterations = *std::max_element(checkpoints.begin(), checkpoints.end());
    const std::vector<ScoreKind> arms{ScoreKind::loss, ScoreKind::upper_bound, ScoreKind::gradient_norm};

    Trainer trainer(tc, initial_network(config, data), data);
    std::ostringstream d;
    bool ok = true;
    const auto measure = [&](std::size_t iteration) {
        Rng rng(mix_seed(7000 + iteration));
        const auto presample = uniform_batch(data.size(), 1024, rng);
        const auto report = probe_variance(trainer.network(), data, tc.loss, presample, 128, 10, arms, 77 + iteration);
        const double upper = report.arm(ScoreKind::upper_bound).normalized;
        const double gradnorm = report.arm(ScoreKind::gradient_norm).normalized;
        d << "it " << iteration << ": upper-bound " << upper << ", gradient-norm " << gradnorm << ", loss "
          << report.arm(ScoreKind::loss).normalized << "; ";
        if (iteration == tc.max_iterations) ok = upper < 1.0 && gradnorm < 1.0 && std::abs(upper - gradnorm) <= 0.15;
    };
    if (std::find(checkpoints.begin(), checkpoints.end(), 0) != checkpoints.end()) measure(0);
    while (!trainer.done()) {
        trainer.step();
        if (std::find(checkpoints.begin(), checkpoints.end(), trainer.iteration()) != checkpoints.end())
            measure(trainer.iteration());
    }
    return {ok, d.str() + "asserted after training"};
}

struct Curve {
    std::vector<double> cost;
    std::vector<double> loss;
    double final_loss = 0.0;
};

// Linear interpolation of loss at a given cost; the curve must cover it.
double loss_at(const Curve& c, double cost) {
    if (cost <= c.cost.front()) return c.loss.front();
    for (std::size_t k = 1; k < c.cost.size(); ++k) {
        if (cost <= c.cost[k]) {
            const double t = (cost - c.cost[k - 1]) / (c.cost[k] - c.cost[k - 1]);
            return c.loss[k - 1] + t * (c.loss[k] - c.loss[k - 1]);
        }
    }
    return c.loss.back();
}

Outcome criterion_8() {
    ExperimentConfig config = mnist_preset();
    const Dataset data = load_dataset(config.dataset);
    const std::uint64_t seeds[] = {1, 2, 3};
    const ScoreKind kinds[] = {ScoreKind::uniform, ScoreKind::upper_bound};
    std::map<ScoreKind, Curve> mean;
    std::ostringstream d;

    for (auto seed : seeds) {
        config.train.seed = seed;
        const Network start = initial_network(config, data);
        for (auto kind : kinds) {
            TrainConfig tc = arm_config(config, kind);
            Curve curve;
            std::size_t importance = 0;
            train(tc, start, data, &data, [&](const MetricsRecord& r, const Network&) {
                if (r.mode == SamplingMode::importance) ++importance;
                if (!r.eval_loss) return;
                curve.cost.push_back(static_cast<double>(r.cost_units()));
                curve.loss.push_back(*r.eval_loss);
            });
            curve.final_loss = curve.loss.back();
            auto& m = mean[kind];
            if (m.cost.empty()) {
                m.cost.assign(curve.cost.size(), 0.0);
                m.loss.assign(curve.loss.size(), 0.0);
            }
            for (std::size_t k = 0; k < curve.cost.size(); ++k) {
                m.cost[k] += curve.cost[k] / 3.0;
                m.loss[k] += curve.loss[k] / 3.0;
            }
            m.final_loss += curve.final_loss / 3.0;
            d << to_string(kind) << " seed " << seed << " final " << curve.final_loss << " (tau_th " << tc.tau_th
              << ", importance steps " << importance << "); ";
        }
    }
    const Curve& u = mean[ScoreKind::uniform];
    const Curve& is = mean[ScoreKind::upper_bound];
    const double ratio = is.final_loss / u.final_loss;

    // Final third of the uniform arm's cost range, at its evaluation points.
    const double from = u.cost.back() * 2.0 / 3.0;
    std::size_t points = 0, violations = 0;
    for (std::size_t k = 0; k < u.cost.size(); ++k) {
        if (u.cost[k] < from) continue;
        ++points;
        if (loss_at(is, u.cost[k]) > u.loss[k]) ++violations;
    }
    d << "mean final ratio " << ratio << " (<= 0.8), dominance violations " << violations << "/" << points;
    return {ratio <= 0.8 && violations == 0 && points > 0, d.str()};
}

Outcome criterion_9() {
    const auto problem = synth_linreg(1000, 10, 0.5, 0);
    Layer layer;
    layer.weights = Matrix::Zero(1, 10);
    layer.bias = Vector::Zero(1);
    layer.has_bias = false;
    layer.activation = ActivationKind::identity;
    const Network start({layer});

    constexpr std::size_t seeds = 50, iterations = 1000, every = 100;
    std::vector<double> uniform(iterations / every, 0.0), importance(iterations / every, 0.0);
    std::size_t importance_steps = 0;
    for (std::size_t s = 0; s < seeds; ++s) {
        for (ScoreKind kind : {ScoreKind::uniform, ScoreKind::gradient_norm}) {
            TrainConfig c;
            c.presample_size = 64;
            c.batch_size = 8;
            c.learning_rate = 0.002;
            c.max_iterations = iterations;
            c.loss = LossKind::squared_error;
            c.score_kind = kind;
            c.a_tau = 0.0;
            c.tau_th = 1.0;
            c.seed = 1000 + s;
            auto& out = kind == ScoreKind::uniform ? uniform : importance;
            Trainer t(c, start, problem.data);
            while (!t.done()) {
                if (t.step().mode == SamplingMode::importance) ++importance_steps;
                if (t.iteration() % every == 0)
                    out[t.iteration() / every - 1] +=
                        (t.network().layer(0).weights - problem.optimum).squaredNorm() / seeds;
            }
        }
    }
    std::ostringstream d;
    bool ok = true;
    double worst = 0.0;
    for (std::size_t k = 0; k < uniform.size(); ++k) {
        worst = std::max(worst, importance[k] / uniform[k]);
        ok = ok && importance[k] <= 1.05 * uniform[k];
    }
    d << "worst distance ratio " << worst << " (<= 1.05) over " << uniform.size() << " checkpoints; final "
      << importance.back() << " vs " << uniform.back() << "; importance steps " << importance_steps << "/"
      << seeds * iterations;
    return {ok, d.str()};
}

Outcome criterion_10() {
    ExperimentConfig config = mnist_preset();
    const Dataset data = load_dataset(config.dataset);
    const Network start = initial_network(config, data);

    TrainConfig tc = arm_config(config, ScoreKind::uniform);
    tc.max_iterations = 300;
    tc.eval_every = 0;
    const Network trained = train(tc, start, data, nullptr, {});

    Network ref = start;
    GradientSet velocity = GradientSet::zeros_like(ref);
    Rng rng(tc.seed);
    for (std::size_t it = 0; it < tc.max_iterations; ++it) {
        const auto batch = uniform_batch(data.size(), tc.batch_size, rng);
        const ForwardTrace trace = forward(ref, data.rows(batch));
        const Matrix g = output_gradients(tc.loss, trace.final_pre_activation(), data.targets.select(batch)) /
                         static_cast<double>(tc.batch_size);
        sgd_step(ref, backward(ref, trace, g), tc.learning_rate_at(it), tc.momentum, tc.weight_decay, velocity);
    }
    const bool exact = trained == ref;

    TrainConfig never = arm_config(config, ScoreKind::upper_bound);
    never.tau_th = std::numeric_limits<double>::infinity();
    never.initial_tau = 1e12;
    never.max_iterations = 300;
    never.eval_every = 0;
    std::size_t importance = 0;
    train(never, start, data, nullptr, [&](const MetricsRecord& r, const Network&) {
        if (r.mode == SamplingMode::importance) ++importance;
    });
    std::ostringstream d;
    d << "uniform-only " << (exact ? "bit-identical to" : "DIFFERS from") << " plain SGD over 300 steps; tau_th=inf "
      << "took the importance branch " << importance << " times";
    return {exact && importance == 0, d.str()};
}

struct Criterion {
    int id;
    double limit_seconds;
    std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> all = {
        {1, 5, criterion_1},     {2, 1, criterion_2},     {3, 30, criterion_3},   {4, 30, criterion_4},
        {5, 60, criterion_5},    {6, 300, criterion_6},   {7, 600, criterion_7},  {8, 900, criterion_8},
        {9, 300, criterion_9},   {10, 60, criterion_10},
    };
    std::set<int> wanted;
    for (int i = 1; i < argc; ++i) wanted.insert(std::stoi(argv[i]));

    bool ok = true;
    for (const auto& c : all) {
        if (!wanted.empty() && !wanted.count(c.id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = secs < c.limit_seconds;
        const bool passed = o.passed && in_time;
        ok = ok && passed;
        std::printf("%s criterion %d: %s [%.2fs, limit %.0fs%s]\n", passed ? "PASS" : "FAIL", c.id, o.detail.c_str(),
                    secs, c.limit_seconds, in_time ? "" : ", over time");
        std::fflush(stdout);
    }
    return ok ? 0 : 1;
}
