#include "isgd/experiments.hpp"

#include "isgd/error.hpp"
#include "isgd/rng.hpp"
#include "isgd/sampling.hpp"

#include <algorithm>
#include <cmath>

namespace isgd {

double pearson_correlation(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 2) throw ArgumentError("correlation needs two equal-length series");
    const auto n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa == 0.0 || sbb == 0.0) return saa == sbb ? 1.0 : 0.0;
    return sab / std::sqrt(saa * sbb);
}

double sum_squared_error(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ArgumentError("series differ in length");
    double total = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) total += (a[i] - b[i]) * (a[i] - b[i]);
    return total;
}

CorrelationReport correlate_scores(const Network& network, const Dataset& data, LossKind kind,
                                   std::span<const std::size_t> indices) {
    const Targets targets = data.targets.select(indices);
    const ForwardTrace trace = forward(network, data.rows(indices));

    CorrelationReport report;
    report.indices.assign(indices.begin(), indices.end());
    report.loss_probs = normalize(loss_scores(trace, kind, targets));
    report.upper_probs = normalize(upper_bound_scores(trace, kind, targets));
    report.gradnorm_probs = normalize(gradient_norm_scores(network, trace, kind, targets));
    report.sse_loss = sum_squared_error(report.loss_probs, report.gradnorm_probs);
    report.sse_upper = sum_squared_error(report.upper_probs, report.gradnorm_probs);
    report.pearson_loss = pearson_correlation(report.loss_probs, report.gradnorm_probs);
    report.pearson_upper = pearson_correlation(report.upper_probs, report.gradnorm_probs);
    return report;
}

const ProbeArm& ProbeReport::arm(ScoreKind kind) const {
    for (const auto& a : arms)
        if (a.kind == kind) return a;
    throw ArgumentError("probe has no '" + std::string(to_string(kind)) + "' arm");
}

ProbeReport probe_variance(const Network& network, const Dataset& data, LossKind kind,
                           std::span<const std::size_t> presample, std::size_t batch, std::size_t resamples,
                           std::span<const ScoreKind> arms, std::uint64_t seed) {
    if (batch == 0 || resamples == 0) throw ArgumentError("probe batch and resample count must be positive");
    const Targets targets = data.targets.select(presample);
    const ForwardTrace trace = forward(network, data.rows(presample));
    const Matrix out = output_gradients(kind, trace.final_pre_activation(), targets);
    const GradientSet full_mean = backward(network, trace, out / static_cast<double>(presample.size()));

    std::vector<ScoreKind> kinds{ScoreKind::uniform};
    for (auto k : arms)
        if (std::find(kinds.begin(), kinds.end(), k) == kinds.end()) kinds.push_back(k);

    ProbeReport report;
    for (auto k : kinds) {
        const auto g = normalize(compute_scores(k, network, trace, kind, targets));
        ProbeArm arm;
        arm.kind = k;
        for (std::size_t r = 0; r < resamples; ++r) {
            Rng rng(mix_seed(seed + r));
            const auto picks = draw(g, batch, rng);
            const auto w = importance_weights(g, picks);
            Matrix picked_out(static_cast<Eigen::Index>(batch), out.cols());
            for (std::size_t j = 0; j < batch; ++j)
                picked_out.row(static_cast<Eigen::Index>(j)) =
                    out.row(static_cast<Eigen::Index>(picks[j])) * (w[j] / static_cast<double>(batch));
            const GradientSet small = backward(network, gather_rows(trace, picks), picked_out);
            arm.distances.push_back(small.distance(full_mean));
        }
        double total = 0.0;
        for (double d : arm.distances) total += d;
        arm.mean_distance = total / static_cast<double>(resamples);
        report.arms.push_back(std::move(arm));
    }
    const double reference = report.arms.front().mean_distance;
    for (auto& arm : report.arms) arm.normalized = reference > 0.0 ? arm.mean_distance / reference : 1.0;
    return report;
}

}  // namespace isgd
