#pragma once

#include "isgd/datasets.hpp"
#include "isgd/losses.hpp"
#include "isgd/nn.hpp"
#include "isgd/scoring.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace isgd {

double pearson_correlation(std::span<const double> a, std::span<const double> b);
double sum_squared_error(std::span<const double> a, std::span<const double> b);

/// Sampling distributions induced by the loss, the upper bound and the true
/// gradient norm over one set of samples, compared against the gradient-norm
/// distribution.
struct CorrelationReport {
    std::vector<std::size_t> indices;
    std::vector<double> loss_probs;
    std::vector<double> upper_probs;
    std::vector<double> gradnorm_probs;
    double sse_loss = 0.0;
    double sse_upper = 0.0;
    double pearson_loss = 0.0;
    double pearson_upper = 0.0;
};

CorrelationReport correlate_scores(const Network& network, const Dataset& data, LossKind kind,
                                   std::span<const std::size_t> indices);

struct ProbeArm {
    ScoreKind kind = ScoreKind::uniform;
    /// ||mean weighted small-batch gradient - presample mean gradient||, one
    /// entry per resample.
    std::vector<double> distances;
    double mean_distance = 0.0;
    /// mean_distance divided by the uniform arm's mean_distance.
    double normalized = 0.0;
};

struct ProbeReport {
    std::vector<ProbeArm> arms;
    const ProbeArm& arm(ScoreKind kind) const;
};

/// Resamples `batch` points from `presample` (with replacement) under each
/// arm's distribution `resamples` times and measures how far the weighted
/// small-batch gradient lands from the presample's full mean gradient.
/// Resample r uses the same random stream for every arm. The uniform arm is
/// always evaluated and comes first.
ProbeReport probe_variance(const Network& network, const Dataset& data, LossKind kind,
                           std::span<const std::size_t> presample, std::size_t batch, std::size_t resamples,
                           std::span<const ScoreKind> arms, std::uint64_t seed);

}  // namespace isgd
