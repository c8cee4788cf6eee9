#include "isgd/sampling.hpp"

#include "isgd/error.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>

namespace isgd {

std::vector<double> normalize(std::span<const double> scores) {
    if (scores.empty()) throw ArgumentError("cannot normalize an empty score vector");
    double total = 0.0;
    for (double s : scores) {
        if (!std::isfinite(s) || s < 0.0) throw ArgumentError("scores must be finite and non-negative");
        total += s;
    }
    const auto n = static_cast<double>(scores.size());
    std::vector<double> g(scores.size(), 1.0 / n);
    if (total < 1e-12) return g;

    double smallest = 1.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        g[i] = scores[i] / total;
        smallest = std::min(smallest, g[i]);
    }
    if (smallest < kProbabilityFloor) {
        const double u = 1.0 / n;
        const double lambda = (kProbabilityFloor - smallest) / (u - smallest);
        for (auto& p : g) p = (1.0 - lambda) * p + lambda * u;
    }
    return g;
}

std::vector<double> normalize(const ScoreVector& scores) {
    return normalize(std::span<const double>(scores.scores.data(), scores.size()));
}

namespace {

void check_distribution(std::span<const double> g) {
    if (g.empty()) throw ArgumentError("empty probability vector");
    double total = 0.0;
    for (double p : g) {
        if (!std::isfinite(p) || p < 0.0) throw ArgumentError("probabilities must be finite and non-negative");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ArgumentError("probabilities do not sum to 1");
}

}  // namespace

std::vector<std::size_t> draw(std::span<const double> probabilities, std::size_t count, Rng& rng) {
    check_distribution(probabilities);
    if (count == 0) throw ArgumentError("draw count must be positive");
    std::vector<double> cdf(probabilities.size());
    std::partial_sum(probabilities.begin(), probabilities.end(), cdf.begin());
    const double total = cdf.back();
    std::vector<std::size_t> picks;
    picks.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        const double target = rng.uniform() * total;
        auto it = std::upper_bound(cdf.begin(), cdf.end(), target);
        if (it == cdf.end()) --it;
        picks.push_back(static_cast<std::size_t>(it - cdf.begin()));
    }
    return picks;
}

std::vector<double> importance_weights(std::span<const double> probabilities,
                                       std::span<const std::size_t> indices) {
    const auto presample = static_cast<double>(probabilities.size());
    std::vector<double> w;
    w.reserve(indices.size());
    for (auto idx : indices) {
        if (idx >= probabilities.size()) throw ArgumentError("sample index outside the presample");
        assert(probabilities[idx] > 0.0 && "normalize() floors every probability");
        w.push_back(1.0 / (presample * probabilities[idx]));
    }
    return w;
}

SamplingPlan make_plan(const ScoreVector& scores, std::size_t batch, Rng& rng) {
    SamplingPlan plan;
    plan.probabilities = normalize(scores);
    plan.selected = draw(plan.probabilities, batch, rng);
    plan.weights = importance_weights(plan.probabilities, plan.selected);
    return plan;
}

}  // namespace isgd
