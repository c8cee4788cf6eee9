#pragma once

#include "isgd/rng.hpp"
#include "isgd/scoring.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace isgd {

/// Smallest probability normalize() lets through.
inline constexpr double kProbabilityFloor = 1e-8;

/// g_i = s_i / sum(s). If sum(s) < 1e-12 the result is uniform; if some g_i
/// falls below kProbabilityFloor the distribution is mixed with uniform,
/// (1 - lambda) g + lambda u, with the smallest lambda lifting min g to the
/// floor. Negative or non-finite scores throw ArgumentError.
std::vector<double> normalize(std::span<const double> scores);
std::vector<double> normalize(const ScoreVector& scores);

/// `count` i.i.d. draws with replacement by inverse-CDF lookup.
std::vector<std::size_t> draw(std::span<const double> probabilities, std::size_t count, Rng& rng);

/// w_j = 1 / (B g_{indices[j]}) with B = probabilities.size().
std::vector<double> importance_weights(std::span<const double> probabilities,
                                       std::span<const std::size_t> indices);

struct SamplingPlan {
    std::vector<double> probabilities;
    std::vector<std::size_t> selected;
    std::vector<double> weights;
};

SamplingPlan make_plan(const ScoreVector& scores, std::size_t batch, Rng& rng);

}  // namespace isgd
