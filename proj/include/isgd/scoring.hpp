#pragma once

#include "isgd/losses.hpp"
#include "isgd/nn.hpp"

#include <string_view>
#include <vector>

namespace isgd {

enum class ScoreKind { upper_bound, loss, gradient_norm, uniform };

std::string_view to_string(ScoreKind kind);
ScoreKind parse_score_kind(std::string_view name);

/// Non-negative, finite per-sample importance scores.
struct ScoreVector {
    Vector scores;
    ScoreKind kind = ScoreKind::uniform;

    std::size_t size() const { return static_cast<std::size_t>(scores.size()); }
};

/// ||grad of the loss w.r.t. the final pre-activation||_2 per sample. Needs
/// only the forward trace; the constant L*rho of the full bound is dropped
/// since sampling probabilities are normalized anyway.
ScoreVector upper_bound_scores(const ForwardTrace& trace, LossKind kind, const Targets& targets);

ScoreVector loss_scores(const ForwardTrace& trace, LossKind kind, const Targets& targets);

/// Exact per-sample parameter-gradient norms (the oracle distribution).
ScoreVector gradient_norm_scores(const Network& network, const ForwardTrace& trace, LossKind kind,
                                 const Targets& targets);

ScoreVector uniform_scores(std::size_t count);

/// Dispatch on `kind`. `network` is only used for gradient_norm.
ScoreVector compute_scores(ScoreKind kind, const Network& network, const ForwardTrace& trace, LossKind loss,
                           const Targets& targets);

enum class MatrixNorm { spectral, frobenius };

struct RhoEstimate {
    double rho = 0.0;
    /// per_layer_terms[l] = max_i ||x_i^(l)|| * ||Delta_i^(l+1)||, with the
    /// input augmented by a constant 1 when the layer has a bias.
    std::vector<double> per_layer_terms;
};

/// The layer-propagation constant of the gradient-norm bound: for every
/// sample i, ||grad_Theta L_i|| <= depth * rho * upper_bound_score_i.
///
/// Delta_i^(l) = Sigma'_l theta_{l+1}^T ... Sigma'_{L-1} theta_L^T is formed
/// explicitly per sample. The spectral norm is exact (Delta has only M_L
/// columns); the Frobenius norm is larger and loosens the bound.
RhoEstimate empirical_rho(const Network& network, const ForwardTrace& trace,
                          MatrixNorm norm = MatrixNorm::spectral);

}  // namespace isgd
