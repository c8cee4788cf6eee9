#include "isgd/scoring.hpp"

#include "isgd/error.hpp"

#include <algorithm>
#include <cmath>

namespace isgd {

std::string_view to_string(ScoreKind kind) {
    switch (kind) {
        case ScoreKind::upper_bound: return "upper-bound";
        case ScoreKind::loss: return "loss";
        case ScoreKind::gradient_norm: return "gradient-norm";
        case ScoreKind::uniform: return "uniform";
    }
    return "uniform";
}

ScoreKind parse_score_kind(std::string_view name) {
    if (name == "upper-bound") return ScoreKind::upper_bound;
    if (name == "loss") return ScoreKind::loss;
    if (name == "gradient-norm") return ScoreKind::gradient_norm;
    if (name == "uniform" || name == "uniform-only") return ScoreKind::uniform;
    throw ArgumentError("unknown score kind '" + std::string(name) + "'");
}

ScoreVector upper_bound_scores(const ForwardTrace& trace, LossKind kind, const Targets& targets) {
    const Matrix grads = preactivation_gradients(kind, trace.final_pre_activation(), targets);
    return {grads.rowwise().norm(), ScoreKind::upper_bound};
}

ScoreVector loss_scores(const ForwardTrace& trace, LossKind kind, const Targets& targets) {
    // Rounding in log-sum-exp can leave a perfectly fit sample at -1e-17.
    Vector losses = loss_values(kind, trace.final_pre_activation(), targets).cwiseMax(0.0);
    return {std::move(losses), ScoreKind::loss};
}

ScoreVector gradient_norm_scores(const Network& network, const ForwardTrace& trace, LossKind kind,
                                 const Targets& targets) {
    const Matrix out = output_gradients(kind, trace.final_pre_activation(), targets);
    return {per_sample_gradient_norms(network, trace, out), ScoreKind::gradient_norm};
}

ScoreVector uniform_scores(std::size_t count) {
    if (count == 0) throw ArgumentError("score vector must not be empty");
    return {Vector::Ones(static_cast<Eigen::Index>(count)), ScoreKind::uniform};
}

ScoreVector compute_scores(ScoreKind kind, const Network& network, const ForwardTrace& trace, LossKind loss,
                           const Targets& targets) {
    switch (kind) {
        case ScoreKind::upper_bound: return upper_bound_scores(trace, loss, targets);
        case ScoreKind::loss: return loss_scores(trace, loss, targets);
        case ScoreKind::gradient_norm: return gradient_norm_scores(network, trace, loss, targets);
        case ScoreKind::uniform: return uniform_scores(trace.batch_size());
    }
    return uniform_scores(trace.batch_size());
}

namespace {

double matrix_norm(const Matrix& m, MatrixNorm norm) {
    if (norm == MatrixNorm::frobenius || m.cols() == 1 || m.rows() == 1) return m.norm();
    // Largest singular value from the eigenvalues of the smaller Gram matrix.
    const Matrix gram = m.rows() < m.cols() ? Matrix(m * m.transpose()) : Matrix(m.transpose() * m);
    Eigen::SelfAdjointEigenSolver<Matrix> solver(gram, Eigen::EigenvaluesOnly);
    return std::sqrt(std::max(solver.eigenvalues().maxCoeff(), 0.0));
}

}  // namespace

RhoEstimate empirical_rho(const Network& network, const ForwardTrace& trace, MatrixNorm norm) {
    if (trace.depth() != network.depth()) throw ShapeError("trace depth does not match network depth");
    const std::size_t depth = network.depth();
    const auto batch = static_cast<Eigen::Index>(trace.batch_size());
    const auto out_width = static_cast<Eigen::Index>(network.output_width());

    RhoEstimate est;
    est.per_layer_terms.assign(depth, 0.0);
    for (Eigen::Index i = 0; i < batch; ++i) {
        // Walk from the output down; delta maps dL/dz^(L) to dL/dz^(l).
        Matrix delta = Matrix::Identity(out_width, out_width);
        for (std::size_t l = depth; l-- > 0;) {
            const Layer& layer = network.layer(l);
            if (l + 1 < depth) {
                Matrix propagated = network.layer(l + 1).weights.transpose() * delta;
                const auto& z = trace.pre_activations[l];
                for (Eigen::Index r = 0; r < propagated.rows(); ++r)
                    propagated.row(r) *= activation_derivative(layer.activation, z(i, r));
                delta = std::move(propagated);
            }
            double input_sq = trace.activations[l].row(i).squaredNorm();
            if (layer.has_bias) input_sq += 1.0;
            const double term = std::sqrt(input_sq) * matrix_norm(delta, norm);
            est.per_layer_terms[l] = std::max(est.per_layer_terms[l], term);
        }
    }
    est.rho = *std::max_element(est.per_layer_terms.begin(), est.per_layer_terms.end());
    return est;
}

}  // namespace isgd
