#include "isgd/losses.hpp"

#include "isgd/error.hpp"

#include <cmath>

namespace isgd {

std::string_view to_string(LossKind kind) {
    switch (kind) {
        case LossKind::softmax_cross_entropy: return "softmax-cross-entropy";
        case LossKind::sigmoid_binary_nll: return "sigmoid-binary-nll";
        case LossKind::squared_error: return "squared-error";
    }
    return "squared-error";
}

LossKind parse_loss(std::string_view name) {
    if (name == "softmax-cross-entropy") return LossKind::softmax_cross_entropy;
    if (name == "sigmoid-binary-nll") return LossKind::sigmoid_binary_nll;
    if (name == "squared-error") return LossKind::squared_error;
    throw ArgumentError("unknown loss '" + std::string(name) + "'");
}

Targets Targets::classes(std::vector<std::size_t> labels) {
    Targets t;
    t.is_classes_ = true;
    t.labels_ = std::move(labels);
    return t;
}

Targets Targets::values(Matrix values) {
    Targets t;
    t.values_ = std::move(values);
    return t;
}

std::size_t Targets::size() const {
    return is_classes_ ? labels_.size() : static_cast<std::size_t>(values_.rows());
}

Targets Targets::select(std::span<const std::size_t> rows) const {
    if (is_classes_) {
        std::vector<std::size_t> picked;
        picked.reserve(rows.size());
        for (auto r : rows) picked.push_back(labels_.at(r));
        return classes(std::move(picked));
    }
    Matrix picked(static_cast<Eigen::Index>(rows.size()), values_.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] >= size()) throw ArgumentError("target row out of range");
        picked.row(static_cast<Eigen::Index>(i)) = values_.row(static_cast<Eigen::Index>(rows[i]));
    }
    return values(std::move(picked));
}

namespace {

void check_targets(LossKind kind, const Matrix& z, const Targets& targets) {
    if (targets.size() != static_cast<std::size_t>(z.rows()))
        throw ShapeError("target count does not match batch size");
    if (kind == LossKind::softmax_cross_entropy) {
        if (!targets.has_classes()) throw ArgumentError("softmax cross-entropy needs class-index targets");
        for (auto label : targets.labels())
            if (label >= static_cast<std::size_t>(z.cols()))
                throw ArgumentError("class index " + std::to_string(label) + " out of range for " +
                                    std::to_string(z.cols()) + " outputs");
        return;
    }
    if (targets.has_classes()) throw ArgumentError(std::string(to_string(kind)) + " needs real-valued targets");
    if (targets.matrix().cols() != z.cols()) throw ShapeError("target width does not match output width");
    if (kind == LossKind::sigmoid_binary_nll) {
        for (Eigen::Index i = 0; i < targets.matrix().size(); ++i) {
            const double y = targets.matrix().data()[i];
            if (y != 1.0 && y != -1.0) throw ArgumentError("sigmoid NLL targets must be +1 or -1");
        }
    }
}

// log(1 + exp(v)) without overflow.
double softplus(double v) { return v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v)); }

double sigmoid(double v) {
    if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
}

}  // namespace

Vector loss_values(LossKind kind, const Matrix& z, const Targets& targets) {
    check_targets(kind, z, targets);
    Vector out(z.rows());
    switch (kind) {
        case LossKind::softmax_cross_entropy:
            for (Eigen::Index i = 0; i < z.rows(); ++i) {
                const double m = z.row(i).maxCoeff();
                const double lse = m + std::log((z.row(i).array() - m).exp().sum());
                out(i) = lse - z(i, static_cast<Eigen::Index>(targets.labels()[static_cast<std::size_t>(i)]));
            }
            break;
        case LossKind::sigmoid_binary_nll:
            for (Eigen::Index i = 0; i < z.rows(); ++i) {
                double total = 0.0;
                for (Eigen::Index k = 0; k < z.cols(); ++k) total += softplus(-targets.matrix()(i, k) * z(i, k));
                out(i) = total;
            }
            break;
        case LossKind::squared_error:
            out = (z - targets.matrix()).rowwise().squaredNorm();
            break;
    }
    return out;
}

Matrix preactivation_gradients(LossKind kind, const Matrix& z, const Targets& targets) {
    check_targets(kind, z, targets);
    Matrix grad(z.rows(), z.cols());
    switch (kind) {
        case LossKind::softmax_cross_entropy:
            for (Eigen::Index i = 0; i < z.rows(); ++i) {
                const double m = z.row(i).maxCoeff();
                Eigen::RowVectorXd e = (z.row(i).array() - m).exp().matrix();
                grad.row(i) = e / e.sum();
                grad(i, static_cast<Eigen::Index>(targets.labels()[static_cast<std::size_t>(i)])) -= 1.0;
            }
            break;
        case LossKind::sigmoid_binary_nll:
            for (Eigen::Index i = 0; i < z.rows(); ++i)
                for (Eigen::Index k = 0; k < z.cols(); ++k) {
                    const double y = targets.matrix()(i, k);
                    grad(i, k) = (sigmoid(y * z(i, k)) - 1.0) * y;
                }
            break;
        case LossKind::squared_error:
            grad = 2.0 * (z - targets.matrix());
            break;
    }
    return grad;
}

}  // namespace isgd
