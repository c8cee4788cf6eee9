#pragma once

#include "isgd/nn.hpp"

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace isgd {

enum class LossKind { softmax_cross_entropy, sigmoid_binary_nll, squared_error };

std::string_view to_string(LossKind kind);
LossKind parse_loss(std::string_view name);

/// Per-sample supervision: class indices (softmax cross-entropy) or a real
/// matrix with one row per sample (+-1 entries for the sigmoid NLL, free
/// values for squared error).
class Targets {
public:
    Targets() = default;
    static Targets classes(std::vector<std::size_t> labels);
    static Targets values(Matrix values);

    bool has_classes() const { return is_classes_; }
    std::size_t size() const;
    const std::vector<std::size_t>& labels() const { return labels_; }
    const Matrix& matrix() const { return values_; }

    Targets select(std::span<const std::size_t> rows) const;

private:
    bool is_classes_ = false;
    std::vector<std::size_t> labels_;
    Matrix values_;
};

/// Loss of every row of the final pre-activation `z` (batch x M_L).
///
/// softmax-CE uses the log-sum-exp form; sigmoid NLL is
/// sum_k log(1 + exp(-y_k z_k)); squared error is ||z - y||^2 without a 1/2.
Vector loss_values(LossKind kind, const Matrix& z, const Targets& targets);

/// Row i is Sigma'_L(z_i) grad_{x_L} L, the loss gradient with respect to the
/// final pre-activation. Its norm is the importance score.
Matrix preactivation_gradients(LossKind kind, const Matrix& z, const Targets& targets);

/// dL/dx^(L). Equal to preactivation_gradients because the final layer is
/// linear; this is what feeds backward().
inline Matrix output_gradients(LossKind kind, const Matrix& z, const Targets& targets) {
    return preactivation_gradients(kind, z, targets);
}

}  // namespace isgd
