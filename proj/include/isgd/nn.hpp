#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace isgd {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class ActivationKind { rectifier, tanh, logistic, identity };

std::string_view to_string(ActivationKind kind);
ActivationKind parse_activation(std::string_view name);

double activate(ActivationKind kind, double z);
/// sigma'(z); the rectifier derivative at exactly 0 is 0.
double activation_derivative(ActivationKind kind, double z);

/// One affine map followed by an elementwise slope-bounded non-linearity.
///
/// `weights` is out x in. `bias` has length out and is ignored (and kept at
/// zero) when `has_bias` is false.
struct Layer {
    Matrix weights;
    Vector bias;
    bool has_bias = true;
    ActivationKind activation = ActivationKind::identity;
    double slope_bound = 1.0;

    std::size_t inputs() const { return static_cast<std::size_t>(weights.cols()); }
    std::size_t outputs() const { return static_cast<std::size_t>(weights.rows()); }
    std::size_t parameter_count() const;
};

/// Ordered stack of layers. The constructor enforces the chain of widths, a
/// final identity activation, and finite parameters.
class Network {
public:
    explicit Network(std::vector<Layer> layers);

    std::size_t depth() const { return layers_.size(); }
    std::size_t input_width() const { return layers_.front().inputs(); }
    std::size_t output_width() const { return layers_.back().outputs(); }
    std::size_t parameter_count() const;

    const std::vector<Layer>& layers() const { return layers_; }
    const Layer& layer(std::size_t l) const { return layers_[l]; }
    /// Mutable access for optimizers. Callers must keep the shapes intact.
    Layer& mutable_layer(std::size_t l) { return layers_[l]; }

    /// Parameters in canonical order: per layer, row-major weights then bias
    /// (bias omitted for bias-free layers).
    std::vector<double> flatten() const;
    void assign(std::span<const double> flat);

    friend bool operator==(const Network& a, const Network& b);

private:
    std::vector<Layer> layers_;
};

/// Everything the forward pass produced for one batch (rows are samples).
struct ForwardTrace {
    /// pre_activations[l] is z of layer l+1, batch x M_{l+1}.
    std::vector<Matrix> pre_activations;
    /// activations[0] is the input batch; activations[l] = sigma(z^(l)).
    std::vector<Matrix> activations;

    std::size_t batch_size() const { return static_cast<std::size_t>(activations.front().rows()); }
    std::size_t depth() const { return pre_activations.size(); }
    const Matrix& output() const { return activations.back(); }
    const Matrix& final_pre_activation() const { return pre_activations.back(); }
};

struct LayerGradient {
    Matrix weights;
    Vector bias;
};

/// Parameter gradients, shape-matched to a Network.
struct GradientSet {
    std::vector<LayerGradient> layers;

    static GradientSet zeros_like(const Network& network);

    double squared_norm() const;
    double norm() const;
    /// ||this - other||_2 over all parameters.
    double distance(const GradientSet& other) const;
    bool all_finite() const;
    std::vector<double> flatten(const Network& network) const;
};

ForwardTrace forward(const Network& network, const Matrix& inputs);

/// The trace restricted to the given rows (repeats allowed), as if those rows
/// had been forwarded on their own.
ForwardTrace gather_rows(const ForwardTrace& trace, std::span<const std::size_t> rows);

/// Gradients of the loss with respect to every layer's pre-activation,
/// deltas[l] being batch x M_{l+1}. `output_grads` is dL/dx^(L).
std::vector<Matrix> backpropagate_deltas(const Network& network, const ForwardTrace& trace,
                                         const Matrix& output_grads);

/// Batch-summed parameter gradients. Per-sample weights are applied by
/// scaling rows of `output_grads` before the call.
GradientSet backward(const Network& network, const ForwardTrace& trace, const Matrix& output_grads);

/// ||grad_Theta L_i||_2 for every row i, as if each sample were
/// back-propagated alone.
///
/// Uses the outer-product structure of dense-layer gradients: the gradient of
/// layer l for sample i is delta_i x_i^T (plus delta_i for the bias), whose
/// squared Frobenius norm is ||delta_i||^2 (||x_i||^2 + 1).
Vector per_sample_gradient_norms(const Network& network, const ForwardTrace& trace,
                                 const Matrix& output_grads);

struct InitOptions {
    ActivationKind hidden_activation = ActivationKind::rectifier;
    bool bias = true;
};

/// Glorot-uniform weights in +-sqrt(6/(fan_in+fan_out)), zero biases.
/// `layer_dims` lists widths from input to output.
Network glorot_init(std::span<const std::size_t> layer_dims, std::uint64_t seed,
                    const InitOptions& options = {});

/// JSON container: {"format": "isgd-network", "version": 1, "layers": [...]}.
/// Weights are row-major lists of shortest round-trip decimal strings, so a
/// save/load cycle reproduces every double bit for bit.
nlohmann::json to_json(const Network& network);
Network network_from_json(const nlohmann::json& doc);

void save_network(const Network& network, const std::filesystem::path& path);
Network load_network(const std::filesystem::path& path);

}  // namespace isgd
