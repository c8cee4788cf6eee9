#include "isgd/nn.hpp"

#include "isgd/error.hpp"
#include "isgd/rng.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

namespace isgd {

std::string_view to_string(ActivationKind kind) {
    switch (kind) {
        case ActivationKind::rectifier: return "rectifier";
        case ActivationKind::tanh: return "tanh";
        case ActivationKind::logistic: return "logistic";
        case ActivationKind::identity: return "identity";
    }
    return "identity";
}

ActivationKind parse_activation(std::string_view name) {
    if (name == "rectifier" || name == "relu") return ActivationKind::rectifier;
    if (name == "tanh") return ActivationKind::tanh;
    if (name == "logistic" || name == "sigmoid") return ActivationKind::logistic;
    if (name == "identity" || name == "linear") return ActivationKind::identity;
    throw ArgumentError("unknown activation '" + std::string(name) + "'");
}

double activate(ActivationKind kind, double z) {
    switch (kind) {
        case ActivationKind::rectifier: return z > 0.0 ? z : 0.0;
        case ActivationKind::tanh: return std::tanh(z);
        case ActivationKind::logistic: return 1.0 / (1.0 + std::exp(-z));
        case ActivationKind::identity: return z;
    }
    return z;
}

double activation_derivative(ActivationKind kind, double z) {
    switch (kind) {
        case ActivationKind::rectifier: return z > 0.0 ? 1.0 : 0.0;
        case ActivationKind::tanh: {
            const double t = std::tanh(z);
            return 1.0 - t * t;
        }
        case ActivationKind::logistic: {
            const double s = 1.0 / (1.0 + std::exp(-z));
            return s * (1.0 - s);
        }
        case ActivationKind::identity: return 1.0;
    }
    return 1.0;
}

std::size_t Layer::parameter_count() const {
    return static_cast<std::size_t>(weights.size()) + (has_bias ? outputs() : 0);
}

Network::Network(std::vector<Layer> layers) : layers_(std::move(layers)) {
    if (layers_.empty()) throw ArgumentError("network needs at least one layer");
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        Layer& layer = layers_[l];
        if (layer.weights.rows() == 0 || layer.weights.cols() == 0)
            throw ShapeError("layer " + std::to_string(l) + " has an empty weight matrix");
        if (layer.bias.size() == 0) layer.bias = Vector::Zero(layer.weights.rows());
        if (layer.bias.size() != layer.weights.rows())
            throw ShapeError("layer " + std::to_string(l) + " bias length does not match its outputs");
        if (!layer.has_bias) layer.bias.setZero();
        if (l > 0 && layers_[l - 1].outputs() != layer.inputs())
            throw ShapeError("layer " + std::to_string(l) + " expects " + std::to_string(layer.inputs()) +
                             " inputs but the previous layer produces " +
                             std::to_string(layers_[l - 1].outputs()));
        if (!(layer.slope_bound > 0.0)) throw ArgumentError("slope bound must be positive");
        if (!layer.weights.allFinite() || !layer.bias.allFinite())
            throw DomainError("layer " + std::to_string(l) + " has non-finite parameters");
    }
    if (layers_.back().activation != ActivationKind::identity)
        throw ArgumentError("final layer activation must be identity; losses own the output non-linearity");
}

std::size_t Network::parameter_count() const {
    std::size_t n = 0;
    for (const auto& layer : layers_) n += layer.parameter_count();
    return n;
}

std::vector<double> Network::flatten() const {
    std::vector<double> flat;
    flat.reserve(parameter_count());
    for (const auto& layer : layers_) {
        for (Eigen::Index r = 0; r < layer.weights.rows(); ++r)
            for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) flat.push_back(layer.weights(r, c));
        if (layer.has_bias)
            for (Eigen::Index r = 0; r < layer.bias.size(); ++r) flat.push_back(layer.bias(r));
    }
    return flat;
}

void Network::assign(std::span<const double> flat) {
    if (flat.size() != parameter_count()) throw ShapeError("flat parameter vector has the wrong length");
    std::size_t k = 0;
    for (auto& layer : layers_) {
        for (Eigen::Index r = 0; r < layer.weights.rows(); ++r)
            for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) layer.weights(r, c) = flat[k++];
        if (layer.has_bias)
            for (Eigen::Index r = 0; r < layer.bias.size(); ++r) layer.bias(r) = flat[k++];
    }
}

bool operator==(const Network& a, const Network& b) {
    if (a.depth() != b.depth()) return false;
    for (std::size_t l = 0; l < a.depth(); ++l) {
        const Layer& x = a.layers_[l];
        const Layer& y = b.layers_[l];
        if (x.activation != y.activation || x.has_bias != y.has_bias || x.slope_bound != y.slope_bound)
            return false;
        if (x.weights.rows() != y.weights.rows() || x.weights.cols() != y.weights.cols()) return false;
        if (x.weights != y.weights || x.bias != y.bias) return false;
    }
    return true;
}

GradientSet GradientSet::zeros_like(const Network& network) {
    GradientSet grads;
    grads.layers.reserve(network.depth());
    for (const auto& layer : network.layers())
        grads.layers.push_back({Matrix::Zero(layer.weights.rows(), layer.weights.cols()),
                                Vector::Zero(layer.bias.size())});
    return grads;
}

double GradientSet::squared_norm() const {
    double total = 0.0;
    for (const auto& g : layers) total += g.weights.squaredNorm() + g.bias.squaredNorm();
    return total;
}

double GradientSet::norm() const { return std::sqrt(squared_norm()); }

double GradientSet::distance(const GradientSet& other) const {
    if (other.layers.size() != layers.size()) throw ShapeError("gradient sets differ in depth");
    double total = 0.0;
    for (std::size_t l = 0; l < layers.size(); ++l)
        total += (layers[l].weights - other.layers[l].weights).squaredNorm() +
                 (layers[l].bias - other.layers[l].bias).squaredNorm();
    return std::sqrt(total);
}

bool GradientSet::all_finite() const {
    for (const auto& g : layers)
        if (!g.weights.allFinite() || !g.bias.allFinite()) return false;
    return true;
}

std::vector<double> GradientSet::flatten(const Network& network) const {
    std::vector<double> flat;
    flat.reserve(network.parameter_count());
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto& g = layers[l];
        for (Eigen::Index r = 0; r < g.weights.rows(); ++r)
            for (Eigen::Index c = 0; c < g.weights.cols(); ++c) flat.push_back(g.weights(r, c));
        if (network.layer(l).has_bias)
            for (Eigen::Index r = 0; r < g.bias.size(); ++r) flat.push_back(g.bias(r));
    }
    return flat;
}

ForwardTrace forward(const Network& network, const Matrix& inputs) {
    if (static_cast<std::size_t>(inputs.cols()) != network.input_width())
        throw ShapeError("input width " + std::to_string(inputs.cols()) + " does not match network input " +
                         std::to_string(network.input_width()));
    if (inputs.rows() == 0) throw ShapeError("empty input batch");
    if (!inputs.allFinite()) throw DomainError("non-finite input");

    ForwardTrace trace;
    trace.pre_activations.reserve(network.depth());
    trace.activations.reserve(network.depth() + 1);
    trace.activations.push_back(inputs);
    for (const auto& layer : network.layers()) {
        Matrix z = trace.activations.back() * layer.weights.transpose();
        if (layer.has_bias) z.rowwise() += layer.bias.transpose();
        Matrix x = layer.activation == ActivationKind::identity
                       ? z
                       : Matrix(z.unaryExpr([kind = layer.activation](double v) { return activate(kind, v); }));
        trace.pre_activations.push_back(std::move(z));
        trace.activations.push_back(std::move(x));
    }
    return trace;
}

ForwardTrace gather_rows(const ForwardTrace& trace, std::span<const std::size_t> rows) {
    auto pick = [&](const Matrix& m) {
        Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i] >= static_cast<std::size_t>(m.rows())) throw ArgumentError("trace row out of range");
            out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
        }
        return out;
    };
    ForwardTrace out;
    for (const auto& z : trace.pre_activations) out.pre_activations.push_back(pick(z));
    for (const auto& x : trace.activations) out.activations.push_back(pick(x));
    return out;
}

namespace {

void check_trace(const Network& network, const ForwardTrace& trace, const Matrix& output_grads) {
    if (trace.depth() != network.depth() || trace.activations.size() != network.depth() + 1)
        throw ShapeError("trace depth does not match network depth");
    for (std::size_t l = 0; l < network.depth(); ++l) {
        const auto& z = trace.pre_activations[l];
        if (static_cast<std::size_t>(z.cols()) != network.layer(l).outputs() ||
            static_cast<std::size_t>(trace.activations[l].cols()) != network.layer(l).inputs() ||
            z.rows() != trace.activations[0].rows())
            throw ShapeError("trace layer " + std::to_string(l) + " does not match the network");
    }
    if (output_grads.rows() != trace.activations[0].rows() ||
        static_cast<std::size_t>(output_grads.cols()) != network.output_width())
        throw ShapeError("output gradient shape does not match the trace");
}

}  // namespace

std::vector<Matrix> backpropagate_deltas(const Network& network, const ForwardTrace& trace,
                                         const Matrix& output_grads) {
    check_trace(network, trace, output_grads);
    const std::size_t depth = network.depth();
    std::vector<Matrix> deltas(depth);
    Matrix upstream = output_grads;  // dL/dx^(l)
    for (std::size_t l = depth; l-- > 0;) {
        const Layer& layer = network.layer(l);
        if (layer.activation == ActivationKind::identity) {
            deltas[l] = upstream;
        } else {
            deltas[l] = upstream.cwiseProduct(trace.pre_activations[l].unaryExpr(
                [kind = layer.activation](double v) { return activation_derivative(kind, v); }));
        }
        if (l > 0) upstream = deltas[l] * layer.weights;
    }
    return deltas;
}

GradientSet backward(const Network& network, const ForwardTrace& trace, const Matrix& output_grads) {
    const auto deltas = backpropagate_deltas(network, trace, output_grads);
    GradientSet grads;
    grads.layers.reserve(network.depth());
    for (std::size_t l = 0; l < network.depth(); ++l) {
        LayerGradient g;
        g.weights = deltas[l].transpose() * trace.activations[l];
        g.bias = network.layer(l).has_bias ? Vector(deltas[l].colwise().sum().transpose())
                                           : Vector::Zero(network.layer(l).outputs());
        grads.layers.push_back(std::move(g));
    }
    return grads;
}

Vector per_sample_gradient_norms(const Network& network, const ForwardTrace& trace,
                                 const Matrix& output_grads) {
    const auto deltas = backpropagate_deltas(network, trace, output_grads);
    Vector squared = Vector::Zero(output_grads.rows());
    for (std::size_t l = 0; l < network.depth(); ++l) {
        Vector input_sq = trace.activations[l].rowwise().squaredNorm();
        if (network.layer(l).has_bias) input_sq.array() += 1.0;
        squared.array() += deltas[l].rowwise().squaredNorm().array() * input_sq.array();
    }
    return squared.cwiseSqrt();
}

Network glorot_init(std::span<const std::size_t> layer_dims, std::uint64_t seed, const InitOptions& options) {
    if (layer_dims.size() < 2) throw ArgumentError("glorot_init needs at least an input and an output width");
    for (auto d : layer_dims)
        if (d == 0) throw ArgumentError("layer widths must be positive");
    Rng rng(seed);
    std::vector<Layer> layers;
    for (std::size_t l = 1; l < layer_dims.size(); ++l) {
        const auto fan_in = layer_dims[l - 1];
        const auto fan_out = layer_dims[l];
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        Layer layer;
        layer.weights.resize(static_cast<Eigen::Index>(fan_out), static_cast<Eigen::Index>(fan_in));
        for (Eigen::Index r = 0; r < layer.weights.rows(); ++r)
            for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) layer.weights(r, c) = rng.uniform(-limit, limit);
        layer.bias = Vector::Zero(static_cast<Eigen::Index>(fan_out));
        layer.has_bias = options.bias;
        layer.activation = l + 1 == layer_dims.size() ? ActivationKind::identity : options.hidden_activation;
        layers.push_back(std::move(layer));
    }
    return Network(std::move(layers));
}

namespace {

std::string exact_decimal(double v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, end);
}

double parse_decimal(const nlohmann::json& cell) {
    if (cell.is_number()) return cell.get<double>();
    const auto& text = cell.get_ref<const std::string&>();
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size())
        throw FormatError("bad decimal '" + text + "' in network file");
    return v;
}

}  // namespace

nlohmann::json to_json(const Network& network) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& layer : network.layers()) {
        nlohmann::json weights = nlohmann::json::array();
        for (Eigen::Index r = 0; r < layer.weights.rows(); ++r)
            for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) weights.push_back(exact_decimal(layer.weights(r, c)));
        nlohmann::json bias = nlohmann::json::array();
        for (Eigen::Index r = 0; r < layer.bias.size(); ++r) bias.push_back(exact_decimal(layer.bias(r)));
        layers.push_back({{"inputs", layer.inputs()},
                          {"outputs", layer.outputs()},
                          {"activation", to_string(layer.activation)},
                          {"slope_bound", exact_decimal(layer.slope_bound)},
                          {"has_bias", layer.has_bias},
                          {"weights", std::move(weights)},
                          {"bias", std::move(bias)}});
    }
    return {{"format", "isgd-network"}, {"version", 1}, {"layers", std::move(layers)}};
}

Network network_from_json(const nlohmann::json& doc) {
    try {
        if (doc.at("format") != "isgd-network") throw FormatError("not an isgd network document");
        if (doc.at("version").get<int>() != 1) throw FormatError("unsupported network format version");
        std::vector<Layer> layers;
        for (const auto& entry : doc.at("layers")) {
            const auto in = entry.at("inputs").get<Eigen::Index>();
            const auto out = entry.at("outputs").get<Eigen::Index>();
            const auto& w = entry.at("weights");
            const auto& b = entry.at("bias");
            if (static_cast<Eigen::Index>(w.size()) != in * out || static_cast<Eigen::Index>(b.size()) != out)
                throw FormatError("weight payload size does not match layer dimensions");
            Layer layer;
            layer.weights.resize(out, in);
            std::size_t k = 0;
            for (Eigen::Index r = 0; r < out; ++r)
                for (Eigen::Index c = 0; c < in; ++c) layer.weights(r, c) = parse_decimal(w[k++]);
            layer.bias.resize(out);
            for (Eigen::Index r = 0; r < out; ++r) layer.bias(r) = parse_decimal(b[static_cast<std::size_t>(r)]);
            layer.has_bias = entry.at("has_bias").get<bool>();
            layer.activation = parse_activation(entry.at("activation").get<std::string>());
            layer.slope_bound = parse_decimal(entry.at("slope_bound"));
            layers.push_back(std::move(layer));
        }
        return Network(std::move(layers));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed network document: ") + e.what());
    }
}

void save_network(const Network& network, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << to_json(network).dump() << '\n';
    if (!out) throw IoError("write failed for " + path.string());
}

Network load_network(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
    return network_from_json(doc);
}

}  // namespace isgd
