#include "isgd/validation.hpp"

#include "isgd/error.hpp"
#include "isgd/sampling.hpp"
#include "isgd/scoring.hpp"
#include "isgd/variance.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace isgd {

ValidationHooks::ValidationHooks()
    : tau([](std::span<const double> g) { return instantaneous_tau(g); }),
      weights([](std::span<const double> g, std::span<const std::size_t> idx) { return importance_weights(g, idx); }) {}

Network random_network(std::span<const std::size_t> widths, Rng& rng, bool bias) {
    if (widths.size() < 2) throw ArgumentError("a network needs at least an input and an output width");
    static constexpr ActivationKind hidden[] = {ActivationKind::rectifier, ActivationKind::tanh,
                                                ActivationKind::logistic};
    std::vector<Layer> layers;
    for (std::size_t l = 1; l < widths.size(); ++l) {
        Layer layer;
        const double scale = 1.5 / std::sqrt(static_cast<double>(widths[l - 1]));
        layer.weights = Matrix(widths[l], widths[l - 1]);
        for (Eigen::Index r = 0; r < layer.weights.rows(); ++r)
            for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) layer.weights(r, c) = scale * rng.normal();
        layer.has_bias = bias;
        layer.bias = Vector::Zero(static_cast<Eigen::Index>(widths[l]));
        if (bias)
            for (Eigen::Index r = 0; r < layer.bias.size(); ++r) layer.bias(r) = 0.3 * rng.normal();
        layer.activation = l + 1 == widths.size() ? ActivationKind::identity : hidden[rng.below(3)];
        layers.push_back(std::move(layer));
    }
    return Network(std::move(layers));
}

Targets random_targets(LossKind kind, std::size_t rows, std::size_t outputs, Rng& rng) {
    if (kind == LossKind::softmax_cross_entropy) {
        std::vector<std::size_t> labels(rows);
        for (auto& y : labels) y = rng.below(outputs);
        return Targets::classes(std::move(labels));
    }
    Matrix y(rows, outputs);
    for (Eigen::Index r = 0; r < y.rows(); ++r)
        for (Eigen::Index c = 0; c < y.cols(); ++c)
            y(r, c) = kind == LossKind::sigmoid_binary_nll ? (rng.uniform() < 0.5 ? -1.0 : 1.0) : rng.normal();
    return Targets::values(std::move(y));
}

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = rng.normal();
    return m;
}

// Positive scores spanning several orders of magnitude.
std::vector<double> random_scores(std::size_t n, Rng& rng) {
    std::vector<double> s(n);
    for (auto& v : s) v = std::exp(2.0 * rng.normal());
    return s;
}

std::string format(const char* label, double value) {
    std::ostringstream out;
    out << label << value;
    return out.str();
}

}  // namespace

PropertyResult check_variance_identity(std::size_t instances, std::uint64_t seed) {
    PropertyResult r{"variance-reduction closed form", true, 0.0, 1e-10, {}};
    Rng rng(seed);
    for (std::size_t k = 0; k < instances; ++k) {
        const std::size_t n = 2 + rng.below(63);
        const auto norms = random_scores(n, rng);
        const auto g = normalize(norms);
        const double direct = variance_reduction_direct(norms, g);
        const double closed = variance_reduction_closed_form(norms, g);
        const double scale = std::max({std::abs(direct), std::abs(closed), 1e-300});
        r.measured = std::max(r.measured, std::abs(direct - closed) / scale);
    }
    r.passed = r.measured <= r.tolerance;
    r.detail = format("max relative error ", r.measured);
    return r;
}

PropertyResult check_unbiasedness(std::size_t max_presample, std::uint64_t seed, const ValidationHooks& hooks) {
    PropertyResult r{"unbiased weighted estimator", true, 0.0, 1e-10, {}};
    Rng rng(seed);
    constexpr Eigen::Index dims = 3;
    for (std::size_t n = 1; n <= max_presample; ++n) {
        const auto g = normalize(random_scores(n, rng));
        const Matrix payload = random_matrix(n, dims, rng);
        const Vector mean = payload.colwise().mean().transpose();
        double norm_scale = 0.0;
        for (Eigen::Index i = 0; i < payload.rows(); ++i) norm_scale += payload.row(i).norm();
        norm_scale /= static_cast<double>(n);

        // b = 1: every single draw; b = 2: every ordered pair.
        Vector single = Vector::Zero(dims);
        Vector paired = Vector::Zero(dims);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t one[] = {i};
            const double wi = hooks.weights(g, one).front();
            single += g[i] * wi * payload.row(static_cast<Eigen::Index>(i)).transpose();
            for (std::size_t j = 0; j < n; ++j) {
                const std::size_t two[] = {i, j};
                const auto w = hooks.weights(g, two);
                paired += g[i] * g[j] * 0.5 *
                          (w[0] * payload.row(static_cast<Eigen::Index>(i)) +
                           w[1] * payload.row(static_cast<Eigen::Index>(j)))
                              .transpose();
            }
        }
        r.measured = std::max(r.measured, (single - mean).norm() / norm_scale);
        r.measured = std::max(r.measured, (paired - mean).norm() / norm_scale);
    }
    r.passed = r.measured <= r.tolerance;
    r.detail = format("max relative deviation from the uniform mean ", r.measured);
    return r;
}

PropertyResult check_gradient_bound(std::size_t networks, std::size_t batch, std::uint64_t seed) {
    PropertyResult r{"gradient-norm upper bound", true, 0.0, 0.0, {}};
    Rng rng(seed);
    std::size_t violations = 0;
    double tightest = 0.0;
    constexpr LossKind kinds[] = {LossKind::softmax_cross_entropy, LossKind::sigmoid_binary_nll,
                                  LossKind::squared_error};
    for (std::size_t k = 0; k < networks; ++k) {
        for (LossKind kind : kinds) {
            const std::size_t depth = 2 + rng.below(3);
            std::vector<std::size_t> widths(depth + 1);
            for (auto& w : widths) w = 2 + rng.below(31);
            const Network net = random_network(widths, rng);
            const Matrix inputs = random_matrix(batch, widths.front(), rng);
            const Targets targets = random_targets(kind, batch, widths.back(), rng);

            const ForwardTrace trace = forward(net, inputs);
            const Matrix out = output_gradients(kind, trace.final_pre_activation(), targets);
            const Vector exact = per_sample_gradient_norms(net, trace, out);
            const ScoreVector upper = upper_bound_scores(trace, kind, targets);
            const double rho = empirical_rho(net, trace).rho;
            const double factor = static_cast<double>(net.depth()) * rho;
            for (Eigen::Index i = 0; i < exact.size(); ++i) {
                const double bound = factor * upper.scores(i);
                if (exact(i) > bound * (1.0 + 1e-12)) ++violations;
                if (bound > 0.0) tightest = std::max(tightest, exact(i) / bound);
            }
        }
    }
    r.measured = static_cast<double>(violations);
    r.passed = violations == 0;
    r.detail = format("violations ", r.measured) + format(", largest norm/bound ratio ", tightest);
    return r;
}

PropertyResult check_finite_differences(std::size_t networks, std::uint64_t seed) {
    PropertyResult r{"finite-difference gradients", true, 0.0, 1e-4, {}};
    Rng rng(seed);
    constexpr double step = 1e-5;
    constexpr double floor = 1e-6;
    constexpr LossKind kinds[] = {LossKind::softmax_cross_entropy, LossKind::sigmoid_binary_nll,
                                  LossKind::squared_error};
    std::size_t failures = 0;
    std::size_t checked = 0;
    for (std::size_t k = 0; k < networks; ++k) {
        const LossKind kind = kinds[k % 3];
        const std::size_t depth = 1 + rng.below(3);
        std::vector<std::size_t> widths(depth + 1);
        for (auto& w : widths) w = 2 + rng.below(6);
        Network net = random_network(widths, rng, k % 4 != 3);
        const Matrix inputs = random_matrix(4, widths.front(), rng);
        const Targets targets = random_targets(kind, 4, widths.back(), rng);

        const ForwardTrace trace = forward(net, inputs);
        const auto analytic =
            backward(net, trace, output_gradients(kind, trace.final_pre_activation(), targets)).flatten(net);
        std::vector<double> theta = net.flatten();
        const auto total_loss = [&](const std::vector<double>& p) {
            net.assign(p);
            return loss_values(kind, forward(net, inputs).final_pre_activation(), targets).sum();
        };
        for (std::size_t p = 0; p < theta.size(); ++p) {
            const double saved = theta[p];
            theta[p] = saved + step;
            const double up = total_loss(theta);
            theta[p] = saved - step;
            const double down = total_loss(theta);
            theta[p] = saved;
            const double numeric = (up - down) / (2.0 * step);
            const double diff = std::abs(numeric - analytic[p]);
            ++checked;
            const double magnitude = std::max(std::abs(numeric), std::abs(analytic[p]));
            const double rel = magnitude > 0.0 ? diff / magnitude : 0.0;
            r.measured = std::max(r.measured, rel);
            if (diff > floor && rel >= r.tolerance) ++failures;
        }
        net.assign(theta);
    }
    r.passed = failures == 0;
    r.detail = format("parameters checked ", static_cast<double>(checked)) +
               format(", failures ", static_cast<double>(failures)) + format(", max relative error ", r.measured);
    return r;
}

PropertyResult check_tau_values(const ValidationHooks& hooks) {
    PropertyResult r{"tau closed-form values", true, 0.0, 0.0, {}};
    struct Case {
        std::vector<double> g;
        double expected;
    };
    const std::vector<Case> cases = {
        {{0.25, 0.25, 0.25, 0.25}, 1.0},
        {{0.125, 0.125, 0.125, 0.125, 0.125, 0.125, 0.125, 0.125}, 1.0},
        {{1.0, 0.0, 0.0, 0.0}, 4.0},
        {{0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0}, 8.0},
        {{0.75, 0.25}, 1.25},
    };
    std::ostringstream detail;
    for (const auto& c : cases) {
        const double got = hooks.tau(c.g);
        r.measured = std::max(r.measured, std::abs(got - c.expected));
        if (got != c.expected) {
            r.passed = false;
            detail << "expected " << c.expected << " got " << got << "; ";
        }
    }
    r.detail = r.passed ? "all exact" : detail.str();
    return r;
}

PropertyResult check_tau_semantics(std::size_t vectors, std::size_t draws, std::uint64_t seed,
                                   const ValidationHooks& hooks) {
    PropertyResult r{"tau as a variance ratio", true, 0.0, 1e-10, {}};
    Rng rng(seed);
    constexpr Eigen::Index dims = 4;
    double worst_equality = 0.0;
    double worst_sigma = -1e300;
    std::size_t mc_failures = 0;

    for (std::size_t k = 0; k < vectors; ++k) {
        // Payloads G_i = g_i v_i with unit directions v_i: g is then the
        // variance-optimal distribution for them. The second half mirrors the
        // first, giving a zero mean.
        const std::size_t half = 2 + rng.below(15);
        const std::size_t n = 2 * half;
        auto scores = random_scores(half, rng);
        scores.insert(scores.end(), scores.begin(), scores.end());
        const auto g = normalize(scores);
        Matrix dirs = random_matrix(half, dims, rng);
        dirs.rowwise().normalize();
        Matrix payload(n, dims);
        payload.topRows(half) = dirs;
        payload.bottomRows(half) = -dirs;
        for (std::size_t i = 0; i < n; ++i) payload.row(static_cast<Eigen::Index>(i)) *= g[i];

        const double inv_tau = 1.0 / hooks.tau(g);
        const auto u = 1.0 / static_cast<double>(n);
        std::vector<std::size_t> all(n);
        for (std::size_t i = 0; i < n; ++i) all[i] = i;
        const auto w = hooks.weights(g, all);

        // Exact single-draw variances about the common mean.
        const auto variances = [&](const Matrix& p) {
            const Vector mean = p.colwise().mean().transpose();
            double vu = 0.0;
            double vg = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const Vector x = p.row(static_cast<Eigen::Index>(i)).transpose();
                vu += u * (x - mean).squaredNorm();
                vg += g[i] * (w[i] * x - mean).squaredNorm();
            }
            return std::pair{vu, vg};
        };

        const auto [vu0, vg0] = variances(payload);
        worst_equality = std::max(worst_equality, std::abs(vg0 / vu0 - inv_tau) / inv_tau);

        // A second payload with the same norms but directions leaning on a
        // common axis, so the mean is non-zero; V_g is estimated by simulation.
        Matrix leaning = random_matrix(n, dims, rng);
        leaning.col(0).array() += 1.5;
        leaning.rowwise().normalize();
        Matrix shifted(n, dims);
        for (std::size_t i = 0; i < n; ++i)
            shifted.row(static_cast<Eigen::Index>(i)) = g[i] * leaning.row(static_cast<Eigen::Index>(i));
        const double vu = variances(shifted).first;
        const Vector mean = shifted.colwise().mean().transpose();
        double sum = 0.0;
        double sum_sq = 0.0;
        const auto picks = draw(g, draws, rng);
        for (auto i : picks) {
            const Vector x = w[i] * shifted.row(static_cast<Eigen::Index>(i)).transpose();
            const double d = (x - mean).squaredNorm();
            sum += d;
            sum_sq += d * d;
        }
        const double m = sum / static_cast<double>(draws);
        const double var = std::max(sum_sq / static_cast<double>(draws) - m * m, 0.0);
        const double se = std::sqrt(var / static_cast<double>(draws));
        const double bound = inv_tau * vu;
        const double excess = se > 0.0 ? (m - bound) / se : (m > bound ? 1e300 : -1e300);
        worst_sigma = std::max(worst_sigma, excess);
        if (m > bound + 3.0 * se) ++mc_failures;
    }
    r.measured = worst_equality;
    r.passed = worst_equality <= r.tolerance && mc_failures == 0;
    r.detail = format("zero-mean ratio error ", worst_equality) + format(", Monte-Carlo failures ",
                                                                        static_cast<double>(mc_failures)) +
               format(", worst excess in standard errors ", worst_sigma);
    return r;
}

std::vector<PropertyResult> run_validation_suite(std::uint64_t seed, const ValidationHooks& hooks) {
    return {
        check_finite_differences(10, seed),
        check_variance_identity(1000, seed + 1),
        check_gradient_bound(20, 16, seed + 2),
        check_unbiasedness(12, seed + 3, hooks),
        check_tau_values(hooks),
        check_tau_semantics(20, 100000, seed + 4, hooks),
    };
}

}  // namespace isgd
