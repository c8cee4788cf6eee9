#include "isgd/variance.hpp"

#include "isgd/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace isgd {

std::string_view to_string(TauMode mode) { return mode == TauMode::sqrt ? "sqrt" : "standard"; }

TauMode parse_tau_mode(std::string_view name) {
    if (name == "standard") return TauMode::standard;
    if (name == "sqrt") return TauMode::sqrt;
    throw ArgumentError("unknown tau mode '" + std::string(name) + "'");
}

double instantaneous_tau(std::span<const double> g, TauMode mode) {
    if (g.size() < 2) throw ArgumentError("tau needs a distribution over at least two samples");
    const double u = 1.0 / static_cast<double>(g.size());
    double sum_sq = 0.0;
    double dist_sq = 0.0;
    for (double p : g) {
        if (!std::isfinite(p) || p < 0.0) throw ArgumentError("invalid probability in tau computation");
        sum_sq += p * p;
        dist_sq += (p - u) * (p - u);
    }
    if (sum_sq <= 0.0) throw ArgumentError("degenerate distribution in tau computation");
    const double inv_tau = std::max(1.0 - dist_sq / sum_sq, 1e-6);
    const double tau = 1.0 / inv_tau;
    return mode == TauMode::sqrt ? std::sqrt(tau) : tau;
}

TauEstimator ema_update(TauEstimator est, std::span<const double> g) {
    est.tau = est.a_tau * est.tau + (1.0 - est.a_tau) * instantaneous_tau(g, est.mode);
    return est;
}

bool should_switch(const TauEstimator& est) { return est.tau > est.tau_th; }

namespace {

void check_pair(std::span<const double> norms, std::span<const double> g) {
    if (norms.size() != g.size()) throw ArgumentError("norms and probabilities differ in length");
    if (norms.empty()) throw ArgumentError("empty norm vector");
}

}  // namespace

double variance_reduction_direct(std::span<const double> norms, std::span<const double> g) {
    check_pair(norms, g);
    const auto n = static_cast<double>(norms.size());
    double uniform_second = 0.0;
    double weighted_second = 0.0;
    for (std::size_t i = 0; i < norms.size(); ++i) {
        const double sq = norms[i] * norms[i];
        uniform_second += sq / n;
        if (g[i] > 0.0) {
            const double w = 1.0 / (n * g[i]);
            weighted_second += g[i] * w * w * sq;
        } else if (sq > 0.0) {
            throw ArgumentError("zero probability on a sample with non-zero gradient");
        }
    }
    return uniform_second - weighted_second;
}

double variance_reduction_closed_form(std::span<const double> norms, std::span<const double> g) {
    check_pair(norms, g);
    const auto n = static_cast<double>(norms.size());
    double mean = 0.0;
    for (double v : norms) mean += v;
    mean /= n;
    const double u = 1.0 / n;
    double dist_sq = 0.0;
    for (double p : g) dist_sq += (p - u) * (p - u);
    return mean * mean * n * dist_sq;
}

double variance_reduction(std::span<const double> norms, std::span<const double> g) {
    check_pair(norms, g);
    double total = 0.0;
    for (double v : norms) total += v;
    bool proportional = total > 0.0;
    for (std::size_t i = 0; proportional && i < norms.size(); ++i)
        proportional = std::abs(norms[i] / total - g[i]) <= 1e-12 * std::max(g[i], 1.0 / norms.size());
    return proportional ? variance_reduction_closed_form(norms, g) : variance_reduction_direct(norms, g);
}

double max_variance_reduction(std::size_t presample, std::size_t batch) {
    if (batch == 0 || presample == 0) throw ArgumentError("batch sizes must be positive");
    if (batch > presample) throw ArgumentError("batch size exceeds presample size");
    return 1.0 / static_cast<double>(batch) - 1.0 / static_cast<double>(presample);
}

double guaranteed_speedup_threshold(std::size_t presample, std::size_t batch) {
    if (batch == 0 || presample == 0) throw ArgumentError("batch sizes must be positive");
    return static_cast<double>(presample + 3 * batch) / static_cast<double>(3 * batch);
}

bool speedup_holds(double tau, std::size_t presample, std::size_t batch) {
    if (batch == 0 || presample == 0) throw ArgumentError("batch sizes must be positive");
    return static_cast<double>(presample + 3 * batch) < 3.0 * tau * static_cast<double>(batch);
}

}  // namespace isgd
