#pragma once

#include <cstddef>
#include <span>
#include <string_view>

namespace isgd {

/// standard: tau = (1 - ||g - u||^2 / sum g^2)^-1.
/// sqrt: the square root of the standard value.
enum class TauMode { standard, sqrt };

std::string_view to_string(TauMode mode);
TauMode parse_tau_mode(std::string_view name);

/// Equivalent batch-size increment of sampling from `g` instead of uniformly.
/// Lies in [1, B] for a distribution of length B; 1/tau is clamped at 1e-6.
double instantaneous_tau(std::span<const double> g, TauMode mode = TauMode::standard);

/// Exponential moving average of tau plus the switching threshold.
struct TauEstimator {
    double tau = 0.0;
    double a_tau = 0.9;
    double tau_th = 1.5;
    TauMode mode = TauMode::standard;
};

TauEstimator ema_update(TauEstimator est, std::span<const double> g);
/// Strictly greater: tau == tau_th stays uniform.
bool should_switch(const TauEstimator& est);

/// Tr V_u[G] - Tr V_g[w G] = E_u||G||^2 - E_g[w^2 ||G||^2], evaluated term by
/// term for any distribution g.
double variance_reduction_direct(std::span<const double> norms, std::span<const double> g);

/// (mean ||G||)^2 * B * ||g - u||^2; only meaningful when g is proportional
/// to `norms`.
double variance_reduction_closed_form(std::span<const double> norms, std::span<const double> g);

/// Closed form when g is proportional to norms (to 1e-12 relative), the
/// direct sum otherwise.
double variance_reduction(std::span<const double> norms, std::span<const double> g);

/// 1/b - 1/B.
double max_variance_reduction(std::size_t presample, std::size_t batch);

/// (B + 3b) / 3b: the tau above which a presample-and-resample step is
/// cheaper than the equivalent larger uniform batch, counting a backward pass
/// as two forward passes.
double guaranteed_speedup_threshold(std::size_t presample, std::size_t batch);
bool speedup_holds(double tau, std::size_t presample, std::size_t batch);

}  // namespace isgd
