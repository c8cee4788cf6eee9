#pragma once

#include "isgd/losses.hpp"
#include "isgd/nn.hpp"
#include "isgd/rng.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace isgd {

/// Outcome of one oracle property. `measured` is the worst value observed
/// (an error, a ratio or a violation count depending on the property) and
/// passing means it stayed within `tolerance`.
struct PropertyResult {
    std::string name;
    bool passed = false;
    double measured = 0.0;
    double tolerance = 0.0;
    std::string detail;
};

/// The pieces of the sampler the suite exercises. Replacing one lets a test
/// confirm that the suite notices a broken implementation.
struct ValidationHooks {
    std::function<double(std::span<const double>)> tau;
    std::function<std::vector<double>(std::span<const double>, std::span<const std::size_t>)> weights;

    ValidationHooks();
};

/// Random dense network with the given widths (input first). Hidden layers
/// pick an activation at random; biases are random as well.
Network random_network(std::span<const std::size_t> widths, Rng& rng, bool bias = true);

/// Random targets suited to `kind` for a batch of `rows` and `outputs` wide.
Targets random_targets(LossKind kind, std::size_t rows, std::size_t outputs, Rng& rng);

/// Closed-form variance reduction against the term-by-term sum for random
/// norm vectors with g proportional to the norms.
PropertyResult check_variance_identity(std::size_t instances, std::uint64_t seed);

/// Exhaustive expectation of the single-draw weighted estimator for every
/// presample size up to `max_presample`.
PropertyResult check_unbiasedness(std::size_t max_presample, std::uint64_t seed,
                                  const ValidationHooks& hooks = {});

/// depth * rho * upper-bound score >= true per-sample gradient norm, for
/// random networks under every loss.
PropertyResult check_gradient_bound(std::size_t networks, std::size_t batch, std::uint64_t seed);

/// backward() against central differences over every parameter.
PropertyResult check_finite_differences(std::size_t networks, std::uint64_t seed);

/// tau on distributions whose value is known in closed form.
PropertyResult check_tau_values(const ValidationHooks& hooks = {});

/// The variance of the importance-weighted estimator relative to uniform is
/// at most 1/tau when g is proportional to the payload norms: exactly equal
/// for zero-mean payloads, and bounded in a Monte-Carlo experiment within
/// three standard errors.
PropertyResult check_tau_semantics(std::size_t vectors, std::size_t draws, std::uint64_t seed,
                                   const ValidationHooks& hooks = {});

/// The full suite at its default sizes.
std::vector<PropertyResult> run_validation_suite(std::uint64_t seed = 1, const ValidationHooks& hooks = {});

}  // namespace isgd
