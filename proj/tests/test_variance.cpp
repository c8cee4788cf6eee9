#include "isgd/error.hpp"
#include "isgd/rng.hpp"
#include "isgd/sampling.hpp"
#include "isgd/validation.hpp"
#include "isgd/variance.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace isgd;

TEST_CASE("tau on known distributions") {
    const auto r = check_tau_values();
    INFO(r.detail);
    CHECK(r.passed);
    for (std::size_t n : {2, 3, 5, 7, 64, 1000}) {
        std::vector<double> hot(n, 0.0);
        hot[n / 2] = 1.0;
        CHECK(instantaneous_tau(hot) == doctest::Approx(static_cast<double>(n)).epsilon(1e-10));
        const std::vector<double> u(n, 1.0 / n);
        CHECK(instantaneous_tau(u) == doctest::Approx(1.0).epsilon(1e-14));
    }
    const std::vector<double> g{0.75, 0.25};
    CHECK(instantaneous_tau(g, TauMode::sqrt) == std::sqrt(1.25));
    const std::vector<double> one{1.0};
    CHECK_THROWS_AS(instantaneous_tau(one), ArgumentError);
}

TEST_CASE("tau depends only on the normalized distribution") {
    const std::vector<double> s{1.0, 4.0, 2.5, 0.3};
    std::vector<double> scaled(s);
    for (auto& v : scaled) v *= 1234.5;
    CHECK(instantaneous_tau(normalize(s)) == doctest::Approx(instantaneous_tau(normalize(scaled))).epsilon(1e-14));
}

TEST_CASE("tau lies between 1 and B") {
    Rng rng(10);
    for (int t = 0; t < 100; ++t) {
        const std::size_t n = 2 + rng.below(100);
        std::vector<double> s(n);
        for (auto& v : s) v = std::exp(3.0 * rng.normal());
        const double tau = instantaneous_tau(normalize(s));
        CHECK(tau >= 1.0 - 1e-12);
        CHECK(tau <= static_cast<double>(n) + 1e-9);
    }
}

TEST_CASE("EMA update") {
    const std::vector<double> hot{1.0, 0.0};  // instantaneous tau 2
    TauEstimator est;
    est.tau = 1.0;
    est.a_tau = 0.9;
    CHECK(ema_update(est, hot).tau == doctest::Approx(1.1).epsilon(1e-15));
    est.a_tau = 0.0;
    CHECK(ema_update(est, hot).tau == 2.0);
    est.a_tau = 1.0;
    CHECK(ema_update(est, hot).tau == 1.0);
}

TEST_CASE("switching is strict") {
    TauEstimator est;
    est.tau = 1.0;
    est.tau_th = 1.5;
    CHECK_FALSE(should_switch(est));
    est.tau = 2.0;
    CHECK(should_switch(est));
    est.tau_th = guaranteed_speedup_threshold(48, 16);
    CHECK(est.tau_th == 2.0);
    CHECK_FALSE(should_switch(est));
}

TEST_CASE("variance reduction") {
    const std::vector<double> norms{1.0, 3.0};
    const std::vector<double> g{0.25, 0.75};
    CHECK(variance_reduction_direct(norms, g) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(variance_reduction_closed_form(norms, g) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(variance_reduction(norms, g) == doctest::Approx(1.0).epsilon(1e-15));
    const std::vector<double> u{0.5, 0.5};
    CHECK(variance_reduction(norms, u) == 0.0);
    const std::vector<double> short_g{1.0};
    CHECK_THROWS_AS(variance_reduction(norms, short_g), ArgumentError);

    const auto r = check_variance_identity(1000, 21);
    INFO(r.detail);
    CHECK(r.passed);
}

TEST_CASE("weighted second moment equals the squared mean norm") {
    Rng rng(13);
    for (int t = 0; t < 50; ++t) {
        const std::size_t n = 2 + rng.below(40);
        std::vector<double> norms(n);
        for (auto& v : norms) v = std::exp(rng.normal());
        const auto g = normalize(norms);
        double second = 0.0, mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double w = 1.0 / (n * g[i]);
            second += g[i] * w * w * norms[i] * norms[i];
            mean += norms[i] / n;
        }
        CHECK(second == doctest::Approx(mean * mean).epsilon(1e-12));
    }
}

TEST_CASE("simulated variance matches the variance reduction") {
    Rng rng(31);
    for (int t = 0; t < 5; ++t) {
        // Scalar payloads; g proportional to |G|.
        const std::size_t n = 4 + rng.below(10);
        std::vector<double> payload(n), norms(n);
        for (std::size_t i = 0; i < n; ++i) {
            payload[i] = rng.normal() * std::exp(rng.normal());
            norms[i] = std::abs(payload[i]);
        }
        const auto g = normalize(norms);
        double mean = 0.0, second_u = 0.0;
        for (double p : payload) {
            mean += p / n;
            second_u += p * p / n;
        }
        const double expected = second_u - mean * mean - variance_reduction(norms, g);
        const std::size_t draws = 100000;
        double sum = 0.0, sum_sq = 0.0;
        for (auto i : draw(g, draws, rng)) {
            const double d = (payload[i] / (n * g[i]) - mean) * (payload[i] / (n * g[i]) - mean);
            sum += d;
            sum_sq += d * d;
        }
        const double m = sum / draws;
        const double se = std::sqrt(std::max(sum_sq / draws - m * m, 0.0) / draws);
        CHECK(std::abs(m - expected) <= 3.0 * se + 1e-12);
    }
}

TEST_CASE("tau bounds the variance ratio") {
    const auto r = check_tau_semantics(20, 100000, 8);
    INFO(r.detail);
    CHECK(r.passed);
}

TEST_CASE("a sign flip in the tau formula is caught") {
    ValidationHooks broken;
    broken.tau = [](std::span<const double> g) {
        const double u = 1.0 / static_cast<double>(g.size());
        double sum_sq = 0.0, dist = 0.0;
        for (double p : g) {
            sum_sq += p * p;
            dist += (p - u) * (p - u);
        }
        return 1.0 / (1.0 + dist / sum_sq);
    };
    CHECK_FALSE(check_tau_semantics(20, 20000, 8, broken).passed);
}

TEST_CASE("batch-size formulas") {
    CHECK(max_variance_reduction(1024, 128) == doctest::Approx(7.0 / 1024.0).epsilon(1e-15));
    CHECK(max_variance_reduction(64, 64) == 0.0);
    CHECK(max_variance_reduction(64, 32) == doctest::Approx(1.0 / 64.0).epsilon(1e-15));
    CHECK_THROWS_AS(max_variance_reduction(16, 32), ArgumentError);

    CHECK(guaranteed_speedup_threshold(48, 16) == 2.0);
    CHECK(guaranteed_speedup_threshold(128, 32) == doctest::Approx(224.0 / 96.0).epsilon(1e-15));
    CHECK_FALSE(speedup_holds(1.5, 640, 128));
    CHECK(speedup_holds(2.5, 128, 32));
    CHECK(parse_tau_mode("sqrt") == TauMode::sqrt);
    CHECK_THROWS_AS(parse_tau_mode("cube"), ArgumentError);
}
