#include "isgd/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace isgd;

TEST_CASE("same seed, same stream") {
    Rng a(5), b(5), c(6);
    for (int i = 0; i < 100; ++i) {
        const auto x = a();
        CHECK(x == b());
        if (i == 0) CHECK(x != c());
    }
}

TEST_CASE("uniform doubles stay in [0, 1) with the right moments") {
    Rng rng(1);
    double sum = 0.0, sum_sq = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
        sum_sq += u * u;
    }
    CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
    CHECK(sum_sq / n - (sum / n) * (sum / n) == doctest::Approx(1.0 / 12.0).epsilon(0.01));
}

TEST_CASE("bounded integers and normals") {
    Rng rng(2);
    int hits[3] = {0, 0, 0};
    for (int i = 0; i < 30000; ++i) ++hits[rng.below(3)];
    for (int h : hits) CHECK(std::abs(h - 10000) < 500);

    double sum = 0.0, sum_sq = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        sum += z;
        sum_sq += z * z;
    }
    CHECK(std::abs(sum / n) < 0.01);
    CHECK(sum_sq / n == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("mix_seed spreads nearby seeds") {
    CHECK(mix_seed(1) != mix_seed(2));
    CHECK(mix_seed(0) != 0);
}

TEST_CASE("known-answer stream") {
    // splitmix64 from 0 starts with 0xe220a8397b1dcdaf; the xoshiro256**
    // words below come from an independent re-implementation.
    CHECK(mix_seed(0) == 0xe220a8397b1dcdafULL);
    Rng rng(12345);
    CHECK(rng() == 0xbe6a36374160d49bULL);
    CHECK(rng() == 0x214aaa0637a688c6ULL);
    CHECK(rng() == 0xf69d16de9954d388ULL);
    CHECK(rng() == 0x0c60048c4e96e033ULL);
}
