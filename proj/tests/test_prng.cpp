#include <doctest.h>

#include "cmux/prng.hpp"

using namespace cmux;

TEST_CASE("counter prng is a pure function of (seed, stream, counter)") {
    CHECK(rng::uniform(7, 3, 11) == rng::uniform(7, 3, 11));
    CHECK(rng::gaussian(7, 3, 11) == rng::gaussian(7, 3, 11));
    CHECK(rng::rademacher(1, 2, 3) == rng::rademacher(1, 2, 3));
    CHECK(rng::uniform(7, 3, 11) != rng::uniform(8, 3, 11));
}

TEST_CASE("uniform draws stay in [0,1) with sane mean") {
    double sum = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const double u = rng::uniform(42, 0, i);
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        sum += u;
    }
    CHECK(std::abs(sum / n - 0.5) < 0.01);
}

TEST_CASE("gaussian draws have roughly unit variance") {
    double sum = 0.0, sq = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const double g = rng::gaussian(9, 1, i);
        sum += g;
        sq += g * g;
    }
    CHECK(std::abs(sum / n) < 0.03);
    CHECK(std::abs(sq / n - 1.0) < 0.05);
}
