#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "taxodng/rng.hpp"

using namespace taxodng;

TEST_CASE("identical seeds give identical streams") {
    Rng a(42), b(42);
    for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("different seeds diverge") {
    Rng a(1), b(2);
    int same = 0;
    for (int i = 0; i < 100; ++i)
        if (a.next_u64() == b.next_u64()) ++same;
    CHECK(same == 0);
}

TEST_CASE("derive_seed separates named streams deterministically") {
    CHECK(derive_seed(7, "split") == derive_seed(7, "split"));
    CHECK(derive_seed(7, "split") != derive_seed(7, "init"));
    CHECK(derive_seed(7, "split") != derive_seed(8, "split"));
    CHECK(derive_seed(7, "sem") != derive_seed(7, "query"));
}

TEST_CASE("uniform stays in range with matching moments") {
    Rng rng(9);
    double sum = 0.0, sq = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double v = rng.uniform();
        CHECK(v >= 0.0);
        CHECK(v < 1.0);
        sum += v;
        sq += v * v;
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    CHECK(std::abs(mean - 0.5) < 0.005);
    CHECK(std::abs(var - 1.0 / 12.0) < 0.005);

    for (int i = 0; i < 1000; ++i) {
        const double v = rng.uniform(-3.0, 5.0);
        CHECK(v >= -3.0);
        CHECK(v < 5.0);
    }
}

TEST_CASE("normal has standard moments") {
    Rng rng(31);
    double sum = 0.0, sq = 0.0, cube = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double v = rng.normal();
        sum += v;
        sq += v * v;
        cube += v * v * v;
    }
    CHECK(std::abs(sum / n) < 0.01);
    CHECK(std::abs(sq / n - 1.0) < 0.02);
    CHECK(std::abs(cube / n) < 0.05);
}

TEST_CASE("below avoids out-of-range draws") {
    Rng rng(12);
    for (int i = 0; i < 10000; ++i) CHECK(rng.below(7) < 7);
    bool seen[7] = {};
    Rng rng2(13);
    for (int i = 0; i < 1000; ++i) seen[rng2.below(7)] = true;
    for (bool s : seen) CHECK(s);
}
