// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"
#include "mlmkit/common.hpp"

using mlmkit::Rng;

TEST_CASE("rng: same seed, same stream") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) {
        CHECK(a.next() == b.next());
        CHECK(a.uniform() == b.uniform());
        CHECK(a.normal() == b.normal());
    }
}

TEST_CASE("rng: different seeds diverge") {
    Rng a(1), b(2);
    int same = 0;
    for (int i = 0; i < 64; ++i) same += (a.next() == b.next());
    CHECK(same == 0);
}

TEST_CASE("rng: uniform stays in [0,1) and fills the range") {
    Rng rng(7);
    double lo = 1.0, hi = 0.0;
    for (int i = 0; i < 10000; ++i) {
        double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        lo = std::min(lo, u);
        hi = std::max(hi, u);
    }
    CHECK(lo < 0.01);
    CHECK(hi > 0.99);
}

TEST_CASE("rng: below(n) covers exactly [0,n)") {
    Rng rng(3);
    std::set<int64_t> seen;
    for (int i = 0; i < 2000; ++i) {
        int64_t v = rng.below(7);
        CHECK(v >= 0);
        CHECK(v < 7);
        seen.insert(v);
    }
    CHECK(seen.size() == 7);
    CHECK_THROWS_AS(rng.below(0), mlmkit::ContractError);
}

TEST_CASE("rng: normal moments are roughly standard") {
    Rng rng(11);
    double sum = 0.0, sumsq = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        double x = rng.normal();
        sum += x;
        sumsq += x * x;
    }
    double mean = sum / n;
    double var = sumsq / n - mean * mean;
    CHECK(std::abs(mean) < 0.05);
    CHECK(std::abs(var - 1.0) < 0.08);
}

TEST_CASE("rng: truncated normal respects the cutoff") {
    Rng rng(13);
    for (int i = 0; i < 5000; ++i) {
        float x = rng.truncated_normal(1.0f, 0.5f, 2.0);
        CHECK(x >= 1.0f - 2.0f * 0.5f - 1e-6f);
        CHECK(x <= 1.0f + 2.0f * 0.5f + 1e-6f);
    }
}

TEST_CASE("rng: fork streams are independent of the parent's position") {
    Rng a(99);
    Rng fork_before = a.fork(5);
    a.next();
    a.next();
    Rng fork_after = a.fork(5);
    for (int i = 0; i < 16; ++i) CHECK(fork_before.next() == fork_after.next());

    Rng other = a.fork(6);
    int same = 0;
    Rng again = a.fork(5);
    for (int i = 0; i < 16; ++i) same += (again.next() == other.next());
    CHECK(same == 0);
}

TEST_CASE("rng: shuffle is a permutation and is seed-deterministic") {
    std::vector<int> v(50);
    for (int i = 0; i < 50; ++i) v[i] = i;
    std::vector<int> w = v;
    Rng(123).shuffle(v);
    Rng(123).shuffle(w);
    CHECK(v == w);
    std::vector<int> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < 50; ++i) CHECK(sorted[i] == i);
    std::vector<int> u(50);
    for (int i = 0; i < 50; ++i) u[i] = i;
    Rng(124).shuffle(u);
    CHECK(u != v);
}
