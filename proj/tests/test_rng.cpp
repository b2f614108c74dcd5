#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <set>
#include <vector>

#include "tornadocast/rng.hpp"

using namespace tornadocast;

TEST_CASE("same seed produces the same stream") {
    Rng a(42), b(42);
    for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("different seeds diverge") {
    Rng a(1), b(2);
    int same = 0;
    for (int i = 0; i < 100; ++i) same += a.next_u64() == b.next_u64() ? 1 : 0;
    CHECK(same == 0);
}

TEST_CASE("next_double stays in [0,1) and fills the range") {
    Rng rng(7);
    double lo = 1.0, hi = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const double v = rng.next_double();
        CHECK(v >= 0.0);
        CHECK(v < 1.0);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    CHECK(lo < 0.001);
    CHECK(hi > 0.999);
}

TEST_CASE("uniform respects bounds") {
    Rng rng(11);
    for (int i = 0; i < 10000; ++i) {
        const double v = rng.uniform(-3.0, 5.0);
        CHECK(v >= -3.0);
        CHECK(v < 5.0);
    }
}

TEST_CASE("next_below is unbiased enough and in range") {
    Rng rng(3);
    std::map<std::uint64_t, int> counts;
    const int draws = 60000;
    for (int i = 0; i < draws; ++i) {
        const std::uint64_t v = rng.next_below(6);
        CHECK(v < 6);
        counts[v]++;
    }
    for (const auto& [value, count] : counts) {
        (void)value;
        // each bucket expects 10000; 5 sigma is about +/- 456
        CHECK(count > 9500);
        CHECK(count < 10500);
    }
    CHECK(counts.size() == 6);
}

TEST_CASE("next_below(1) always yields 0") {
    Rng rng(5);
    for (int i = 0; i < 100; ++i) CHECK(rng.next_below(1) == 0);
}

TEST_CASE("next_normal moments match a standard normal") {
    Rng rng(13);
    const int n = 200000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double v = rng.next_normal();
        sum += v;
        sumsq += v * v;
    }
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    CHECK(std::abs(mean) < 0.01);
    CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("shuffle permutes without losing elements") {
    Rng rng(21);
    std::vector<int> v(257);
    std::iota(v.begin(), v.end(), 0);
    const std::vector<int> original = v;
    rng.shuffle(v);
    CHECK(v != original);  // 257! permutations; identity is effectively impossible
    std::vector<int> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == original);
}

TEST_CASE("shuffle is reproducible per seed") {
    std::vector<int> a(64), b(64);
    std::iota(a.begin(), a.end(), 0);
    std::iota(b.begin(), b.end(), 0);
    Rng r1(99), r2(99);
    r1.shuffle(a);
    r2.shuffle(b);
    CHECK(a == b);
}

TEST_CASE("derive_seed separates streams") {
    const std::uint64_t base = 42;
    std::set<std::uint64_t> seen;
    for (std::uint64_t salt = 0; salt < 1000; ++salt) seen.insert(derive_seed(base, salt));
    CHECK(seen.size() == 1000);
    CHECK(derive_seed(base, 1) == derive_seed(base, 1));
    CHECK(derive_seed(base, 1) != derive_seed(base + 1, 1));
}

TEST_CASE("derived generators are decorrelated") {
    Rng a(derive_seed(42, 0)), b(derive_seed(42, 1));
    int same = 0;
    for (int i = 0; i < 100; ++i) same += a.next_u64() == b.next_u64() ? 1 : 0;
    CHECK(same == 0);
}
