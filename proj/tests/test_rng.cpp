#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include "pucci/rng.hpp"

using pucci::Rng;

TEST_CASE("same seed reproduces the same stream") {
    Rng a(42), b(42);
    for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
    Rng c(42), d(42);
    for (int i = 0; i < 1000; ++i) CHECK(c.normal() == d.normal());
}

TEST_CASE("nearby seeds do not share a stream") {
    Rng a(1), b(2);
    int same = 0;
    for (int i = 0; i < 64; ++i) same += (a.next_u64() == b.next_u64());
    CHECK(same == 0);
}

TEST_CASE("uniform stays in [0,1) and fills the interval") {
    Rng r(7);
    double lo = 1.0, hi = 0.0;
    for (int i = 0; i < 20000; ++i) {
        double u = r.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        lo = std::min(lo, u);
        hi = std::max(hi, u);
    }
    CHECK(lo < 1e-3);
    CHECK(hi > 1.0 - 1e-3);
}

TEST_CASE("normal moments match a standard gaussian") {
    Rng r(12345);
    const int n = 200000;
    double s1 = 0.0, s2 = 0.0, s4 = 0.0;
    for (int i = 0; i < n; ++i) {
        double z = r.normal();
        s1 += z;
        s2 += z * z;
        s4 += z * z * z * z;
    }
    double mean = s1 / n;
    double var = s2 / n - mean * mean;
    double kurt = s4 / n;
    // 3 sigma bands: se(mean)=1/sqrt(n), se(var)~sqrt(2/n), se(E z^4)~sqrt(96/n).
    CHECK(std::fabs(mean) < 3.0 / std::sqrt(double(n)));
    CHECK(std::fabs(var - 1.0) < 3.0 * std::sqrt(2.0 / n));
    CHECK(std::fabs(kurt - 3.0) < 3.0 * std::sqrt(96.0 / n));
}

TEST_CASE("normals are produced in pairs over the uniform stream") {
    // Box-Muller has no rejection loop, so two normals cost exactly two
    // uniform draws. Downstream replay logic depends on that being stable.
    Rng a(99), b(99);
    a.normal();
    a.normal();
    b.next_u64();
    b.next_u64();
    CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("derive separates streams and is deterministic") {
    CHECK(Rng::derive(123, 0) == Rng::derive(123, 0));
    std::set<uint64_t> seen;
    for (uint64_t master = 0; master < 8; ++master)
        for (uint64_t stream = 0; stream < 256; ++stream) seen.insert(Rng::derive(master, stream));
    CHECK(seen.size() == 8u * 256u);

    // streams derived from one master look unrelated: correlate first draws
    Rng x(Rng::derive(5, 0)), y(Rng::derive(5, 1));
    double acc = 0.0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) acc += (x.uniform() - 0.5) * (y.uniform() - 0.5);
    CHECK(std::fabs(acc / n) < 3.0 / (12.0 * std::sqrt(double(n))));
}
