#include <set>
#include <vector>

#include "doctest.h"
#include "flowpix/parallel.hpp"
#include "flowpix/rng.hpp"

using namespace flowpix;

TEST_CASE("rng is reproducible for a seed") {
    Rng a(7), b(7), c(8);
    bool differs = false;
    for (int i = 0; i < 100; ++i) {
        const auto x = a.next();
        CHECK(x == b.next());
        differs |= x != c.next();
    }
    CHECK(differs);
}

TEST_CASE("derived streams are distinct") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t s = 0; s < 50; ++s) {
        seen.insert(derive_seed(s, streams::forest));
        seen.insert(derive_seed(s, streams::pixel_init));
        for (std::uint64_t t = 0; t < 20; ++t) seen.insert(derive_seed(s, streams::forest, t));
    }
    CHECK(seen.size() == 50 * 22);
}

TEST_CASE("uniform_index stays in range and covers it") {
    Rng rng(3);
    std::vector<int> hits(7, 0);
    for (int i = 0; i < 70000; ++i) {
        const auto k = rng.uniform_index(7);
        REQUIRE(k < 7);
        ++hits[k];
    }
    // Each bucket expects 10000; 5 sigma is about 460.
    for (const int h : hits) CHECK(std::abs(h - 10000) < 500);
}

TEST_CASE("uniform01 and normal moments") {
    Rng rng(5);
    double sum = 0, sq = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform01();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        const double z = rng.normal();
        sum += z;
        sq += z * z;
    }
    CHECK(std::abs(sum / n) < 0.01);
    CHECK(std::abs(sq / n - 1.0) < 0.02);
}

TEST_CASE("shuffle is a permutation") {
    Rng rng(9);
    std::vector<int> v(100);
    for (int i = 0; i < 100; ++i) v[i] = i;
    rng.shuffle(v);
    std::set<int> s(v.begin(), v.end());
    CHECK(s.size() == 100);
}

TEST_CASE("parallel_for fills every slot and rethrows") {
    for (std::size_t workers : {1u, 3u, 8u}) {
        std::vector<int> out(1000, 0);
        parallel_for(out.size(), workers, [&](std::size_t i) { out[i] = static_cast<int>(i * i % 97); });
        for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == static_cast<int>(i * i % 97));
    }
    CHECK_THROWS_AS(parallel_for(10, 4, [](std::size_t i) { if (i == 5) throw std::runtime_error("boom"); }),
                    std::runtime_error);
}
