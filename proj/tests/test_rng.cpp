#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "fedif/rng.hpp"

using fedif::rng::StreamRng;

TEST_CASE("streams are deterministic in their key") {
    StreamRng a(42, "alpha", 3, 7);
    StreamRng b(42, "alpha", 3, 7);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("distinct names, ids and seeds give distinct streams") {
    StreamRng base(42, "alpha", 3, 7);
    StreamRng name(42, "beta", 3, 7);
    StreamRng id_a(42, "alpha", 4, 7);
    StreamRng id_b(42, "alpha", 3, 8);
    StreamRng seed(43, "alpha", 3, 7);
    const auto v = base.next_u64();
    CHECK(v != name.next_u64());
    CHECK(v != id_a.next_u64());
    CHECK(v != id_b.next_u64());
    CHECK(v != seed.next_u64());
}

TEST_CASE("uniform stays in [0,1) with sane mean") {
    StreamRng rng(1, "uniform");
    double sum = 0.0;
    for (int i = 0; i < 20000; ++i) {
        const double u = rng.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
    }
    CHECK(sum / 20000.0 == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("uniform_int is within range and roughly balanced") {
    StreamRng rng(1, "uniform_int");
    std::vector<int> counts(7, 0);
    for (int i = 0; i < 14000; ++i) counts[rng.uniform_int(7)]++;
    for (int c : counts) CHECK(c > 1600);
}

TEST_CASE("normal moments") {
    StreamRng rng(1, "normal");
    double sum = 0.0, sq = 0.0;
    const int n = 50000;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal();
        sum += x;
        sq += x * x;
    }
    CHECK(sum / n == doctest::Approx(0.0).epsilon(0.02));
    CHECK(sq / n == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("gamma mean matches alpha") {
    StreamRng rng(1, "gamma");
    for (double alpha : {0.5, 1.0, 3.5}) {
        double sum = 0.0;
        const int n = 30000;
        for (int i = 0; i < n; ++i) sum += rng.gamma(alpha);
        CHECK(sum / n == doctest::Approx(alpha).epsilon(0.05));
    }
}

TEST_CASE("dirichlet sums to 1 and is nonnegative") {
    StreamRng rng(1, "dirichlet");
    for (double alpha : {0.1, 1.0, 100.0}) {
        const auto d = rng.dirichlet_symmetric(alpha, 10);
        double total = 0.0;
        for (double v : d) {
            CHECK(v >= 0.0);
            total += v;
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("sample_without_replacement yields k distinct sorted values") {
    StreamRng rng(1, "sample");
    const auto s = rng.sample_without_replacement(100, 10);
    REQUIRE(s.size() == 10);
    CHECK(std::is_sorted(s.begin(), s.end()));
    CHECK(std::set<std::size_t>(s.begin(), s.end()).size() == 10);
    for (auto v : s) CHECK(v < 100);

    CHECK(rng.sample_without_replacement(5, 0).empty());
    const auto all = rng.sample_without_replacement(5, 5);
    CHECK(all == std::vector<std::size_t>{0, 1, 2, 3, 4});
}

TEST_CASE("shuffle is a permutation") {
    StreamRng rng(1, "shuffle");
    std::vector<int> v(50);
    for (int i = 0; i < 50; ++i) v[i] = i;
    auto w = v;
    rng.shuffle(w);
    auto sorted = w;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == v);
    CHECK(w != v);  // 50! permutations; identity is effectively impossible
}
