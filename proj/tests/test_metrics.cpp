#include <doctest.h>

#include <cmath>
#include <vector>

#include "stigmergy/metrics.hpp"

using namespace stigmergy;

TEST_CASE("similarity") {
    const std::vector<std::uint8_t> a{1, 0, 1, 1, 0, 0, 1, 0};
    SUBCASE("identical grids") { CHECK(similarity(a, a) == 1.0); }
    SUBCASE("complement") {
        std::vector<std::uint8_t> b;
        for (auto bit : a) b.push_back(bit ? 0 : 1);
        CHECK(similarity(a, b) == 0.0);
    }
    SUBCASE("half matching") {
        std::vector<std::uint8_t> b = a;
        for (std::size_t i = 0; i < 4; ++i) b[i] = b[i] ? 0 : 1;
        CHECK(similarity(a, b) == 0.5);
    }
    SUBCASE("symmetry") {
        const std::vector<std::uint8_t> b{0, 0, 1, 0, 1, 0, 1, 1};
        CHECK(similarity(a, b) == similarity(b, a));
    }
    SUBCASE("dimension mismatch") {
        const std::vector<std::uint8_t> b{1, 0};
        CHECK_THROWS_AS(similarity(a, b), std::invalid_argument);
    }
}

TEST_CASE("spearman_rank") {
    SUBCASE("identity gives 1") {
        const std::vector<double> x{3.0, 1.0, 4.0, 1.5, 9.0};
        CHECK(spearman_rank(x, x) == doctest::Approx(1.0));
    }
    SUBCASE("reversal gives -1") {
        const std::vector<double> x{1.0, 2.0, 3.0, 4.0};
        const std::vector<double> y{4.0, 3.0, 2.0, 1.0};
        CHECK(spearman_rank(x, y) == doctest::Approx(-1.0));
    }
    SUBCASE("worked example: one swapped pair of four") {
        const std::vector<double> x{1.0, 2.0, 3.0, 4.0};
        const std::vector<double> y{1.0, 3.0, 2.0, 4.0};
        CHECK(spearman_rank(x, y) == doctest::Approx(0.8).epsilon(1e-12));
    }
    SUBCASE("invariant under strictly monotone transforms") {
        const std::vector<double> x{0.2, 1.7, 0.9, 2.4, 3.3, 0.1};
        const std::vector<double> y{5.0, 2.0, 8.0, 1.0, 9.0, 4.0};
        std::vector<double> ex, cube;
        for (double v : x) ex.push_back(std::exp(v));
        for (double v : y) cube.push_back(v * v * v);
        CHECK(spearman_rank(x, y) == doctest::Approx(spearman_rank(ex, cube)).epsilon(1e-12));
    }
    SUBCASE("average ranks for ties") {
        const std::vector<double> x{1.0, 2.0, 3.0, 4.0};
        const std::vector<double> y{1.0, 2.0, 2.0, 3.0};
        // tied middle pair shares rank 2.5; direct computation gives 40/sqrt(... ) ~ 0.9487
        CHECK(spearman_rank(x, y) == doctest::Approx(0.9486832980505138).epsilon(1e-9));
    }
    SUBCASE("constant input is undefined") {
        const std::vector<double> x{1.0, 1.0, 1.0, 1.0};
        const std::vector<double> y{1.0, 2.0, 3.0, 4.0};
        CHECK_THROWS_AS(spearman_rank(x, y), std::domain_error);
    }
    SUBCASE("inputs must be long enough and equal-sized") {
        const std::vector<double> two{1.0, 2.0};
        CHECK_THROWS_AS(spearman_rank(two, two), std::invalid_argument);
        const std::vector<double> three{1.0, 2.0, 3.0};
        CHECK_THROWS_AS(spearman_rank(three, two), std::invalid_argument);
    }
}

TEST_CASE("batch_utility") {
    CHECK(batch_utility(50.0, 50.0) == 1.0);
    CHECK(batch_utility(0.0, 50.0) == 0.0);
    CHECK(batch_utility(35.0, 50.0) == doctest::Approx(0.7));
    CHECK_THROWS_AS(batch_utility(10.0, 0.0), std::domain_error);
}

TEST_CASE("SweepSummary aggregates") {
    SweepSummary sweep;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        SweepSummary::Record record;
        record.seed = seed;
        record.values["score"] = static_cast<double>(seed) * 0.2; // 0.0 .. 0.8
        sweep.add(std::move(record));
    }
    CHECK(sweep.size() == 5);
    CHECK(sweep.mean("score") == doctest::Approx(0.4));
    CHECK(sweep.median("score") == doctest::Approx(0.4));
    CHECK(sweep.fraction_at_least("score", 0.4) == doctest::Approx(0.6));
    CHECK_THROWS_AS(sweep.mean("missing"), std::invalid_argument);
}
