#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "grpkmax/prox.hpp"
#include "support/oracles.hpp"

using namespace grpkmax;

namespace {
Vector vec(std::initializer_list<double> vals) {
    Vector v(static_cast<Index>(vals.size()));
    Index j = 0;
    for (double x : vals) v[j++] = x;
    return v;
}
}  // namespace

TEST_CASE("kth_max_abs on frozen cases", "[prox]") {
    CHECK(kth_max_abs(vec({3, -1, 0.5, 1}), 2) == 1.0);
    CHECK(kth_max_abs(vec({3, -1, 0.5, 1}), 1) == 3.0);
    CHECK(kth_max_abs(vec({0, 0, 0}), 2) == 0.0);
    const Vector x = vec({-2.5, 0.25, 7, -7});
    CHECK(kth_max_abs(x, 1) == x.cwiseAbs().maxCoeff());
}

TEST_CASE("kth_max_abs rejects bad arguments", "[prox]") {
    CHECK_THROWS_AS(kth_max_abs(Vector(), 1), std::invalid_argument);
    CHECK_THROWS_AS(kth_max_abs(vec({1, 2}), 0), std::invalid_argument);
    CHECK_THROWS_AS(kth_max_abs(vec({1, 2}), 3), std::invalid_argument);
}

TEST_CASE("partition_indices on frozen cases", "[prox]") {
    SECTION("interior k with a tie") {
        const auto p = partition_indices(vec({3, -1, 0.5, 1}), 2);
        CHECK(p.threshold == 1.0);
        CHECK(p.plus == std::vector<Index>{0});
        CHECK(p.eq == std::vector<Index>{1, 3});
        CHECK(p.minus == std::vector<Index>{2});
        CHECK(p.leq == std::vector<Index>{1, 2, 3});
    }
    SECTION("k = d with distinct magnitudes") {
        const auto p = partition_indices(vec({3, -1, 0.5, 2}), 4);
        CHECK(p.minus.empty());
        CHECK(p.eq == std::vector<Index>{2});
    }
    SECTION("k = 0 penalizes everything") {
        const auto p = partition_indices(vec({3, -1, 0.5}), 0);
        CHECK(p.leq == std::vector<Index>{0, 1, 2});
        CHECK(p.plus.empty());
        CHECK(p.eq.empty());
        CHECK(p.threshold == std::numeric_limits<double>::infinity());
    }
    SECTION("k out of range") {
        CHECK_THROWS_AS(partition_indices(vec({1}), -1), std::invalid_argument);
        CHECK_THROWS_AS(partition_indices(vec({1}), 2), std::invalid_argument);
    }
}

namespace {
double l1_indexwise(const Vector& x) {
    double sum = 0.0;
    for (Index j = 0; j < x.size(); ++j) sum += std::abs(x[j]);
    return sum;
}
}  // namespace

TEST_CASE("kmax_penalty on frozen cases", "[prox]") {
    CHECK(kmax_penalty(vec({3, -1, 0.5, 1}), 1) == Catch::Approx(2.5).margin(0));
    const Vector x = vec({0.3, -2, 1.5, 0});
    CHECK(kmax_penalty(x, 0) == l1_indexwise(x));
    CHECK(kmax_penalty(Vector::Zero(5), 3) == 0.0);
}

TEST_CASE("kmax_shrink on frozen cases", "[prox]") {
    SECTION("top entry untouched, rest soft thresholded") {
        const Vector out = kmax_shrink(vec({3, -1, 0.5}), 1, 0.5);
        CHECK(out[0] == 3.0);
        CHECK(out[1] == -0.5);
        CHECK(out[2] == 0.0);
    }
    SECTION("k = 0 equals elementwise soft threshold, exactly") {
        std::mt19937_64 rng(7);
        for (int it = 0; it < 200; ++it) {
            const Vector x = oracles::random_vector_with_ties(rng, 9);
            const Vector a = kmax_shrink(x, 0, 0.75);
            const Vector b = soft_threshold(x, 0.75);
            CHECK(a == b);
        }
    }
    SECTION("tau = 0 is the identity") {
        const Vector x = vec({2, -4, 0.1});
        CHECK(kmax_shrink(x, 2, 0.0) == x);
    }
    SECTION("boundary magnitude maps to zero") {
        const Vector out = kmax_shrink(vec({5, 0.5, -0.5}), 1, 0.5);
        CHECK(out[1] == 0.0);
        CHECK(out[2] == 0.0);
    }
    SECTION("negative tau rejected") {
        CHECK_THROWS_AS(kmax_shrink(vec({1}), 1, -0.1), std::invalid_argument);
    }
}

TEST_CASE("soft_threshold on frozen cases", "[prox]") {
    const Vector out = soft_threshold(vec({1, -0.2}), 0.5);
    CHECK(out[0] == 0.5);
    CHECK(out[1] == 0.0);
    const Vector x = vec({0.4, -7});
    CHECK(soft_threshold(x, 0.0) == x);
    CHECK(soft_threshold(Vector::Zero(3), 2.0) == Vector::Zero(3));
    CHECK_THROWS_AS(soft_threshold(x, -1.0), std::invalid_argument);
}

TEST_CASE("block_shrink on frozen cases", "[prox]") {
    SECTION("norm below tau collapses the block") {
        CHECK(block_shrink(vec({0.3, 0.4}), 2.0) == Vector::Zero(2));
        CHECK(block_shrink(vec({3, 4}), 5.0) == Vector::Zero(2));
    }
    SECTION("hand-computed shrink factor") {
        const Vector out = block_shrink(vec({3, 4}), 2.5);
        CHECK(out[0] == Catch::Approx(1.5).epsilon(1e-14));
        CHECK(out[1] == Catch::Approx(2.0).epsilon(1e-14));
    }
    SECTION("tau = 0 identity, zero vector fixed") {
        const Vector x = vec({1, -2});
        CHECK(block_shrink(x, 0.0) == x);
        CHECK(block_shrink(Vector::Zero(4), 1.0) == Vector::Zero(4));
    }
    CHECK_THROWS_AS(block_shrink(vec({1}), -0.5), std::invalid_argument);
}

TEST_CASE("sparse_group_shrink on frozen cases", "[prox]") {
    std::mt19937_64 rng(11);
    SECTION("reductions") {
        for (int it = 0; it < 100; ++it) {
            const Vector x = oracles::random_vector_with_ties(rng, 6);
            CHECK(sparse_group_shrink(x, 0.0, 0.4) == soft_threshold(x, 0.4));
            CHECK(sparse_group_shrink(x, 0.4, 0.0) == block_shrink(x, 0.4));
        }
    }
    SECTION("two-step closed form") {
        const Vector out = sparse_group_shrink(vec({3, 4}), 1.0, 1.0);
        CHECK(out[0] == Catch::Approx(1.4453).margin(1e-4));
        CHECK(out[1] == Catch::Approx(2.1679).margin(1e-4));
    }
    CHECK_THROWS_AS(sparse_group_shrink(vec({1}), -1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(sparse_group_shrink(vec({1}), 0.0, -1.0), std::invalid_argument);
}

TEST_CASE("k-max operators agree with full-sort references", "[prox][oracle]") {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<Index> ddist(1, 64);
    std::uniform_real_distribution<double> taudist(0.0, 2.0);
    for (int it = 0; it < 10000; ++it) {
        const Index d = ddist(rng);
        const Vector x = oracles::random_vector_with_ties(rng, d);
        std::uniform_int_distribution<Index> kdist(0, d);
        const Index k = kdist(rng);
        const double tau = taudist(rng);

        if (k >= 1) {
            REQUIRE(kth_max_abs(x, k) == oracles::kth_max_abs_sorted(x, k));
        }
        REQUIRE(oracles::partitions_equal(partition_indices(x, k),
                                          oracles::partition_sorted(x, k)));
        REQUIRE(kmax_penalty(x, k) == oracles::kmax_penalty_sorted(x, k));
        REQUIRE(kmax_shrink(x, k, tau) == oracles::kmax_shrink_sorted(x, k, tau));
    }
}

TEST_CASE("partition invariants hold on random vectors", "[prox][property]") {
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<Index> ddist(1, 32);
    for (int it = 0; it < 2000; ++it) {
        const Index d = ddist(rng);
        const Vector x = oracles::random_vector_with_ties(rng, d);
        std::uniform_int_distribution<Index> kdist(1, d);
        const Index k = kdist(rng);
        const auto p = partition_indices(x, k);

        REQUIRE(static_cast<Index>(p.eq.size() + p.plus.size() + p.minus.size()) == d);
        std::vector<Index> merged;
        std::merge(p.eq.begin(), p.eq.end(), p.minus.begin(), p.minus.end(),
                   std::back_inserter(merged));
        REQUIRE(merged == p.leq);
        if (k < d) {
            // the protected set never exceeds k entries and the threshold
            // rank always has something at it
            REQUIRE(static_cast<Index>(p.plus.size()) <= k);
            REQUIRE(static_cast<Index>(p.plus.size() + p.eq.size()) >= k + 1);
            REQUIRE(p.threshold == kth_max_abs(x, k + 1));
        } else {
            REQUIRE(p.minus.empty());
            REQUIRE(p.threshold == kth_max_abs(x, d));
        }
        for (Index j : p.plus) REQUIRE(std::abs(x[j]) > p.threshold);
        for (Index j : p.minus) REQUIRE(std::abs(x[j]) < p.threshold);
        for (Index j : p.eq) REQUIRE(std::abs(x[j]) == p.threshold);
    }
}

TEST_CASE("partition index sets are scale invariant", "[prox][property]") {
    std::mt19937_64 rng(123);
    std::uniform_int_distribution<Index> ddist(1, 24);
    std::uniform_real_distribution<double> adist(0.1, 10.0);
    for (int it = 0; it < 1000; ++it) {
        const Index d = ddist(rng);
        const Vector x = oracles::random_vector_with_ties(rng, d);
        std::uniform_int_distribution<Index> kdist(0, d);
        const Index k = kdist(rng);
        const double alpha = adist(rng);
        const auto p = partition_indices(x, k);
        const auto ps = partition_indices((alpha * x).eval(), k);
        REQUIRE(p.eq == ps.eq);
        REQUIRE(p.plus == ps.plus);
        REQUIRE(p.minus == ps.minus);
        REQUIRE(p.leq == ps.leq);
    }
}

TEST_CASE("shrink and penalty equivariances", "[prox][property]") {
    std::mt19937_64 rng(31337);
    std::uniform_int_distribution<Index> ddist(1, 24);
    std::uniform_real_distribution<double> taudist(0.0, 2.0);
    for (int it = 0; it < 1500; ++it) {
        const Index d = ddist(rng);
        const Vector x = oracles::random_vector_with_ties(rng, d);
        std::uniform_int_distribution<Index> kdist(0, d);
        const Index k = kdist(rng);
        const double tau = taudist(rng);

        // permutation equivariance
        std::vector<Index> perm(static_cast<std::size_t>(d));
        std::iota(perm.begin(), perm.end(), Index{0});
        std::shuffle(perm.begin(), perm.end(), rng);
        Vector px(d);
        for (Index j = 0; j < d; ++j) px[j] = x[perm[static_cast<std::size_t>(j)]];
        const Vector sx = kmax_shrink(x, k, tau);
        const Vector spx = kmax_shrink(px, k, tau);
        for (Index j = 0; j < d; ++j) {
            REQUIRE(spx[j] == sx[perm[static_cast<std::size_t>(j)]]);
        }
        REQUIRE(kmax_penalty(px, k) == Catch::Approx(kmax_penalty(x, k)).margin(1e-12));

        // sign equivariance
        const Vector sneg = kmax_shrink((-x).eval(), k, tau);
        REQUIRE(sneg == (-sx).eval());

        // shrink never flips signs or grows magnitudes
        for (Index j = 0; j < d; ++j) {
            REQUIRE(std::abs(sx[j]) <= std::abs(x[j]));
            REQUIRE(sx[j] * x[j] >= 0.0);
        }
    }
}

TEST_CASE("kmax_penalty is monotone in k and bounded by the l1 norm",
          "[prox][property]") {
    std::mt19937_64 rng(555);
    std::uniform_int_distribution<Index> ddist(1, 24);
    for (int it = 0; it < 1000; ++it) {
        const Index d = ddist(rng);
        const Vector x = oracles::random_vector_with_ties(rng, d);
        const double l1 = l1_indexwise(x);
        double prev = std::numeric_limits<double>::infinity();
        for (Index k = 0; k <= d; ++k) {
            const double pen = kmax_penalty(x, k);
            REQUIRE(pen >= 0.0);
            REQUIRE(pen <= l1 + 1e-12);
            REQUIRE(pen <= prev + 1e-12);
            prev = pen;
        }
        REQUIRE(kmax_penalty(x, 0) == l1);
        const auto pd = partition_indices(x, d);
        REQUIRE(kmax_penalty(x, d) <=
                x.cwiseAbs().minCoeff() * static_cast<double>(pd.eq.size()) + 1e-12);
    }
}

TEST_CASE("unpenalized full-k mode disables the penalty", "[prox]") {
    std::mt19937_64 rng(77);
    for (int it = 0; it < 200; ++it) {
        const Vector x = oracles::random_vector_with_ties(rng, 8);
        CHECK(kmax_penalty(x, 8, FullKMode::unpenalized) == 0.0);
        CHECK(kmax_shrink(x, 8, 1.5, FullKMode::unpenalized) == x);
        // literal mode still penalizes the minimum-magnitude ties
        const auto p = partition_indices(x, 8, FullKMode::literal);
        CHECK_FALSE(p.leq.empty());
    }
}
