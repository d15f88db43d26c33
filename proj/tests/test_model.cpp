#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "grpkmax/model.hpp"
#include "support/oracles.hpp"

using namespace grpkmax;

namespace {

GroupedDesign identity_design(const Vector& y) {
    const Index n = y.size();
    return GroupedDesign({Matrix::Identity(n, n)}, y);
}

}  // namespace

TEST_CASE("GroupStructure validates sizes and exposes offsets", "[model]") {
    GroupStructure gs({2, 3, 1});
    CHECK(gs.num_groups() == 3);
    CHECK(gs.total_dim() == 6);
    CHECK(gs.offset(0) == 0);
    CHECK(gs.offset(1) == 2);
    CHECK(gs.offset(2) == 5);
    CHECK_THROWS_AS(GroupStructure(std::vector<Index>{}), DimensionError);
    CHECK_THROWS_AS(GroupStructure({2, 0}), DimensionError);
}

TEST_CASE("GroupedVector flat/block views round-trip", "[model][property]") {
    std::mt19937_64 rng(42);
    for (int it = 0; it < 2000; ++it) {
        const GroupStructure gs = oracles::random_structure(rng);
        const Vector flat = oracles::random_gaussian_vector(rng, gs.total_dim());
        const GroupedVector gv(gs, flat);
        const GroupedVector back = GroupedVector::from_blocks(gv.blocks());
        REQUIRE(back.structure() == gs);
        REQUIRE(back.flat() == flat);
    }
}

TEST_CASE("GroupedVector rejects mismatched flat size", "[model]") {
    CHECK_THROWS_AS(GroupedVector(GroupStructure({2, 2}), Vector::Zero(3)),
                    DimensionError);
}

TEST_CASE("GroupedDesign validates shapes", "[model]") {
    CHECK_THROWS_AS(GroupedDesign({}, Vector::Zero(2)), DimensionError);
    CHECK_THROWS_AS(
        GroupedDesign({Matrix::Zero(2, 1), Matrix::Zero(3, 1)}, Vector::Zero(2)),
        DimensionError);
    CHECK_THROWS_AS(GroupedDesign({Matrix::Zero(2, 1)}, Vector::Zero(3)),
                    DimensionError);
}

TEST_CASE("predict on frozen cases", "[model]") {
    SECTION("zero coefficients give the zero prediction") {
        std::mt19937_64 rng(1);
        const GroupStructure gs({2, 3});
        const GroupedDesign design = oracles::random_design(rng, 4, gs);
        CHECK(predict(design, GroupedVector::zeros(gs)) == Vector::Zero(4));
    }
    SECTION("identity design reproduces the coefficients") {
        const Vector y = Vector::LinSpaced(3, 1.0, 3.0);
        const GroupedDesign design = identity_design(y);
        const GroupedVector x(design.structure(), y);
        CHECK(predict(design, x) == y);
    }
    SECTION("two identity groups sum their blocks") {
        const Matrix eye = Matrix::Identity(2, 2);
        const GroupedDesign design({eye, eye}, Vector::Zero(2));
        Vector flat(4);
        flat << 1, 0, 0, 2;
        const Vector out = predict(design, GroupedVector(design.structure(), flat));
        CHECK(out[0] == 1.0);
        CHECK(out[1] == 2.0);
    }
    SECTION("structure mismatch is rejected") {
        const GroupedDesign design({Matrix::Identity(2, 2)}, Vector::Zero(2));
        CHECK_THROWS_AS(predict(design, GroupedVector::zeros(GroupStructure({1, 1}))),
                        DimensionError);
    }
}

TEST_CASE("residual on frozen cases", "[model]") {
    Vector y(2);
    y << 3, 1;
    const GroupedDesign design = identity_design(y);
    SECTION("exact solve leaves a zero residual") {
        CHECK(residual(design, GroupedVector(design.structure(), y)) ==
              Vector::Zero(2));
    }
    SECTION("zero coefficients leave the response") {
        CHECK(residual(design, GroupedVector::zeros(design.structure())) == y);
    }
    SECTION("hand-computed subtraction") {
        Vector x(2);
        x << 1, 1;
        const Vector r = residual(design, GroupedVector(design.structure(), x));
        CHECK(r[0] == 2.0);
        CHECK(r[1] == 0.0);
    }
}

TEST_CASE("predict is linear", "[model][property]") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> adist(-2.0, 2.0);
    for (int it = 0; it < 1000; ++it) {
        const GroupStructure gs = oracles::random_structure(rng);
        const GroupedDesign design = oracles::random_design(rng, 6, gs);
        const Vector xf = oracles::random_gaussian_vector(rng, gs.total_dim());
        const Vector zf = oracles::random_gaussian_vector(rng, gs.total_dim());
        const double alpha = adist(rng);

        const Vector sum_pred = predict(design, GroupedVector(gs, xf + zf));
        const Vector pred_sum = predict(design, GroupedVector(gs, xf)) +
                                predict(design, GroupedVector(gs, zf));
        const Vector scaled = predict(design, GroupedVector(gs, (alpha * xf).eval()));
        const Vector scale_pred = alpha * predict(design, GroupedVector(gs, xf));

        const double ref = 1.0 + sum_pred.norm();
        REQUIRE((sum_pred - pred_sum).norm() <= 1e-12 * ref);
        REQUIRE((scaled - scale_pred).norm() <= 1e-12 * (1.0 + scaled.norm()));
    }
}

TEST_CASE("objective on frozen cases", "[model]") {
    Vector y(3);
    y << 2, -1, 0.5;
    const GroupedDesign design = identity_design(y);
    const GroupStructure& gs = design.structure();

    SECTION("zero point pays only the fit term") {
        for (auto spec : {PenaltySpec::lasso(0.7), PenaltySpec::group_lasso(0.7),
                          PenaltySpec::sparse_group_lasso(0.7, 0.3),
                          PenaltySpec::group_kmax(0.7, {1})}) {
            CHECK(objective(design, GroupedVector::zeros(gs), spec) ==
                  0.5 * y.squaredNorm());
        }
    }
    SECTION("unpenalized full-k reduces to least squares") {
        const auto spec =
            PenaltySpec::group_kmax(0.9, {3}, FullKMode::unpenalized);
        const GroupedVector x(gs, y);
        CHECK(objective(design, x, spec) == 0.0);
        const GroupedVector x2(gs, (0.5 * y).eval());
        CHECK(objective(design, x2, spec) == 0.5 * (y - 0.5 * y).squaredNorm());
    }
    SECTION("k = 0 matches the lasso objective") {
        std::mt19937_64 rng(3);
        const Vector xf = oracles::random_gaussian_vector(rng, 3);
        const GroupedVector x(gs, xf);
        const auto kmax0 = PenaltySpec::group_kmax(0.42, {0});
        const auto l1 = PenaltySpec::lasso(0.42);
        CHECK(objective(design, x, kmax0) ==
              Catch::Approx(objective(design, x, l1)).margin(1e-14));
    }
}

TEST_CASE("objective is nonnegative and exact at lambda = 0",
          "[model][property]") {
    std::mt19937_64 rng(17);
    for (int it = 0; it < 1000; ++it) {
        const GroupStructure gs = oracles::random_structure(rng);
        const GroupedDesign design = oracles::random_design(rng, 5, gs);
        const GroupedVector x(gs, oracles::random_gaussian_vector(rng, gs.total_dim()));
        const auto spec = PenaltySpec::lasso(0.0);
        const double obj = objective(design, x, spec);
        REQUIRE(obj >= 0.0);
        REQUIRE(obj == 0.5 * residual(design, x).squaredNorm());

        const auto spec2 = PenaltySpec::group_kmax(1.3, {}, FullKMode::literal);
        auto spec3 = spec2;
        spec3.k.assign(static_cast<std::size_t>(gs.num_groups()), Index{0});
        REQUIRE(objective(design, x, spec3) >= 0.0);
    }
}

TEST_CASE("loss scale flag divides the fit term by n", "[model]") {
    Vector y(4);
    y << 1, 2, 3, 4;
    const GroupedDesign design = identity_design(y);
    const GroupedVector x = GroupedVector::zeros(design.structure());
    const auto spec = PenaltySpec::lasso(0.0);
    CHECK(objective(design, x, spec, LossScale::half_over_n) ==
          objective(design, x, spec, LossScale::half) / 4.0);
}

TEST_CASE("PenaltySpec validation", "[model]") {
    const GroupStructure gs({2, 3});
    CHECK_THROWS_AS(PenaltySpec::lasso(-1.0).validate(gs), std::invalid_argument);
    CHECK_THROWS_AS(PenaltySpec::group_kmax(1.0, {1}).validate(gs), DimensionError);
    CHECK_THROWS_AS(PenaltySpec::group_kmax(1.0, {1, 4}).validate(gs),
                    std::invalid_argument);
    CHECK_THROWS_AS(PenaltySpec::group_lasso(1.0, {1.0, -1.0}).validate(gs),
                    std::invalid_argument);
    CHECK_THROWS_AS(PenaltySpec::group_lasso(1.0, {1.0}).validate(gs),
                    DimensionError);
    // mu is reserved for sparse group lasso
    PenaltySpec p = PenaltySpec::lasso(1.0);
    p.mu = 0.5;
    CHECK_THROWS_AS(p.validate(gs), std::invalid_argument);
    // k is reserved for group-kmax
    PenaltySpec q = PenaltySpec::group_lasso(1.0);
    q.k = {1, 1};
    CHECK_THROWS_AS(q.validate(gs), std::invalid_argument);
    CHECK_NOTHROW(PenaltySpec::sparse_group_lasso(1.0, 0.5).validate(gs));
    CHECK_NOTHROW(PenaltySpec::group_kmax(1.0, {0, 3}).validate(gs));

    const auto w = PenaltySpec::group_lasso(1.0).effective_weights(gs);
    CHECK(w[0] == Catch::Approx(std::sqrt(2.0)));
    CHECK(w[1] == Catch::Approx(std::sqrt(3.0)));
}
