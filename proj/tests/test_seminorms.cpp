#include "degcz/exact_examples.hpp"
#include "degcz/seminorms.hpp"
#include "degcz/weight_registry.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace degcz;

namespace {

const QuadratureSpec kQuad = QuadratureSpec::polar(128, 32);

BallFamily dyadic(int levels, double radius = 1.0, double spacing = BallFamilySpec{}.spacing) {
    BallFamilySpec s;
    s.domain = Ball::origin(2, radius);
    s.levels = levels;
    s.spacing = spacing;
    return make_family(s);
}

}  // namespace

TEST(Bmo, ConstantsVanish) {
    ScalarField seven{2, [](const Vector&) { return 7.0; }, "seven", {}};
    EXPECT_EQ(bmo_scalar(seven, dyadic(3), kQuad).value, 0.0);
    Matrix c = (Matrix(2, 2) << 2.0, 0.3, 0.3, 1.0).finished();
    SymmetricField h{2, [c](const Vector&) { return c; }, "c", {}};
    EXPECT_LT(bmo_matrix(h, dyadic(3), kQuad).value, 1e-15);
}

TEST(Bmo, LogRadiusAgainstDenseFamily) {
    ScalarField f = log_field(power_weight(2, 1.0));
    double coarse = bmo_scalar(f, dyadic(4), kQuad).value;  // default spacing
    double dense = bmo_scalar(f, dyadic(4, 1.0, 0.15), kQuad).value;
    EXPECT_GT(coarse, 0.0);
    EXPECT_GT(dyadic(4, 1.0, 0.15).count(), 10 * dyadic(4).count());
    EXPECT_LT(std::abs(dense - coarse) / dense, 0.1);
}

TEST(Bmo, FamilyMonotonicity) {
    BallFamily small = dyadic(3), large = dyadic(4);
    ASSERT_GT(large.count(), small.count());
    auto m = example_weight(MeyersExample(Variant::Degenerate, 2, 0.25));
    EXPECT_GE(bmo_matrix(log_field(m), large, kQuad).value, bmo_matrix(log_field(m), small, kQuad).value - 1e-15);
    auto w = power_weight(2, 0.6);
    EXPECT_GE(muckenhoupt_ap(w, 2.0, large, kQuad).value, muckenhoupt_ap(w, 2.0, small, kQuad).value - 1e-12);
}

TEST(Bmo, ScaleInvariance) {
    auto m = log_normal_weight(2, 0.3, 3, 2);
    BallFamily fam = dyadic(3);
    double base = bmo_matrix(log_field(m), fam, kQuad).value;
    for (double t : {1e-3, 1.0, 1e3}) {
        EXPECT_NEAR(bmo_matrix(log_field(scaled_field(m, t)), fam, kQuad).value, base, 1e-12);
        auto w = scalar_weight(m);
        EXPECT_NEAR(bmo_scalar(log_field(scaled(w, t)), fam, kQuad).value, bmo_scalar(log_field(w), fam, kQuad).value,
                    1e-12);
    }
}

TEST(Bmo, ScalarBoundedByTwiceMatrix) {
    BallFamily fam = dyadic(3);
    std::vector<WeightField> fields = {
        example_weight(MeyersExample(Variant::Plain, 2, 0.25)),
        example_weight(MeyersExample(Variant::Degenerate, 2, 0.5)),
        log_normal_weight(2, 0.5, 4, 9),
        power_radial_weight(2, -0.2, 0.7),
    };
    for (const auto& m : fields) {
        double s = bmo_scalar(log_field(scalar_weight(m)), fam, kQuad).value;
        double mm = bmo_matrix(log_field(m), fam, kQuad).value;
        EXPECT_LE(s, 2.0 * mm + 1e-12) << m.label;
    }
}

TEST(Bmo, ThreadsDoNotChangeResult) {
    auto m = example_weight(MeyersExample(Variant::Degenerate, 2, 0.25));
    BallFamily fam = dyadic(3);
    BmoEstimate a = bmo_matrix(log_field(m), fam, kQuad, 1);
    BmoEstimate b = bmo_matrix(log_field(m), fam, kQuad, 3);
    EXPECT_EQ(a.value, b.value);
    EXPECT_EQ(a.per_ball, b.per_ball);
}

TEST(Ap, UnitWeight) {
    for (double p : {1.5, 2.0, 4.0}) EXPECT_DOUBLE_EQ(muckenhoupt_ap(constant_scalar_weight(2, 1.0), p, dyadic(3), kQuad).value, 1.0);
}

TEST(Ap, PowerWeights) {
    BallFamily fam = dyadic(4);
    ApEstimate good = muckenhoupt_ap(power_weight(2, 0.3), 2.0, fam, kQuad);
    EXPECT_FALSE(good.divergent);
    ASSERT_TRUE(good.attaining_ball.has_value());
    EXPECT_TRUE(good.attaining_ball->contains(Vector(Vector::Zero(2))));
    ApEstimate bad = muckenhoupt_ap(power_weight(2, 1.2), 2.0, fam, kQuad);
    EXPECT_TRUE(bad.divergent);
}

TEST(Ap, JensenDirection) {
    auto w = power_weight(2, 0.2, Vector(Eigen::Vector2d(0.1, 0.1)));
    for (const Ball& b : dyadic(3).balls) {
        double lm = log_mean_scalar(w, b, kQuad);
        MomentResult pos = power_moment(w, b, 2.0, kQuad);
        MomentResult neg = power_moment(reciprocal(w), b, 2.0, kQuad);
        EXPECT_GE(std::sqrt(pos.value), lm - 1e-10);
        EXPECT_GE(std::sqrt(neg.value), 1.0 / lm - 1e-10);
    }
}

TEST(SmallChecks, ConstantField) {
    auto m = constant_weight(SpdMatrix::identity(2));
    SmallReport r = prop_small_check(m, Ball::origin(2, 1.0), 2.0, kQuad);
    EXPECT_EQ(r.lhs, 0.0);
    ScalarSmallReport s = small_scalar_checks(constant_scalar_weight(2, 3.0), Ball::origin(2, 1.0), 2.0, kQuad, 0.3);
    EXPECT_TRUE(s.applicable);
    EXPECT_TRUE(s.all_hold());
    EXPECT_NEAR(s.positive.lhs, 3.0, 1e-12);
    EXPECT_NEAR(s.log_mean, 3.0, 1e-12);
}

TEST(SmallChecks, StableUnderQuadratureRefinement) {
    auto w = power_weight(2, 0.05);
    double r1 = prop_small_check(w, Ball::origin(2, 1.0), 2.0, QuadratureSpec::polar(64, 16)).ratio;
    double r2 = prop_small_check(w, Ball::origin(2, 1.0), 2.0, QuadratureSpec::polar(128, 32)).ratio;
    double r3 = prop_small_check(w, Ball::origin(2, 1.0), 2.0, QuadratureSpec::polar(256, 64)).ratio;
    EXPECT_TRUE(std::isfinite(r1));
    EXPECT_LT(std::abs(r2 / r1 - 1.0), 0.2);
    EXPECT_LT(std::abs(r3 / r1 - 1.0), 0.2);
}

TEST(SmallChecks, PowerWeightSmallExponent) {
    Calibration cal = calibrate_constants(2, {0.05, 0.1, 0.2}, {1, 2, 4}, kQuad);
    EXPECT_GT(cal.c3, 0.0);
    EXPECT_GT(cal.gamma, 0.0);
    ScalarSmallReport s = small_scalar_checks(power_weight(2, 0.02), Ball::origin(2, 1.0), 4.0, kQuad, cal.gamma);
    EXPECT_TRUE(s.applicable);
    EXPECT_TRUE(s.all_hold());
    // closed forms: mean |x|^{a} over B_1 = 2 / (2 + a)
    EXPECT_NEAR(s.positive.lhs, std::pow(2.0 / 2.08, 0.25), 1e-4);

    SmallReport m = prop_small_check(example_weight(MeyersExample(Variant::Plain, 2, 0.1)), Ball::origin(2, 1.0), 4.0,
                                     kQuad, 3, cal.c3);
    ASSERT_TRUE(m.rhs_bound.has_value());
    EXPECT_LE(m.lhs, *m.rhs_bound);
}

TEST(SmallChecks, DivergentNegativeMoment) {
    ScalarSmallReport s = small_scalar_checks(power_weight(2, 0.6), Ball::origin(2, 1.0), 4.0, kQuad, 0.3);
    EXPECT_TRUE(s.negative.divergent);
    EXPECT_FALSE(s.negative.holds);
}
