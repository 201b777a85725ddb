#include "degcz/exact_examples.hpp"
#include "degcz/nfunctions.hpp"
#include "degcz/seminorms.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace degcz;

namespace {

Vector random_point(std::mt19937_64& rng, int n) {
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> u(0.05, 1.0);
    Vector x(n);
    for (int i = 0; i < n; ++i) x(i) = g(rng);
    return x.normalized() * u(rng);
}

// int_{delta}^1 r^{n-1-e rho} dr, which stays bounded as delta -> 0 iff e rho < n
double radial_tail(int n, double e, double rho, double delta) {
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [&](double lr) { return std::exp(lr * (n - e * rho)); }, std::log(delta), 0.0);
}

}  // namespace

TEST(Theta, Values) {
    EXPECT_NEAR(theta_of(MeyersExample(Variant::Plain, 2, 0.5)), 0.5, 1e-15);
    EXPECT_NEAR(theta_of(MeyersExample(Variant::Plain, 3, 0.25)), std::sqrt(0.65625), 1e-12);
    EXPECT_NEAR(theta_of(MeyersExample(Variant::Degenerate, 2, 0.5)), std::sqrt(0.625), 1e-12);
}

TEST(Identity, VanishesForBothVariants) {
    for (Variant v : {Variant::Plain, Variant::Degenerate})
        for (int n : {2, 3})
            for (double e : {0.1, 0.25, 0.5}) EXPECT_LE(std::abs(divergence_identity(MeyersExample(v, n, e))), 1e-14);
    EXPECT_NEAR(divergence_identity(MeyersExample(Variant::Plain, 2, 0.5, 1.0)), -0.75, 1e-15);
}

TEST(Identity, PlainProductRuleAgrees) {
    for (int n : {2, 3})
        for (double e : {0.1, 0.25, 0.5})
            EXPECT_LE(std::abs(divergence_coefficient_direct(MeyersExample(Variant::Plain, n, e))), 1e-14);
}

TEST(Flux, ClosedFormMatchesWeightedMap) {
    std::mt19937_64 rng(21);
    for (Variant v : {Variant::Plain, Variant::Degenerate}) {
        for (int n : {2, 3}) {
            for (double e : {0.1, 0.25, 0.5}) {
                MeyersExample ex(v, n, e);
                for (int k = 0; k < 50; ++k) {
                    Vector x = random_point(rng, n);
                    SpdMatrix m = weight_exact(ex, x);
                    Vector direct = weighted_maps(m, 2.0, grad_u_exact(ex, x)).cal_a;
                    Vector closed = flux_closed_form(ex, x);
                    EXPECT_LE((direct - closed).norm(), 1e-10 * closed.norm());
                }
            }
        }
    }
}

TEST(Gradient, FiniteDifferences) {
    std::mt19937_64 rng(22);
    for (Variant v : {Variant::Plain, Variant::Degenerate}) {
        MeyersExample ex(v, 3, 0.3);
        for (int k = 0; k < 30; ++k) {
            Vector x = random_point(rng, 3);
            Vector g = grad_u_exact(ex, x);
            double h = 1e-6 * x.norm();
            for (int i = 0; i < 3; ++i) {
                Vector xp = x, xm = x;
                xp(i) += h;
                xm(i) -= h;
                EXPECT_NEAR((u_exact(ex, xp) - u_exact(ex, xm)) / (2 * h), g(i), 1e-6 * g.norm());
            }
        }
    }
}

TEST(Weight, EigenstructureAndConditionBound) {
    MeyersExample ex(Variant::Plain, 2, 0.5);
    Matrix m = weight_exact(ex, Eigen::Vector2d(1.0, 0.0)).matrix();
    EXPECT_NEAR(m(0, 0), 1.0, 1e-15);
    EXPECT_NEAR(m(1, 1), 0.5, 1e-15);
    EXPECT_NEAR(m(0, 1), 0.0, 1e-15);

    Vector x = Eigen::Vector2d(0.6, 0.8);
    Matrix l = spd_log(weight_exact(ex, x));
    Matrix expect = std::log(0.5) * (Matrix::Identity(2, 2) - x * x.transpose());
    EXPECT_LT((l - expect).norm(), 1e-14);

    MeyersExample deg(Variant::Degenerate, 2, 0.5);
    EXPECT_NEAR(weight_exact(deg, Eigen::Vector2d(0.01, 0.0)).norm(), std::pow(0.01, -0.25), 1e-12);

    std::mt19937_64 rng(23);
    for (Variant v : {Variant::Plain, Variant::Degenerate})
        for (int k = 0; k < 200; ++k) {
            MeyersExample e(v, 2 + k % 2, 0.5);
            EXPECT_LE(condition_number(weight_exact(e, random_point(rng, e.n))), 2.0 + 1e-12);
        }
}

TEST(Weight, RejectsOrigin) {
    MeyersExample ex(Variant::Plain, 2, 0.25);
    EXPECT_THROW(weight_exact(ex, Vector::Zero(2)), SingularPoint);
    EXPECT_THROW(grad_u_exact(ex, Vector::Zero(2)), SingularPoint);
}

TEST(Integrability, Thresholds) {
    MeyersExample ex(Variant::Plain, 2, 0.5);
    EXPECT_TRUE(integrability_threshold(ex, 3.9).weighted_finite);
    EXPECT_FALSE(integrability_threshold(ex, 4.0).weighted_finite);
    MeyersExample deg(Variant::Degenerate, 2, 0.5);
    IntegrabilityVerdict v = integrability_threshold(deg, 7.0);
    EXPECT_TRUE(v.gradient_finite);
    EXPECT_FALSE(v.weighted_finite);
}

TEST(Integrability, RadialOracle) {
    // |grad u| omega ~ |x|^{-eps}: the tail integral stabilizes below n / eps and blows up above
    for (double rho : {3.0, 3.6}) {
        double a = radial_tail(2, 0.5, rho, 1e-6), b = radial_tail(2, 0.5, rho, 1e-12);
        EXPECT_LT(b / a, 1.1) << rho;
        EXPECT_TRUE(integrability_threshold(MeyersExample(Variant::Plain, 2, 0.5), rho).weighted_finite);
    }
    for (double rho : {4.4, 5.0}) {
        double a = radial_tail(2, 0.5, rho, 1e-6), b = radial_tail(2, 0.5, rho, 1e-12);
        EXPECT_GT(b / a, 10.0) << rho;
        EXPECT_FALSE(integrability_threshold(MeyersExample(Variant::Plain, 2, 0.5), rho).weighted_finite);
    }
}

TEST(Integrability, WeightedPowerIntegralFiniteBranch) {
    MeyersExample ex(Variant::Plain, 2, 0.5);
    // rho = 2: |grad u|^2 omega^2 = |x|^{-1} g(xhat)^2 integrates to finite values growing like R
    double i1 = weighted_gradient_power_integral(ex, 2.0, 1.0);
    double i2 = weighted_gradient_power_integral(ex, 2.0, 0.5);
    EXPECT_GT(i1, 0.0);
    EXPECT_NEAR(i2 / i1, 0.5, 1e-10);
}

TEST(LogBmo, SmallnessBounds) {
    BallFamilySpec spec;
    spec.levels = 4;
    BallFamily fam = make_family(spec);
    const QuadratureSpec q = QuadratureSpec::polar(128, 32);
    for (double e : {0.1, 0.25}) {
        double plain = bmo_matrix(log_field(example_weight(MeyersExample(Variant::Plain, 2, e))), fam, q).value;
        double deg = bmo_matrix(log_field(example_weight(MeyersExample(Variant::Degenerate, 2, e))), fam, q).value;
        EXPECT_LE(plain, e);
        EXPECT_LE(deg, 1.5 * e);
        EXPECT_GT(plain, 0.0);
    }
}

TEST(Describe, MentionsParameters) {
    std::string d = describe(MeyersExample(Variant::Degenerate, 3, 0.1));
    EXPECT_NE(d.find("degenerate"), std::string::npos);
    EXPECT_NE(d.find("n=3"), std::string::npos);
}
