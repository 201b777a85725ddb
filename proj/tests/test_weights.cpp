#include "degcz/exact_examples.hpp"
#include "degcz/spd.hpp"
#include "degcz/weight_algebra.hpp"
#include "degcz/weight_registry.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace degcz;

namespace {

Matrix random_orthogonal(std::mt19937_64& rng, int n) {
    std::normal_distribution<double> g;
    Matrix a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = g(rng);
    Eigen::HouseholderQR<Matrix> qr(a);
    return qr.householderQ();
}

// mean of log|x| over B_r(0) in R^n by a 1-D radial integral
double radial_log_mean(int n, double r) {
    boost::math::quadrature::tanh_sinh<double> ts;
    return ts.integrate([&](double s) { return n * std::pow(s, n - 1) * std::log(r * s); }, 0.0, 1.0);
}

}  // namespace

TEST(Spd, ExpLogTrivialCases) {
    Matrix z = Matrix::Zero(2, 2);
    EXPECT_LT((spd_exp(z).matrix() - Matrix::Identity(2, 2)).norm(), 1e-15);
    Matrix d = Eigen::Vector2d(1.0, 2.0).asDiagonal();
    Matrix ed = Eigen::Vector2d(std::exp(1.0), std::exp(2.0)).asDiagonal();
    EXPECT_LT((spd_exp(d).matrix() - ed).norm(), 1e-13);
    EXPECT_LT(spd_log(SpdMatrix::identity(2)).norm(), 1e-15);
    Matrix e2 = Eigen::Vector2d(std::exp(2.0), 1.0).asDiagonal();
    Matrix l = spd_log(SpdMatrix(e2));
    EXPECT_NEAR(l(0, 0), 2.0, 1e-14);
    EXPECT_NEAR(l(1, 1), 0.0, 1e-14);
}

TEST(Spd, RankOneLogFormula) {
    Eigen::Vector2d x(1.0, 0.0);
    Matrix m = Matrix::Identity(2, 2) + 3.0 * x * x.transpose();
    Matrix l = spd_log(SpdMatrix(m));
    EXPECT_NEAR(l(0, 0), std::log(4.0), 1e-14);
    EXPECT_NEAR(l(1, 1), 0.0, 1e-14);
    EXPECT_LT((spd_exp(std::log(4.0) * x * x.transpose()).matrix() - m).norm(), 1e-13);

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ua(-0.99, 50.0);
    std::normal_distribution<double> g;
    for (int k = 0; k < 500; ++k) {
        int n = 2 + k % 2;
        Vector v(n);
        for (int i = 0; i < n; ++i) v(i) = g(rng);
        v.normalize();
        double a = ua(rng);
        Matrix mm = Matrix::Identity(n, n) + a * v * v.transpose();
        Matrix expect = std::log1p(a) * v * v.transpose();
        EXPECT_LT((spd_log(SpdMatrix(mm)) - expect).norm(), 1e-12);
    }
}

TEST(Spd, ConditionNumbers) {
    EXPECT_DOUBLE_EQ(condition_number(SpdMatrix::identity(2)), 1.0);
    Matrix d = Eigen::Vector2d(4.0, 1.0).asDiagonal();
    EXPECT_NEAR(condition_number(SpdMatrix(d)), 4.0, 1e-14);
    Eigen::Vector2d x(0.6, 0.8);
    Matrix m = 0.5 * Matrix::Identity(2, 2) + 0.5 * x * x.transpose();
    EXPECT_NEAR(condition_number(SpdMatrix(m)), 2.0, 1e-14);
}

TEST(Spd, RejectsIndefinite) {
    Matrix m = Eigen::Vector2d(1.0, -1.0).asDiagonal();
    EXPECT_THROW(SpdMatrix{m}, NotPositiveDefinite);
}

TEST(Spd, RoundTripRandomMatrices) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 6.0);
    for (int k = 0; k < 2000; ++k) {
        int n = 2 + k % 2;
        Matrix q = random_orthogonal(rng, n);
        Vector lam(n);
        for (int i = 0; i < n; ++i) lam(i) = std::pow(10.0, u(rng) - 3.0);
        Matrix m = q * lam.asDiagonal() * q.transpose();
        m = (0.5 * (m + m.transpose())).eval();
        SpdMatrix s(m);
        Matrix back = spd_exp(spd_log(s)).matrix();
        EXPECT_LE((back - m).norm(), 1e-9 * m.norm());
    }
}

TEST(LogMean, ConstantField) {
    auto w = constant_scalar_weight(2, 3.5);
    EXPECT_NEAR(log_mean_scalar(w, Ball::at2(0.3, -0.2, 0.7), QuadratureSpec::polar(64, 16)), 3.5, 1e-13);
    SpdMatrix c(Matrix(Eigen::Vector2d(2.0, 0.5).asDiagonal()));
    auto m = constant_weight(c);
    EXPECT_LT((log_mean_matrix(m, Ball::origin(2, 1.0), QuadratureSpec::polar(64, 16)).matrix() - c.matrix()).norm(),
              1e-13);
}

TEST(LogMean, RadialOracleAgreesWithClosedForm) {
    for (int n : {2, 3}) {
        for (double r : {0.25, 1.0, 3.0}) EXPECT_NEAR(radial_log_mean(n, r), std::log(r) - 1.0 / n, 1e-12);
    }
}

TEST(LogMean, PowerWeightDefaultQuadrature) {
    auto w = power_weight(2, 0.3);
    EXPECT_NEAR(log_mean_scalar(w, Ball::origin(2, 1.0)), std::exp(-0.15), 1e-6);
    EXPECT_NEAR(std::exp(-0.15), 0.8607, 1e-4);
    auto w2 = power_weight(2, 0.5);
    double r = 2.0;
    EXPECT_NEAR(log_mean_scalar(w2, Ball::origin(2, r)), std::exp(0.5 * radial_log_mean(2, r)), 1e-6);
}

TEST(LogMean, InversionDualityAndScaling) {
    const QuadratureSpec q = QuadratureSpec::polar(128, 32);
    auto w = power_weight(2, 0.4, Vector(Eigen::Vector2d(0.1, 0.0)));
    Ball b = Ball::at2(0.0, 0.2, 0.5);
    double lm = log_mean_scalar(w, b, q);
    EXPECT_NEAR(log_mean_scalar(reciprocal(w), b, q) * lm, 1.0, 1e-10);
    EXPECT_NEAR(log_mean_scalar(scaled(w, 7.0), b, q) / (7.0 * lm), 1.0, 1e-12);

    auto m = example_weight(MeyersExample(Variant::Degenerate, 2, 0.5));
    SpdMatrix lmm = log_mean_matrix(m, b, q);
    SpdMatrix lmi = log_mean_matrix(inverse_field(m), b, q);
    EXPECT_LT((lmm.matrix() * lmi.matrix() - Matrix::Identity(2, 2)).norm(), 1e-10);
}

TEST(LogMean, RotationAveragingNarrowsSpread) {
    auto m = rank_one_radial_weight(2, 0.5);
    Ball b = Ball::origin(2, 1.0);
    SpdMatrix lm = log_mean_matrix(m, b, QuadratureSpec::polar(64, 64));
    double spread = lm.eigenvalues()(1) / lm.eigenvalues()(0);
    EXPECT_LT(spread, 2.0);
    // isotropic by symmetry: exp of the mean of log(theta)(I - xhat xhat) = sqrt(theta) I
    EXPECT_NEAR(lm.eigenvalues()(0), std::sqrt(0.5), 1e-10);
    EXPECT_NEAR(lm.eigenvalues()(1), std::sqrt(0.5), 1e-10);
    SpdMatrix mc = log_mean_matrix(m, b, QuadratureSpec::monte_carlo(1000000, 3));
    EXPECT_LT((mc.matrix() - lm.matrix()).norm(), 5e-3);
}

TEST(Sandwich, IdentityAndExample) {
    auto id = constant_weight(SpdMatrix::identity(2));
    SandwichResult s = sandwich_check(id, Ball::origin(2, 1.0), QuadratureSpec::polar(32, 16), 2.0);
    EXPECT_TRUE(s.holds);
    EXPECT_NEAR(s.lower_margin, 0.5, 1e-14);
    EXPECT_NEAR(s.upper_margin, 0.0, 1e-14);

    auto m = example_weight(MeyersExample(Variant::Plain, 2, 0.5));
    SandwichResult e = sandwich_check(m, Ball::origin(2, 1.0), QuadratureSpec::polar(128, 32), 2.0);
    EXPECT_TRUE(e.holds);
}

TEST(Sandwich, LogNormalFieldManyBalls) {
    auto m = log_normal_weight(2, 0.4, 4, 5);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-0.5, 0.5), ur(0.05, 0.5);
    const QuadratureSpec q = QuadratureSpec::polar(32, 16);
    double lambda = sampled_condition_bound(m, Ball::origin(2, 2.0), q);
    for (int k = 0; k < 100; ++k) {
        Ball b = Ball::at2(u(rng), u(rng), ur(rng));
        EXPECT_TRUE(sandwich_check(m, b, q, lambda).holds) << k;
    }
}

TEST(Registry, UnknownNameListsFamilies) {
    Config c = Config::parse("weight.family = nope");
    try {
        make_weight(c, "weight");
        FAIL() << "expected InvalidInput";
    } catch (const InvalidInput& e) {
        std::string msg = e.what();
        for (const auto& name : weight_registry_names()) EXPECT_NE(msg.find(name), std::string::npos) << name;
    }
}

TEST(Registry, ExampleWeightMatchesDirectConstruction) {
    Config c = Config::parse("weight = {family = example, variant = degenerate, eps = 0.5}");
    WeightField w = make_weight(c, "weight");
    MeyersExample ex(Variant::Degenerate, 2, 0.5);
    Vector x = Eigen::Vector2d(0.3, -0.4);
    EXPECT_LT((w(x).matrix() - weight_exact(ex, x).matrix()).norm(), 1e-15);
}
