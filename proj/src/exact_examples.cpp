#include "degcz/exact_examples.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace degcz {

namespace {

constexpr double kOriginGuard = 1e-300;

double checked_radius(const Vector& x) {
    double r = x.norm();
    if (r < kOriginGuard) throw SingularPoint("exact example evaluated at the origin");
    return r;
}

}  // namespace

std::string to_string(Variant v) { return v == Variant::Plain ? "plain" : "degenerate"; }

Variant parse_variant(const std::string& s) {
    if (s == "plain") return Variant::Plain;
    if (s == "degenerate") return Variant::Degenerate;
    throw InvalidInput("unknown example variant '" + s + "' (expected plain or degenerate)");
}

MeyersExample::MeyersExample(Variant v, int dim, double e, std::optional<double> theta)
    : variant(v), n(dim), eps(e), theta_override(theta) {
    validate();
}

void MeyersExample::validate() const {
    if (n < 2) throw InvalidInput("example: dimension must be at least 2");
    if (!(eps > 0.0 && eps <= 0.5)) throw InvalidInput("example: eps must lie in (0, 1/2]");
    if (theta_override && !(*theta_override > 0.0 && *theta_override <= 1.0)) {
        throw InvalidInput("example: theta override must lie in (0, 1]");
    }
}

double theta_of(const MeyersExample& ex) {
    ex.validate();
    const double e = ex.eps;
    const double n1 = ex.n - 1.0;
    if (ex.variant == Variant::Plain) return std::sqrt(1.0 - e - e * (1.0 - e) / n1);
    return std::sqrt(1.0 - e / 2.0 - e * (1.0 - e) / (2.0 * n1));
}

double MeyersExample::theta() const { return theta_override ? *theta_override : theta_of(*this); }

double MeyersExample::gradient_exponent() const { return variant == Variant::Plain ? eps : eps / 2.0; }

double MeyersExample::weight_exponent() const { return variant == Variant::Plain ? 0.0 : eps / 2.0; }

double u_exact(const MeyersExample& ex, const Vector& x) {
    double r = checked_radius(x);
    return std::pow(r, 1.0 - ex.gradient_exponent()) * x(0) / r;
}

Vector grad_u_exact(const MeyersExample& ex, const Vector& x) {
    double r = checked_radius(x);
    double b = ex.gradient_exponent();
    Vector xhat = x / r;
    Vector g = -b * xhat(0) * xhat;
    g(0) += 1.0;
    return std::pow(r, -b) * g;
}

SpdMatrix weight_exact(const MeyersExample& ex, const Vector& x) {
    double r = checked_radius(x);
    const int n = ex.n;
    if (x.size() != n) throw InvalidInput("weight_exact: point dimension mismatch");
    double theta = ex.theta();
    double scale = std::pow(r, -ex.weight_exponent());
    Vector xhat = x / r;
    // eigenvalue 1 along xhat, theta on the orthogonal complement
    Matrix basis = Matrix::Identity(n, n);
    Matrix q(n, n);
    q.col(0) = xhat;
    int col = 1;
    for (int k = 0; k < n && col < n; ++k) {
        Vector v = basis.col(k);
        for (int j = 0; j < col; ++j) v -= v.dot(q.col(j)) * q.col(j);
        double nv = v.norm();
        if (nv > 1e-8) q.col(col++) = v / nv;
    }
    Vector values = Vector::Constant(n, theta * scale);
    values(0) = scale;
    return SpdMatrix::from_spectrum(values, q);
}

Vector flux_closed_form(const MeyersExample& ex, const Vector& x) {
    double r = checked_radius(x);
    double b = ex.gradient_exponent();
    double g = ex.weight_exponent();
    double theta = ex.theta();
    Vector xhat = x / r;
    Vector f = (1.0 - b - theta * theta) * xhat(0) * xhat;
    f(0) += theta * theta;
    return std::pow(r, -b - 2.0 * g) * f;
}

double divergence_identity(const MeyersExample& ex) {
    const double e = ex.eps;
    const double th2 = ex.theta() * ex.theta();
    const double n1 = ex.n - 1.0;
    if (ex.variant == Variant::Plain) return -e * (1.0 - e) + (1.0 - e - th2) * n1;
    return -(e / 2.0) * (1.0 - e) + (1.0 - e / 2.0 - th2) * n1;
}

double divergence_coefficient_direct(const MeyersExample& ex) {
    const double b = ex.gradient_exponent();
    const double alpha = -b - 2.0 * ex.weight_exponent();
    const double th2 = ex.theta() * ex.theta();
    return (1.0 - b - th2) * (ex.n - 1.0) + alpha * (1.0 - b);
}

IntegrabilityVerdict integrability_threshold(const MeyersExample& ex, double rho) {
    if (!(rho >= 1.0)) throw InvalidInput("integrability_threshold: rho must be at least 1");
    IntegrabilityVerdict v;
    const double n = ex.n;
    // |grad u| ~ |x|^{-b}, |grad u| omega ~ |x|^{-eps} for both variants; borderline counts as infinite
    v.gradient_finite = rho * ex.gradient_exponent() < n;
    v.weighted_finite = rho * ex.eps < n;
    return v;
}

WeightField example_weight(const MeyersExample& ex) {
    ex.validate();
    WeightField f;
    f.dim = ex.n;
    f.evaluator = [ex](const Vector& x) { return weight_exact(ex, x); };
    f.label = describe(ex);
    f.singular_points = {Vector::Zero(ex.n)};
    f.condition_bound = 1.0 / ex.theta();
    return f;
}

ScalarField example_solution(const MeyersExample& ex) {
    ScalarField f;
    f.dim = ex.n;
    f.evaluator = [ex](const Vector& x) { return u_exact(ex, x); };
    f.label = "u(" + describe(ex) + ")";
    f.singular_points = {Vector::Zero(ex.n)};
    return f;
}

double weighted_gradient_power_integral(const MeyersExample& ex, double rho, double radius,
                                        int angular_nodes) {
    const double n = ex.n;
    const double expo = n - ex.eps * rho;
    if (expo <= 0.0) return std::numeric_limits<double>::infinity();
    const double b = ex.gradient_exponent();
    auto g = [&](double c) {
        double sq = 1.0 - 2.0 * b * c * c + b * b * c * c;
        return std::pow(sq, rho / 2.0);
    };
    double ang = 0.0;
    if (ex.n == 2) {
        double dphi = 2.0 * std::numbers::pi / angular_nodes;
        for (int j = 0; j < angular_nodes; ++j) ang += g(std::cos((j + 0.5) * dphi)) * dphi;
    } else if (ex.n == 3) {
        double dmu = 2.0 / angular_nodes;
        for (int j = 0; j < angular_nodes; ++j) ang += g(-1.0 + (j + 0.5) * dmu) * dmu;
        ang *= 2.0 * std::numbers::pi;
    } else {
        throw InvalidInput("weighted_gradient_power_integral: dimensions 2 and 3 only");
    }
    return ang * std::pow(radius, expo) / expo;
}

std::string describe(const MeyersExample& ex) {
    std::ostringstream out;
    out << to_string(ex.variant) << "(n=" << ex.n << ",eps=" << ex.eps;
    if (ex.theta_override) out << ",theta=" << *ex.theta_override;
    out << ")";
    return out.str();
}

}  // namespace degcz
