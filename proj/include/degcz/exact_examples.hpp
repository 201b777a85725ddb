#pragma once

#include "degcz/core.hpp"
#include "degcz/spd.hpp"
#include "degcz/weight_algebra.hpp"

#include <optional>
#include <string>

namespace degcz {

enum class Variant { Plain, Degenerate };

std::string to_string(Variant v);
Variant parse_variant(const std::string& s);

// u = |x|^{1-b} x1/|x| with M = |x|^{-g} (theta I + (1-theta) xhat xhat).
// Plain: b = eps, g = 0. Degenerate: b = eps/2, g = eps/2.
struct MeyersExample {
    Variant variant = Variant::Plain;
    int n = 2;
    double eps = 0.25;
    std::optional<double> theta_override;

    MeyersExample() = default;
    MeyersExample(Variant v, int dim, double e, std::optional<double> theta = std::nullopt);

    void validate() const;
    double theta() const;
    double gradient_exponent() const;  // b
    double weight_exponent() const;    // g
};

double theta_of(const MeyersExample& ex);

double u_exact(const MeyersExample& ex, const Vector& x);
Vector grad_u_exact(const MeyersExample& ex, const Vector& x);
SpdMatrix weight_exact(const MeyersExample& ex, const Vector& x);

// closed-form M^2 grad u = |x|^{-b-2g} (theta^2 e1 + (1 - b - theta^2) xhat xhat1)
Vector flux_closed_form(const MeyersExample& ex, const Vector& x);

// The stated residual coefficient of the divergence-free identity.
double divergence_identity(const MeyersExample& ex);
// Coefficient c in div(M^2 grad u) = c |x|^{-b-2g-1} xhat1, from the product rule.
double divergence_coefficient_direct(const MeyersExample& ex);

struct IntegrabilityVerdict {
    bool gradient_finite = false;  // |grad u| in L^rho near 0
    bool weighted_finite = false;  // |grad u| omega in L^rho near 0
};
IntegrabilityVerdict integrability_threshold(const MeyersExample& ex, double rho);

WeightField example_weight(const MeyersExample& ex);
ScalarField example_solution(const MeyersExample& ex);

// |grad u| omega = |x|^{-eps} g(xhat); integral of (|grad u| omega)^rho over B_R(0) when finite.
double weighted_gradient_power_integral(const MeyersExample& ex, double rho, double radius,
                                        int angular_nodes = 4096);

std::string describe(const MeyersExample& ex);

}  // namespace degcz
