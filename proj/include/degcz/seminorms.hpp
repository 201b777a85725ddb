#pragma once

#include "degcz/quadrature.hpp"
#include "degcz/weight_algebra.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace degcz {

enum class FamilyStrategy { DyadicGrid, Random };

struct BallFamilySpec {
    FamilyStrategy strategy = FamilyStrategy::DyadicGrid;
    Ball domain = Ball::origin(2, 1.0);
    int levels = 4;               // dyadic radii R, R/2, ..., R/2^{levels-1}
    double spacing = 0.5;         // grid step in units of the radius
    int random_count = 256;       // random strategy only
    std::uint64_t seed = 1;
    std::optional<Vector> focus;  // extra levels concentrated near this point
    int focus_levels = 0;
    int focus_step = 1;           // dyadic halvings per focus level
    std::string id = "family";
};

struct BallFamily {
    BallFamilySpec spec;
    std::vector<Ball> balls;
    std::vector<double> radii;
    std::string id;
    std::size_t count() const { return balls.size(); }
};

BallFamily make_family(const BallFamilySpec& spec);

struct BmoEstimate {
    double value = 0.0;
    Ball attaining_ball;
    std::size_t ball_count = 0;
    QuadratureSpec quadrature;
    std::vector<double> per_ball;
};

// Threads only split the per-ball work; the reduction runs in family order.
BmoEstimate bmo_scalar(const ScalarField& f, const BallFamily& fam, const QuadratureSpec& q, int threads = 1);
BmoEstimate bmo_matrix(const SymmetricField& h, const BallFamily& fam, const QuadratureSpec& q,
                       int threads = 1);

// Single-ball oscillation, integrated over B_r(x) ∩ B_R and divided by |B_r(x)|.
double mean_oscillation(const ScalarField& f, const Ball& ball, const Ball& domain, const QuadratureSpec& q);
double mean_oscillation(const SymmetricField& h, const Ball& ball, const Ball& domain, const QuadratureSpec& q);

// Mean of w^s over a ball, or a divergence flag when w^s is not integrable there.
struct MomentResult {
    double value = 0.0;
    bool divergent = false;
};
MomentResult power_moment(const ScalarWeightField& w, const Ball& ball, double s, const QuadratureSpec& q);
// local integrability exponent of w^s at a point: the decay rate of |B_d| mean_{B_d(x)} w^s as d halves
double local_integrability_exponent(const ScalarWeightField& w, const Vector& point, double s, double radius,
                                    const QuadratureSpec& q);

struct ApEstimate {
    double value = 0.0;
    bool divergent = false;
    std::optional<Ball> attaining_ball;
    std::optional<Ball> divergent_ball;
    std::size_t ball_count = 0;
    std::vector<double> per_ball;  // +inf where divergent
};

ApEstimate muckenhoupt_ap(const ScalarWeightField& w, double p, const BallFamily& fam, const QuadratureSpec& q,
                          int threads = 1);
// (mean w^p)^{1/p} (mean w^{-p'})^{1/p'} on one ball
MomentResult ap_product(const ScalarWeightField& w, double p, const Ball& ball, const QuadratureSpec& q);

struct SmallReport {
    double lhs = 0.0;
    double bmo = 0.0;
    double q = 1.0;
    double ratio = 0.0;  // lhs / (q bmo), 0 when both vanish
    std::optional<double> c3;
    std::optional<double> rhs_bound;
    bool holds = true;
};

// (mean_B (|M - M_B| / |M_B|)^q)^{1/q} against q |log M|_BMO(B)
SmallReport prop_small_check(const WeightField& m, const Ball& b, double q, const QuadratureSpec& quad,
                             int family_levels = 3, std::optional<double> c3 = std::nullopt);
SmallReport prop_small_check(const ScalarWeightField& w, const Ball& b, double q, const QuadratureSpec& quad,
                             int family_levels = 3, std::optional<double> c3 = std::nullopt);

struct ScalarSmallItem {
    double lhs = 0.0;
    double bound = 0.0;
    bool divergent = false;
    bool holds = false;
    double margin = 0.0;  // bound - lhs
};

struct ScalarSmallReport {
    double bmo = 0.0;
    double gamma = 0.0;
    double s = 1.0;
    bool applicable = false;  // bmo <= gamma / s
    double log_mean = 0.0;
    ScalarSmallItem positive;  // (mean w^s)^{1/s} <= 2 <w>^log
    ScalarSmallItem negative;  // (mean w^{-s})^{1/s} <= 2 / <w>^log
    ScalarSmallItem ap;        // product <= 4
    bool all_hold() const { return positive.holds && negative.holds && ap.holds; }
};

ScalarSmallReport small_scalar_checks(const ScalarWeightField& w, const Ball& b, double s, const QuadratureSpec& q,
                                      double gamma, int family_levels = 3);

// Calibration of the unquantified constants on |x|^eps weights.
struct Calibration {
    double c3 = 0.0;
    double gamma = 0.0;
    std::vector<double> eps_grid;
    std::vector<double> q_grid;
};
Calibration calibrate_constants(int dim, const std::vector<double>& eps_grid, const std::vector<double>& q_grid,
                                const QuadratureSpec& quad, int family_levels = 3);

}  // namespace degcz
