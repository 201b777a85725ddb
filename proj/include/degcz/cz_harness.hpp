#pragma once

#include "degcz/exact_examples.hpp"
#include "degcz/mesh.hpp"
#include "degcz/pde_solver.hpp"
#include "degcz/seminorms.hpp"

#include <optional>
#include <string>
#include <vector>

namespace degcz {

// Nonlinear: inner 1/2 B0, outer 4 B0. Linear: inner B0, outer 2 B0.
enum class CzGeometry { Nonlinear, Linear };

struct CzRow {
    std::string experiment_id;
    std::string variant;
    int n = 2;
    double eps = 0.0;
    double p = 2.0;
    double rho = 2.0;
    Ball ball;
    int ball_id = 0;
    int level = 0;
    double lhs = 0.0;
    double rhs = 0.0;
    double ratio = 0.0;      // NaN for the 0/0 case
    bool zero_case = false;  // lhs = rhs = 0
    double bmo_log_m = 0.0;
    double lambda_cond = 1.0;
    std::string classification = "pending";
};

struct PhaseBoundary {
    double eps = 0.0;
    double analytic = 0.0;               // n / eps
    std::optional<double> boundary;      // midpoint of the last bounded and first diverging rho
    std::vector<double> bounded, diverging, excluded, failed;
    std::vector<double> growth;          // per rho in grid order
};

struct CzReport {
    std::vector<CzRow> rows;
    std::vector<PhaseBoundary> boundaries;
    std::vector<std::string> failures;

    static const std::vector<std::string>& columns();
    // header_lines are written first, each prefixed with "# ".
    void write_csv(const std::string& path, const std::vector<std::string>& header_lines) const;
    std::string csv_body() const;
};

std::string format_ratio(const CzRow& row);

// The weak problem associated with an exact example, Dirichlet data u_exact.
WeakProblem example_problem(const MeyersExample& ex, double p = 2.0);

CzRow cz_ratio(const DiscreteField& u, const WeakProblem& prob, const Ball& b0, double rho,
               CzGeometry geometry = CzGeometry::Nonlinear);
CzRow cz_ratio(const DiscreteField& u, const WeakProblem& prob, const CellWeights& w, const Ball& b0, double rho,
               CzGeometry geometry = CzGeometry::Nonlinear);

struct InequalityRatio {
    double lhs = 0.0;
    double rhs = 0.0;
    double ratio = 0.0;  // 0 when lhs = rhs = 0
};

// lhs = mean_B |grad u|^p w^p, rhs = mean_2B |u - <u>_2B|^p / r^p w^p + mean_2B |G|^p w^p
InequalityRatio caccioppoli_check(const DiscreteField& u, const WeakProblem& prob, const Ball& b);

struct PoincareReport {
    InequalityRatio ratio;
    double sampled_c1 = 0.0;  // sup over sampled balls in 2B of the two-exponent product
    bool c1_finite = true;    // false flags a violated weight condition
};

// (mean_B |(u - <u>_B)/r|^p w^p)^{1/p} against (mean_B (|grad u| w)^{theta p})^{1/(theta p)}
PoincareReport poincare_check(const DiscreteField& u, const ScalarWeightField& omega, const Ball& b, double p,
                              double theta, const QuadratureSpec& quad = QuadratureSpec::polar(64, 32));

struct LocalizedTriple {
    Ball b0;
    Ball b;  // comparison ball, 4B inside 2B0
    double p = 2.0;
    double mean_u = 0.0;  // <u>_{2B0}
    DiscreteField zeta;
    DiscreteField z;
    std::vector<Point2> g;  // per cell of the full mesh
    MeshPtr sub;            // cells with barycenter in B
    std::vector<int> vertex_map;
    DiscreteField z_sub;
    DiscreteField h;
    SpdMatrix m_b = SpdMatrix::identity(2);
};

// C^1 radial bump: 1 on 1/2 B0, 0 outside B0.
double cutoff(const Ball& b0, const Point2& x);

// B defaults to 1/2 B0.
LocalizedTriple build_localized(const DiscreteField& u, const WeakProblem& prob, const Ball& b0,
                                std::optional<Ball> b = std::nullopt,
                                const QuadratureSpec& quad = QuadratureSpec::polar(128, 32),
                                const SolverConfig& solver = SolverConfig{});

struct ComparisonReport {
    double lhs = 0.0;
    double bmo_log_m = 0.0;
    double delta = 0.0;
    double s = 1.25;
    double oscillation_term = 0.0;  // (bmo^2 + delta) (mean_B (|grad z|^p w^p)^s)^{1/s}
    double u_term = 0.0;            // delta^{1-p} (mean_4B (|u - <u>|^p / R^p w^p)^s)^{1/s}
    double g_term = 0.0;            // delta^{1-p} (mean_4B (zeta^p |G|^p w^p)^s)^{1/s}
    double constant = 0.0;          // lhs / sum of terms, 0 when everything vanishes
};

ComparisonReport comparison_check(const LocalizedTriple& t, const DiscreteField& u, const WeakProblem& prob,
                                  double delta, double s = 1.25,
                                  const QuadratureSpec& quad = QuadratureSpec::polar(128, 32));

// Brute-force maximal functions of a cell field, evaluated at cell barycenters.
// Ball means are taken over ball ∩ mesh; cells covered by no ball get 0.
std::vector<double> maximal(const Mesh& mesh, const std::vector<double>& f, double rho, const BallFamily& fam);
std::vector<double> sharp_maximal(const Mesh& mesh, const std::vector<double>& f, double rho,
                                  const BallFamily& fam);

// Balls centered at every cell barycenter with radii r_max 2^{-k/per_octave} down to min_factor * cell diameter.
BallFamily centered_family(const Mesh& mesh, double r_max, int per_octave = 2, double min_factor = 1.0);

struct FeffermanSteinRow {
    double q = 0.0;
    double f_norm = 0.0;
    double sharp_norm = 0.0;
    double constant = 0.0;  // f_norm / (q sharp_norm)
};
std::vector<FeffermanSteinRow> fefferman_stein(const Mesh& mesh, const std::vector<double>& f,
                                               const std::vector<double>& qs, const BallFamily& fam);

// (mean_Omega (|grad(u_h - u)| omega)^2)^{1/2} with the exact gradient and weight, each cell split 4^depth times.
double weighted_h1_error(const DiscreteField& uh, const MeyersExample& ex, int depth = 2);

struct ConvergenceLevel {
    int level = 0;
    int vertices = 0;
    double h_max = 0.0;
    double error = 0.0;     // weighted H1 error (solve) or scaled residual (interpolant)
    double residual = 0.0;  // scaled weak residual of the discrete function
    double factor = 0.0;    // error(previous level) / error, 0 on the first level
};

// Solves the example on refine_graded(base, l), l = 0..levels-1, and records the weighted H1 error.
std::vector<ConvergenceLevel> convergence_study(const MeyersExample& ex, double p, const GradedDiskOptions& base,
                                                int levels, const SolverConfig& solver = SolverConfig{});
// Weak residual of the nodal interpolant of u_exact under the same refinement. `residual` is the scaled
// nodal norm; `error` is the weighted energy gap between the interpolant and the discrete solution.
std::vector<ConvergenceLevel> residual_study(const MeyersExample& ex, double p, const GradedDiskOptions& base,
                                             int levels);

struct SweepSpec {
    std::string experiment_id = "sweep";
    Variant variant = Variant::Plain;
    int n = 2;
    double p = 2.0;
    std::vector<double> eps_grid = {0.5, 0.25};
    std::vector<double> rho_factors = {0.5, 0.75, 0.9, 1.1, 1.25};  // times n / eps
    std::vector<double> rho_grid;                                    // absolute values, override the factors
    int levels = 4;
    GradedDiskOptions mesh{32, 0.7, 1e-2, 1.0, 0};
    double inner_shrink = 1e-4;  // innermost radius factor per level
    Ball b0 = Ball::at2(0.0, 0.0, 0.25);
    CzGeometry geometry = CzGeometry::Nonlinear;
    double growth_threshold = 1.5;
    double dead_zone = 0.1;
    QuadratureSpec quad = QuadratureSpec::polar(128, 32);
    int threads = 1;

    void validate() const;
    std::vector<double> rhos(double eps) const;
    GradedDiskOptions mesh_at(int level) const;
};

CzReport sweep(const SweepSpec& spec);

}  // namespace degcz
