#pragma once

#include "degcz/core.hpp"
#include "degcz/quadrature.hpp"
#include "degcz/spd.hpp"

#include <optional>
#include <string>
#include <vector>

namespace degcz {

// Matrix weight M(x). Evaluators must be stateless so fields can be shared across workers.
struct WeightField {
    int dim = 2;
    std::function<SpdMatrix(const Vector&)> evaluator;
    std::string label;
    std::vector<Vector> singular_points;
    std::optional<double> condition_bound;

    SpdMatrix operator()(const Vector& x) const { return evaluator(x); }
};

// Symmetric-matrix valued field, e.g. log M.
struct SymmetricField {
    int dim = 2;
    std::function<Matrix(const Vector&)> evaluator;
    std::string label;
    std::vector<Vector> singular_points;

    Matrix operator()(const Vector& x) const { return evaluator(x); }
};

struct ScalarField {
    int dim = 2;
    std::function<double(const Vector&)> evaluator;
    std::string label;
    std::vector<Vector> singular_points;

    double operator()(const Vector& x) const { return evaluator(x); }
};

enum class Provenance { DerivedFromMatrix, Standalone };

struct ScalarWeightField {
    int dim = 2;
    std::function<double(const Vector&)> evaluator;
    std::string label;
    std::vector<Vector> singular_points;
    Provenance provenance = Provenance::Standalone;

    double operator()(const Vector& x) const { return evaluator(x); }
    ScalarField as_field() const { return {dim, evaluator, label, singular_points}; }
};

WeightField constant_weight(const SpdMatrix& c, std::string label = "constant");

// omega(x) = |M(x)|
ScalarWeightField scalar_weight(const WeightField& m);
ScalarWeightField constant_scalar_weight(int dim, double c);
// |x - center|^alpha
ScalarWeightField power_weight(int dim, double alpha, std::optional<Vector> center = std::nullopt);

WeightField inverse_field(const WeightField& m);
WeightField scaled_field(const WeightField& m, double t);
// A = M^2
WeightField squared_field(const WeightField& m);

ScalarWeightField reciprocal(const ScalarWeightField& w);
ScalarWeightField scaled(const ScalarWeightField& w, double t);

SymmetricField log_field(const WeightField& m);
SymmetricField as_symmetric_field(const WeightField& m);
ScalarField log_field(const ScalarWeightField& w);

double ball_mean(const ScalarField& f, const Ball& b, const QuadratureSpec& q);
Matrix ball_mean(const SymmetricField& f, const Ball& b, const QuadratureSpec& q);

double log_mean_scalar(const ScalarWeightField& w, const Ball& b,
                       const QuadratureSpec& q = QuadratureSpec{});
SpdMatrix log_mean_matrix(const WeightField& m, const Ball& b,
                          const QuadratureSpec& q = QuadratureSpec{});

struct SandwichResult {
    bool holds = false;
    double lower_margin = 0.0;  // lambda_min(M_B - omega_B/Lambda I) / omega_B
    double upper_margin = 0.0;  // lambda_min(omega_B I - M_B) / omega_B
    double omega_b = 0.0;
    double lambda = 0.0;
    SpdMatrix m_b = SpdMatrix::identity(1);
};

// Lambda defaults to the field's declared condition bound.
SandwichResult sandwich_check(const WeightField& m, const Ball& b,
                              const QuadratureSpec& q = QuadratureSpec{},
                              std::optional<double> lambda = std::nullopt);

// Largest sampled |M||M^{-1}| over a ball.
double sampled_condition_bound(const WeightField& m, const Ball& b, const QuadratureSpec& q);

}  // namespace degcz
