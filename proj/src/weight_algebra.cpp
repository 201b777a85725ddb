#include "degcz/weight_algebra.hpp"

#include <cmath>
#include <sstream>

namespace degcz {

WeightField constant_weight(const SpdMatrix& c, std::string label) {
    WeightField f;
    f.dim = c.dim();
    f.evaluator = [c](const Vector&) { return c; };
    f.label = std::move(label);
    f.condition_bound = condition_number(c);
    return f;
}

ScalarWeightField scalar_weight(const WeightField& m) {
    ScalarWeightField w;
    w.dim = m.dim;
    auto eval = m.evaluator;
    w.evaluator = [eval](const Vector& x) { return eval(x).norm(); };
    w.label = "|" + m.label + "|";
    w.singular_points = m.singular_points;
    w.provenance = Provenance::DerivedFromMatrix;
    return w;
}

ScalarWeightField constant_scalar_weight(int dim, double c) {
    if (!(c > 0.0)) throw InvalidInput("constant_scalar_weight: value must be positive");
    ScalarWeightField w;
    w.dim = dim;
    w.evaluator = [c](const Vector&) { return c; };
    std::ostringstream name;
    name << "const(" << c << ")";
    w.label = name.str();
    return w;
}

ScalarWeightField power_weight(int dim, double alpha, std::optional<Vector> center) {
    Vector c = center.value_or(Vector::Zero(dim));
    if (c.size() != dim) throw InvalidInput("power_weight: center dimension mismatch");
    ScalarWeightField w;
    w.dim = dim;
    w.evaluator = [c, alpha](const Vector& x) {
        double r = (x - c).norm();
        if (r < 1e-300) throw SingularPoint("power_weight: evaluation at the singular point");
        return std::pow(r, alpha);
    };
    std::ostringstream name;
    name << "|x|^" << alpha;
    w.label = name.str();
    w.singular_points = {c};
    return w;
}

WeightField inverse_field(const WeightField& m) {
    WeightField f = m;
    auto eval = m.evaluator;
    f.evaluator = [eval](const Vector& x) { return eval(x).inverse(); };
    f.label = "inv(" + m.label + ")";
    return f;
}

WeightField scaled_field(const WeightField& m, double t) {
    if (!(t > 0.0)) throw InvalidInput("scaled_field: factor must be positive");
    WeightField f = m;
    auto eval = m.evaluator;
    f.evaluator = [eval, t](const Vector& x) { return eval(x).scaled(t); };
    std::ostringstream name;
    name << t << "*" << m.label;
    f.label = name.str();
    return f;
}

WeightField squared_field(const WeightField& m) {
    WeightField f = m;
    auto eval = m.evaluator;
    f.evaluator = [eval](const Vector& x) { return eval(x).power(2.0); };
    f.label = "(" + m.label + ")^2";
    if (m.condition_bound) f.condition_bound = *m.condition_bound * *m.condition_bound;
    return f;
}

ScalarWeightField reciprocal(const ScalarWeightField& w) {
    ScalarWeightField r = w;
    auto eval = w.evaluator;
    r.evaluator = [eval](const Vector& x) { return 1.0 / eval(x); };
    r.label = "1/" + w.label;
    r.provenance = Provenance::Standalone;
    return r;
}

ScalarWeightField scaled(const ScalarWeightField& w, double t) {
    if (!(t > 0.0)) throw InvalidInput("scaled: factor must be positive");
    ScalarWeightField r = w;
    auto eval = w.evaluator;
    r.evaluator = [eval, t](const Vector& x) { return t * eval(x); };
    std::ostringstream name;
    name << t << "*" << w.label;
    r.label = name.str();
    return r;
}

SymmetricField log_field(const WeightField& m) {
    SymmetricField h;
    h.dim = m.dim;
    auto eval = m.evaluator;
    h.evaluator = [eval](const Vector& x) { return eval(x).log(); };
    h.label = "log(" + m.label + ")";
    h.singular_points = m.singular_points;
    return h;
}

SymmetricField as_symmetric_field(const WeightField& m) {
    SymmetricField h;
    h.dim = m.dim;
    auto eval = m.evaluator;
    h.evaluator = [eval](const Vector& x) { return eval(x).matrix(); };
    h.label = m.label;
    h.singular_points = m.singular_points;
    return h;
}

ScalarField log_field(const ScalarWeightField& w) {
    ScalarField f;
    f.dim = w.dim;
    auto eval = w.evaluator;
    f.evaluator = [eval](const Vector& x) { return std::log(eval(x)); };
    f.label = "log(" + w.label + ")";
    f.singular_points = w.singular_points;
    return f;
}

double ball_mean(const ScalarField& f, const Ball& b, const QuadratureSpec& q) {
    if (b.dim() != f.dim) throw InvalidInput("ball_mean: dimension mismatch");
    BallRule rule = ball_rule(b, q, f.singular_points);
    double acc = 0.0;
    for (int i = 0; i < rule.size(); ++i) acc += rule.weights(i) * f(rule.point(i));
    return acc;
}

Matrix ball_mean(const SymmetricField& f, const Ball& b, const QuadratureSpec& q) {
    if (b.dim() != f.dim) throw InvalidInput("ball_mean: dimension mismatch");
    BallRule rule = ball_rule(b, q, f.singular_points);
    Matrix acc = Matrix::Zero(f.dim, f.dim);
    for (int i = 0; i < rule.size(); ++i) acc += rule.weights(i) * f(rule.point(i));
    return 0.5 * (acc + acc.transpose());
}

double log_mean_scalar(const ScalarWeightField& w, const Ball& b, const QuadratureSpec& q) {
    return std::exp(ball_mean(log_field(w), b, q));
}

SpdMatrix log_mean_matrix(const WeightField& m, const Ball& b, const QuadratureSpec& q) {
    return spd_exp(ball_mean(log_field(m), b, q));
}

SandwichResult sandwich_check(const WeightField& m, const Ball& b, const QuadratureSpec& q,
                              std::optional<double> lambda) {
    SandwichResult out;
    if (lambda) {
        out.lambda = *lambda;
    } else if (m.condition_bound) {
        out.lambda = *m.condition_bound;
    } else {
        throw InvalidInput("sandwich_check: no condition bound known for " + m.label);
    }
    out.m_b = log_mean_matrix(m, b, q);
    out.omega_b = log_mean_scalar(scalar_weight(m), b, q);
    const int n = m.dim;
    Matrix id = Matrix::Identity(n, n);
    out.lower_margin = loewner_margin(out.omega_b / out.lambda * id, out.m_b.matrix()) / out.omega_b;
    out.upper_margin = loewner_margin(out.m_b.matrix(), out.omega_b * id) / out.omega_b;
    out.holds = out.lower_margin >= -1e-12 && out.upper_margin >= -1e-12;
    return out;
}

double sampled_condition_bound(const WeightField& m, const Ball& b, const QuadratureSpec& q) {
    BallRule rule = ball_rule(b, q, m.singular_points);
    double worst = 1.0;
    for (int i = 0; i < rule.size(); ++i) worst = std::max(worst, condition_number(m(rule.point(i))));
    return worst;
}

}  // namespace degcz
