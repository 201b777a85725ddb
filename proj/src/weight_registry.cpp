#include "degcz/weight_registry.hpp"

#include "degcz/exact_examples.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace degcz {

std::vector<std::string> weight_registry_names() {
    return {"constant", "rank-one-radial", "power-radial", "power-isotropic", "log-normal", "example"};
}

namespace {

Matrix radial_frame(const Vector& xhat) {
    const int n = static_cast<int>(xhat.size());
    Matrix q(n, n);
    q.col(0) = xhat;
    if (n == 2) {
        q(0, 1) = -xhat(1);
        q(1, 1) = xhat(0);
        return q;
    }
    int col = 1;
    for (int k = 0; k < n && col < n; ++k) {
        Vector v = Vector::Unit(n, k);
        for (int j = 0; j < col; ++j) v -= v.dot(q.col(j)) * q.col(j);
        double nv = v.norm();
        if (nv > 1e-8) q.col(col++) = v / nv;
    }
    return q;
}

SpdMatrix radial_matrix(const Vector& x, double alpha, double theta) {
    double r = x.norm();
    if (r < 1e-300) throw SingularPoint("radial weight evaluated at the origin");
    double scale = std::pow(r, alpha);
    Vector values = Vector::Constant(x.size(), theta * scale);
    values(0) = scale;
    return SpdMatrix::from_spectrum(values, radial_frame(x / r));
}

}  // namespace

WeightField rank_one_radial_weight(int dim, double theta) { return power_radial_weight(dim, 0.0, theta); }

WeightField power_radial_weight(int dim, double alpha, double theta) {
    if (!(theta > 0.0 && theta <= 1.0)) throw InvalidInput("radial weight: theta must lie in (0, 1]");
    WeightField f;
    f.dim = dim;
    f.evaluator = [alpha, theta](const Vector& x) { return radial_matrix(x, alpha, theta); };
    std::ostringstream name;
    name << "|x|^" << alpha << "(" << theta << "I+(1-" << theta << ")xx)";
    f.label = name.str();
    f.singular_points = {Vector::Zero(dim)};
    f.condition_bound = 1.0 / theta;
    return f;
}

WeightField power_isotropic_weight(int dim, double alpha) {
    WeightField f;
    f.dim = dim;
    f.evaluator = [alpha, dim](const Vector& x) {
        double r = x.norm();
        if (r < 1e-300) throw SingularPoint("power weight evaluated at the origin");
        return SpdMatrix::from_spectrum(Vector::Constant(dim, std::pow(r, alpha)), Matrix::Identity(dim, dim));
    };
    std::ostringstream name;
    name << "|x|^" << alpha << " I";
    f.label = name.str();
    f.singular_points = {Vector::Zero(dim)};
    f.condition_bound = 1.0;
    return f;
}

WeightField log_normal_weight(int dim, double amplitude, int modes, std::uint64_t seed) {
    if (modes < 1) throw InvalidInput("log-normal weight: modes must be positive");
    if (!(amplitude >= 0.0)) throw InvalidInput("log-normal weight: amplitude must be nonnegative");
    Rng rng(seed);
    std::vector<Matrix> shapes;
    std::vector<Vector> freqs;
    std::vector<double> phases;
    for (int k = 0; k < modes; ++k) {
        Matrix s(dim, dim);
        for (int i = 0; i < dim; ++i) {
            for (int j = 0; j < dim; ++j) s(i, j) = rng.normal();
        }
        s = (0.5 * (s + s.transpose())).eval();
        s /= spectral_norm_sym(s);
        Vector w(dim);
        for (int i = 0; i < dim; ++i) w(i) = 3.0 * rng.normal();
        shapes.push_back(s);
        freqs.push_back(w);
        phases.push_back(rng.uniform(0.0, 2.0 * std::numbers::pi));
    }
    const double scale = amplitude / std::sqrt(static_cast<double>(modes));
    WeightField f;
    f.dim = dim;
    f.evaluator = [shapes, freqs, phases, scale, dim](const Vector& x) {
        Matrix h = Matrix::Zero(dim, dim);
        for (size_t k = 0; k < shapes.size(); ++k) h += std::cos(freqs[k].dot(x) + phases[k]) * shapes[k];
        return spd_exp(scale * h);
    };
    std::ostringstream name;
    name << "lognormal(a=" << amplitude << ",modes=" << modes << ",seed=" << seed << ")";
    f.label = name.str();
    f.condition_bound = std::exp(2.0 * scale * modes);
    return f;
}

WeightField make_weight(const Config& cfg, const std::string& prefix) {
    const std::string family = cfg.get(prefix + ".family", "constant");
    const int dim = static_cast<int>(cfg.get_int(prefix + ".dim", 2));
    if (dim < 1 || dim > 3) throw InvalidInput("weight dimension must be 1, 2 or 3");
    if (family == "constant") {
        double c = cfg.get_double(prefix + ".value", 1.0);
        if (!(c > 0.0)) throw InvalidInput("constant weight: value must be positive");
        return constant_weight(SpdMatrix::identity(dim).scaled(c), "const");
    }
    if (family == "rank-one-radial") {
        double theta;
        if (cfg.has(prefix + ".theta")) {
            theta = cfg.get_double(prefix + ".theta");
        } else {
            theta = theta_of(MeyersExample(Variant::Plain, dim, cfg.get_double(prefix + ".eps", 0.25)));
        }
        return rank_one_radial_weight(dim, theta);
    }
    if (family == "power-radial") {
        double eps = cfg.get_double(prefix + ".eps", 0.25);
        double alpha = cfg.get_double(prefix + ".alpha", -eps / 2.0);
        double theta = cfg.has(prefix + ".theta")
                           ? cfg.get_double(prefix + ".theta")
                           : theta_of(MeyersExample(Variant::Degenerate, dim, eps));
        return power_radial_weight(dim, alpha, theta);
    }
    if (family == "power-isotropic") {
        return power_isotropic_weight(dim, cfg.get_double(prefix + ".alpha", 0.5));
    }
    if (family == "log-normal") {
        return log_normal_weight(dim, cfg.get_double(prefix + ".amplitude", 0.3),
                                 static_cast<int>(cfg.get_int(prefix + ".modes", 4)),
                                 cfg.get_u64(prefix + ".seed", 1));
    }
    if (family == "example") {
        MeyersExample ex(parse_variant(cfg.get(prefix + ".variant", "plain")),
                         static_cast<int>(cfg.get_int(prefix + ".n", dim)), cfg.get_double(prefix + ".eps", 0.25));
        return example_weight(ex);
    }
    std::ostringstream msg;
    msg << "unknown weight family '" << family << "'; registry:";
    for (const auto& n : weight_registry_names()) msg << " " << n;
    throw InvalidInput(msg.str());
}

}  // namespace degcz
