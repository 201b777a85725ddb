#include "degcz/seminorms.hpp"

#include "degcz/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace degcz {

namespace {

constexpr double kOverflowGuard = 1e150;
constexpr double kDivergenceExponent = 0.02;

void grid_points(const Vector& origin, double step, int dim, double reach, std::vector<Vector>& out) {
    const int m = static_cast<int>(std::ceil(reach / step)) + 1;
    std::vector<int> idx(dim, -m);
    while (true) {
        Vector c = origin;
        for (int d = 0; d < dim; ++d) c(d) += step * idx[d];
        out.push_back(c);
        int d = dim - 1;
        while (d >= 0 && idx[d] == m) idx[d--] = -m;
        if (d < 0) break;
        ++idx[d];
    }
}

}  // namespace

BallFamily make_family(const BallFamilySpec& spec) {
    BallFamily fam;
    fam.spec = spec;
    fam.id = spec.id;
    const Ball& dom = spec.domain;
    const int n = dom.dim();
    const double R = dom.radius;
    if (spec.levels < 1) throw InvalidInput("ball family: levels must be positive");
    if (!(spec.spacing > 0.0)) throw InvalidInput("ball family: spacing must be positive");
    auto inside = [&](const Vector& c) { return (c - dom.center).norm() < R * (1.0 - 1e-12) || (c - dom.center).norm() == 0.0; };

    if (spec.strategy == FamilyStrategy::DyadicGrid) {
        for (int k = 0; k < spec.levels; ++k) {
            double r = R / std::ldexp(1.0, k);
            std::vector<Vector> centers;
            grid_points(dom.center, r * spec.spacing, n, R, centers);
            for (const Vector& c : centers) {
                if (inside(c)) fam.balls.emplace_back(c, r);
            }
        }
    } else {
        Rng rng(spec.seed);
        const double rmin = R / std::ldexp(1.0, spec.levels - 1);
        for (int i = 0; i < spec.random_count; ++i) {
            Vector dir(n);
            double norm = 0.0;
            while (norm < 1e-12) {
                for (int d = 0; d < n; ++d) dir(d) = rng.normal();
                norm = dir.norm();
            }
            Vector c = dom.center + (R * std::pow(rng.uniform(), 1.0 / n) / norm) * dir;
            double r = std::exp(rng.uniform(std::log(rmin), std::log(R)));
            if (!inside(c)) continue;
            fam.balls.emplace_back(c, r);
        }
    }
    if (spec.focus && spec.focus_levels > 0) {
        if (spec.focus->size() != n) throw InvalidInput("ball family: focus dimension mismatch");
        if (spec.focus_step < 1) throw InvalidInput("ball family: focus_step must be positive");
        for (int j = 1; j <= spec.focus_levels; ++j) {
            int k = spec.levels - 1 + j * spec.focus_step;
            double r = R / std::ldexp(1.0, k);
            double step = r * spec.spacing;
            std::vector<Vector> centers;
            grid_points(*spec.focus, step, n, 2.0 * r, centers);
            for (const Vector& c : centers) {
                if ((c - *spec.focus).norm() <= 2.0 * r && inside(c)) fam.balls.emplace_back(c, r);
            }
        }
    }
    if (fam.balls.empty()) throw InvalidInput("ball family '" + spec.id + "' is empty");
    std::set<double, std::greater<double>> radii;
    for (const Ball& b : fam.balls) radii.insert(b.radius);
    fam.radii.assign(radii.begin(), radii.end());
    return fam;
}

double mean_oscillation(const ScalarField& f, const Ball& ball, const Ball& domain, const QuadratureSpec& q) {
    BallRule rule = ball_rule(ball, q, f.singular_points);
    const int m = rule.size();
    std::vector<double> vals(m);
    for (int i = 0; i < m; ++i) vals[i] = f(rule.point(i));
    // shifted accumulation keeps constants exact
    const double ref = vals[0];
    double acc = 0.0;
    for (int i = 0; i < m; ++i) acc += rule.weights(i) * (vals[i] - ref);
    const double mean = ref + acc;
    double osc = 0.0;
    for (int i = 0; i < m; ++i) {
        if (domain.contains(rule.point(i))) osc += rule.weights(i) * std::abs(vals[i] - mean);
    }
    return osc;
}

double mean_oscillation(const SymmetricField& h, const Ball& ball, const Ball& domain, const QuadratureSpec& q) {
    BallRule rule = ball_rule(ball, q, h.singular_points);
    const int m = rule.size();
    std::vector<Matrix> vals(m);
    for (int i = 0; i < m; ++i) vals[i] = h(rule.point(i));
    const Matrix ref = vals[0];
    Matrix acc = Matrix::Zero(ref.rows(), ref.cols());
    for (int i = 0; i < m; ++i) acc += rule.weights(i) * (vals[i] - ref);
    acc = (0.5 * (acc + acc.transpose())).eval();
    const Matrix mean = ref + acc;
    double osc = 0.0;
    for (int i = 0; i < m; ++i) {
        if (domain.contains(rule.point(i))) osc += rule.weights(i) * spectral_norm_sym(vals[i] - mean);
    }
    return osc;
}

namespace {

template <class Field>
BmoEstimate bmo_generic(const Field& f, const BallFamily& fam, const QuadratureSpec& q, int threads) {
    if (fam.balls.empty()) throw InvalidInput("bmo: empty ball family");
    BmoEstimate est;
    est.quadrature = q;
    est.ball_count = fam.balls.size();
    est.per_ball.assign(fam.balls.size(), 0.0);
    parallel_for(fam.balls.size(), threads, [&](std::size_t i) {
        est.per_ball[i] = mean_oscillation(f, fam.balls[i], fam.spec.domain, q);
    });
    std::size_t best = 0;
    for (std::size_t i = 1; i < est.per_ball.size(); ++i) {
        if (est.per_ball[i] > est.per_ball[best]) best = i;
    }
    est.value = est.per_ball[best];
    est.attaining_ball = fam.balls[best];
    return est;
}

}  // namespace

BmoEstimate bmo_scalar(const ScalarField& f, const BallFamily& fam, const QuadratureSpec& q, int threads) {
    return bmo_generic(f, fam, q, threads);
}

BmoEstimate bmo_matrix(const SymmetricField& h, const BallFamily& fam, const QuadratureSpec& q, int threads) {
    return bmo_generic(h, fam, q, threads);
}

double local_integrability_exponent(const ScalarWeightField& w, const Vector& point, double s, double radius,
                                    const QuadratureSpec& q) {
    const int n = w.dim;
    auto mass = [&](double d) {
        Ball b(point, d);
        BallRule rule = ball_rule(b, q, {});
        double acc = 0.0;
        for (int i = 0; i < rule.size(); ++i) acc += rule.weights(i) * std::pow(w(rule.point(i)), s);
        return std::pow(d, n) * acc;
    };
    double d = radius;
    double prev = mass(d);
    double expo = 0.0;
    for (int k = 0; k < 3; ++k) {
        d *= 0.5;
        double cur = mass(d);
        if (!(cur > 0.0) || !std::isfinite(cur) || !std::isfinite(prev)) return -std::numeric_limits<double>::infinity();
        expo = std::log2(prev / cur);
        prev = cur;
    }
    return expo;
}

MomentResult power_moment(const ScalarWeightField& w, const Ball& ball, double s, const QuadratureSpec& q) {
    MomentResult out;
    for (const Vector& sp : w.singular_points) {
        if ((sp - ball.center).norm() <= ball.radius) {
            double expo = local_integrability_exponent(w, sp, s, 0.25 * ball.radius, q);
            if (expo <= kDivergenceExponent) {
                out.divergent = true;
                out.value = std::numeric_limits<double>::infinity();
                return out;
            }
        }
    }
    BallRule rule = ball_rule(ball, q, w.singular_points);
    const int m = rule.size();
    std::vector<double> vals(m);
    for (int i = 0; i < m; ++i) vals[i] = std::pow(w(rule.point(i)), s);
    const double ref = vals[0];
    double acc = 0.0;
    for (int i = 0; i < m; ++i) acc += rule.weights(i) * (vals[i] - ref);
    out.value = ref + acc;
    if (!std::isfinite(out.value) || out.value > kOverflowGuard) {
        out.divergent = true;
        out.value = std::numeric_limits<double>::infinity();
    }
    return out;
}

MomentResult ap_product(const ScalarWeightField& w, double p, const Ball& ball, const QuadratureSpec& q) {
    if (!(p > 1.0)) throw InvalidInput("muckenhoupt: p must lie in (1, inf)");
    const double pp = p / (p - 1.0);
    MomentResult plus = power_moment(w, ball, p, q);
    MomentResult minus = power_moment(w, ball, -pp, q);
    MomentResult out;
    if (plus.divergent || minus.divergent) {
        out.divergent = true;
        out.value = std::numeric_limits<double>::infinity();
        return out;
    }
    out.value = std::pow(plus.value, 1.0 / p) * std::pow(minus.value, 1.0 / pp);
    if (!std::isfinite(out.value) || out.value > kOverflowGuard) {
        out.divergent = true;
        out.value = std::numeric_limits<double>::infinity();
    }
    return out;
}

ApEstimate muckenhoupt_ap(const ScalarWeightField& w, double p, const BallFamily& fam, const QuadratureSpec& q,
                          int threads) {
    if (fam.balls.empty()) throw InvalidInput("muckenhoupt: empty ball family");
    ApEstimate est;
    est.ball_count = fam.balls.size();
    std::vector<MomentResult> res(fam.balls.size());
    parallel_for(fam.balls.size(), threads, [&](std::size_t i) { res[i] = ap_product(w, p, fam.balls[i], q); });
    est.per_ball.resize(res.size());
    for (std::size_t i = 0; i < res.size(); ++i) {
        est.per_ball[i] = res[i].value;
        if (res[i].divergent) {
            if (!est.divergent) est.divergent_ball = fam.balls[i];
            est.divergent = true;
            continue;
        }
        if (!est.attaining_ball || res[i].value > est.value) {
            est.value = res[i].value;
            est.attaining_ball = fam.balls[i];
        }
    }
    return est;
}

namespace {

BallFamily local_family(const Ball& b, int levels) {
    BallFamilySpec spec;
    spec.domain = b;
    spec.levels = levels;
    spec.id = "local";
    return make_family(spec);
}

void finish_small(SmallReport& r, std::optional<double> c3) {
    double denom = r.q * r.bmo;
    r.ratio = denom > 0.0 ? r.lhs / denom : (r.lhs > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    r.c3 = c3;
    if (c3) {
        r.rhs_bound = *c3 * denom;
        r.holds = r.lhs <= *r.rhs_bound * (1.0 + 1e-9) + 1e-14;
    }
}

}  // namespace

SmallReport prop_small_check(const WeightField& m, const Ball& b, double q, const QuadratureSpec& quad,
                             int family_levels, std::optional<double> c3) {
    if (!(q >= 1.0)) throw InvalidInput("prop_small_check: q must be at least 1");
    SmallReport r;
    r.q = q;
    r.bmo = bmo_matrix(log_field(m), local_family(b, family_levels), quad).value;
    SpdMatrix mb = log_mean_matrix(m, b, quad);
    BallRule rule = ball_rule(b, quad, m.singular_points);
    double acc = 0.0;
    for (int i = 0; i < rule.size(); ++i) {
        double rel = spectral_norm_sym(m(rule.point(i)).matrix() - mb.matrix()) / mb.norm();
        acc += rule.weights(i) * std::pow(rel, q);
    }
    r.lhs = std::pow(acc, 1.0 / q);
    finish_small(r, c3);
    return r;
}

SmallReport prop_small_check(const ScalarWeightField& w, const Ball& b, double q, const QuadratureSpec& quad,
                             int family_levels, std::optional<double> c3) {
    if (!(q >= 1.0)) throw InvalidInput("prop_small_check: q must be at least 1");
    SmallReport r;
    r.q = q;
    r.bmo = bmo_scalar(log_field(w), local_family(b, family_levels), quad).value;
    double wb = log_mean_scalar(w, b, quad);
    BallRule rule = ball_rule(b, quad, w.singular_points);
    double acc = 0.0;
    for (int i = 0; i < rule.size(); ++i) {
        double rel = std::abs(w(rule.point(i)) - wb) / wb;
        acc += rule.weights(i) * std::pow(rel, q);
    }
    r.lhs = std::pow(acc, 1.0 / q);
    finish_small(r, c3);
    return r;
}

ScalarSmallReport small_scalar_checks(const ScalarWeightField& w, const Ball& b, double s, const QuadratureSpec& q,
                                      double gamma, int family_levels) {
    if (!(s >= 1.0)) throw InvalidInput("small_scalar_checks: s must be at least 1");
    ScalarSmallReport r;
    r.s = s;
    r.gamma = gamma;
    r.bmo = bmo_scalar(log_field(w), local_family(b, family_levels), q).value;
    r.applicable = r.bmo <= gamma / s;
    r.log_mean = log_mean_scalar(w, b, q);

    auto item = [](MomentResult m, double power, double bound) {
        ScalarSmallItem it;
        it.bound = bound;
        it.divergent = m.divergent;
        if (m.divergent) {
            it.lhs = std::numeric_limits<double>::infinity();
            it.holds = false;
            it.margin = -std::numeric_limits<double>::infinity();
            return it;
        }
        it.lhs = std::pow(m.value, 1.0 / power);
        it.margin = bound - it.lhs;
        it.holds = it.lhs <= bound * (1.0 + 1e-12);
        return it;
    };
    r.positive = item(power_moment(w, b, s, q), s, 2.0 * r.log_mean);
    r.negative = item(power_moment(w, b, -s, q), s, 2.0 / r.log_mean);
    if (s > 1.0) {
        MomentResult prod = ap_product(w, s, b, q);
        r.ap = item(prod, 1.0, 4.0);
    } else {
        r.ap.holds = true;
        r.ap.bound = 4.0;
    }
    return r;
}

Calibration calibrate_constants(int dim, const std::vector<double>& eps_grid, const std::vector<double>& q_grid,
                                const QuadratureSpec& quad, int family_levels) {
    Calibration cal;
    cal.eps_grid = eps_grid;
    cal.q_grid = q_grid;
    Ball b = Ball::origin(dim, 1.0);
    double fail_level = std::numeric_limits<double>::infinity();
    double max_level = 0.0;
    for (double eps : eps_grid) {
        ScalarWeightField w = power_weight(dim, eps);
        for (double qq : q_grid) {
            SmallReport sr = prop_small_check(w, b, qq, quad, family_levels);
            if (std::isfinite(sr.ratio)) cal.c3 = std::max(cal.c3, sr.ratio);
            // gamma: smallest bmo*s at which any item fails, else the largest level tested
            ScalarSmallReport ss = small_scalar_checks(w, b, qq, quad, std::numeric_limits<double>::infinity(),
                                                       family_levels);
            double level_pm = qq * ss.bmo;
            double level_ap = qq > 1.0 ? ss.bmo / std::min(1.0 / qq, 1.0 - 1.0 / qq) : level_pm;
            max_level = std::max(max_level, std::min(level_pm, level_ap));
            if (!ss.positive.holds || !ss.negative.holds) fail_level = std::min(fail_level, level_pm);
            if (!ss.ap.holds) fail_level = std::min(fail_level, level_ap);
        }
    }
    cal.gamma = std::isfinite(fail_level) ? fail_level * (1.0 - 1e-9) : max_level;
    return cal;
}

}  // namespace degcz
