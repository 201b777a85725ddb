#include "degcz/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace degcz {

double unit_ball_volume(int n) {
    if (n < 1) throw InvalidInput("unit_ball_volume: dimension must be positive");
    return std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
}

Ball::Ball(Vector c, double r) : center(std::move(c)), radius(r) {
    if (!(r > 0.0) || !std::isfinite(r)) throw InvalidInput("Ball: radius must be positive");
    if (center.size() == 0) throw InvalidInput("Ball: empty center");
}

Ball Ball::at2(double cx, double cy, double r) {
    Vector c(2);
    c << cx, cy;
    return Ball(c, r);
}

double Ball::volume() const { return unit_ball_volume(dim()) * std::pow(radius, dim()); }

bool Ball::contains(const Vector& x) const { return (x - center).norm() <= radius; }

bool Ball::contains(const Ball& inner, double slack) const {
    return (inner.center - center).norm() + inner.radius <= radius * (1.0 + slack);
}

QuadratureSpec QuadratureSpec::polar(int radial, int angular) {
    QuadratureSpec s;
    s.scheme = QuadratureScheme::PolarMidpoint;
    s.radial = radial;
    s.angular = angular;
    s.validate();
    return s;
}

QuadratureSpec QuadratureSpec::monte_carlo(int samples, std::uint64_t seed) {
    QuadratureSpec s;
    s.scheme = QuadratureScheme::MonteCarlo;
    s.samples = samples;
    s.seed = seed;
    s.validate();
    return s;
}

void QuadratureSpec::validate() const {
    if (scheme == QuadratureScheme::PolarMidpoint) {
        if (radial < 1 || angular < 4 || radial * angular < 16) {
            throw InvalidInput("QuadratureSpec: polar resolution must be at least 16 nodes");
        }
    } else if (samples < 16) {
        throw InvalidInput("QuadratureSpec: monte-carlo needs at least 16 samples");
    }
}

int QuadratureSpec::node_count(int dim) const {
    if (scheme == QuadratureScheme::MonteCarlo) return samples;
    if (dim == 1) return 2 * radial;
    if (dim == 2) return radial * angular;
    return radial * angular * std::max(1, angular / 2);
}

std::string QuadratureSpec::describe() const {
    std::ostringstream out;
    if (scheme == QuadratureScheme::PolarMidpoint) {
        out << "polar-midpoint " << radial << "x" << angular;
    } else {
        out << "monte-carlo " << samples << " seed " << seed;
    }
    return out.str();
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double Rng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = 0.0;
    while (u1 <= 0.0) u1 = uniform();
    double u2 = uniform();
    double mag = std::sqrt(-2.0 * std::log(u1));
    spare_ = mag * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return mag * std::cos(2.0 * std::numbers::pi * u2);
}

namespace {

bool near_singular(const Vector& x, const std::vector<Vector>& singular, double tol) {
    for (const Vector& s : singular) {
        if ((x - s).norm() < tol) return true;
    }
    return false;
}

// Midpoint rule in (r, angles); the measure factor r^{n-1} goes into the weights.
BallRule polar_rule(const Ball& ball, const QuadratureSpec& spec, double angle_shift) {
    const int n = ball.dim();
    const int nr = spec.radial;
    const int na = spec.angular;
    const double R = ball.radius;
    BallRule rule;
    if (n == 1) {
        rule.points.resize(1, 2 * nr);
        rule.weights.resize(2 * nr);
        for (int i = 0; i < 2 * nr; ++i) {
            rule.points(0, i) = ball.center(0) - R + R * (i + 0.5) / nr;
            rule.weights(i) = 1.0;
        }
    } else if (n == 2) {
        rule.points.resize(2, nr * na);
        rule.weights.resize(nr * na);
        const double dphi = 2.0 * std::numbers::pi / na;
        std::vector<double> c(na), s(na);
        for (int j = 0; j < na; ++j) {
            double phi = (j + 0.5 + angle_shift) * dphi;
            c[j] = std::cos(phi);
            s[j] = std::sin(phi);
        }
        int k = 0;
        for (int i = 0; i < nr; ++i) {
            double r = R * (i + 0.5) / nr;
            for (int j = 0; j < na; ++j, ++k) {
                rule.points(0, k) = ball.center(0) + r * c[j];
                rule.points(1, k) = ball.center(1) + r * s[j];
                rule.weights(k) = r;
            }
        }
    } else if (n == 3) {
        const int nt = std::max(1, na / 2);
        rule.points.resize(3, nr * na * nt);
        rule.weights.resize(nr * na * nt);
        const double dphi = 2.0 * std::numbers::pi / na;
        int k = 0;
        for (int i = 0; i < nr; ++i) {
            double r = R * (i + 0.5) / nr;
            for (int t = 0; t < nt; ++t) {
                // midpoints in cos(polar angle) give equal-area bands
                double mu = -1.0 + 2.0 * (t + 0.5) / nt;
                double st = std::sqrt(std::max(0.0, 1.0 - mu * mu));
                for (int j = 0; j < na; ++j, ++k) {
                    double phi = (j + 0.5 + angle_shift) * dphi;
                    rule.points(0, k) = ball.center(0) + r * st * std::cos(phi);
                    rule.points(1, k) = ball.center(1) + r * st * std::sin(phi);
                    rule.points(2, k) = ball.center(2) + r * mu;
                    rule.weights(k) = r * r;
                }
            }
        }
    } else {
        throw InvalidInput("ball_rule: polar-midpoint supports dimensions 1 to 3");
    }
    rule.weights /= rule.weights.sum();
    return rule;
}

Vector sample_in_ball(const Ball& ball, Rng& rng) {
    const int n = ball.dim();
    Vector dir(n);
    double norm = 0.0;
    while (norm < 1e-12) {
        for (int d = 0; d < n; ++d) dir(d) = rng.normal();
        norm = dir.norm();
    }
    double r = ball.radius * std::pow(rng.uniform(), 1.0 / n);
    return ball.center + (r / norm) * dir;
}

}  // namespace

BallRule ball_rule(const Ball& ball, const QuadratureSpec& spec,
                   const std::vector<Vector>& singular_points, std::uint64_t stream) {
    spec.validate();
    const double tol = kSingularProximity * ball.radius;
    if (spec.scheme == QuadratureScheme::PolarMidpoint) {
        // A node can only coincide with an off-center singular point; rotate the rings if so.
        for (int attempt = 0; attempt < 8; ++attempt) {
            BallRule rule = polar_rule(ball, spec, 0.25 * attempt / 8.0);
            bool clash = false;
            if (!singular_points.empty()) {
                for (int i = 0; i < rule.size() && !clash; ++i) {
                    clash = near_singular(rule.points.col(i), singular_points, tol);
                }
            }
            if (!clash) return rule;
        }
        throw QuadratureFailure("ball_rule: could not place polar nodes away from singular points");
    }
    const int n = ball.dim();
    BallRule rule;
    rule.points.resize(n, spec.samples);
    rule.weights = Vector::Constant(spec.samples, 1.0 / spec.samples);
    Rng rng(splitmix64(spec.seed) ^ splitmix64(stream + 0x51ed2701ULL));
    for (int i = 0; i < spec.samples; ++i) {
        Vector x = sample_in_ball(ball, rng);
        int tries = 0;
        while (near_singular(x, singular_points, tol)) {
            if (++tries > 100) {
                throw QuadratureFailure("ball_rule: monte-carlo resampling exhausted near a singular point");
            }
            x = sample_in_ball(ball, rng);
        }
        rule.points.col(i) = x;
    }
    return rule;
}

}  // namespace degcz
