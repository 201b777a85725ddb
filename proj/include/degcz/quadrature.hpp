#pragma once

#include "degcz/core.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace degcz {

double unit_ball_volume(int n);

struct Ball {
    Vector center;
    double radius = 1.0;

    Ball() = default;
    Ball(Vector c, double r);
    static Ball origin(int n, double r) { return Ball(Vector::Zero(n), r); }
    static Ball at2(double cx, double cy, double r);

    int dim() const { return static_cast<int>(center.size()); }
    double volume() const;
    bool contains(const Vector& x) const;  // closed ball
    bool contains(const Ball& inner, double slack = 1e-12) const;
    Ball scaled(double factor) const { return Ball(center, radius * factor); }
};

enum class QuadratureScheme { PolarMidpoint, MonteCarlo };

struct QuadratureSpec {
    QuadratureScheme scheme = QuadratureScheme::PolarMidpoint;
    int radial = 2048;
    int angular = 64;
    int samples = 0;
    std::uint64_t seed = 0;

    static QuadratureSpec polar(int radial, int angular);
    static QuadratureSpec monte_carlo(int samples, std::uint64_t seed);

    void validate() const;
    int node_count(int dim) const;
    std::string describe() const;
};

// Nodes in columns; weights sum to one, so a weighted sum is a ball mean.
struct BallRule {
    Matrix points;
    Vector weights;
    int size() const { return static_cast<int>(weights.size()); }
    Vector point(int i) const { return points.col(i); }
};

// Distance below which a node counts as sitting on a singular point, relative to the radius.
inline constexpr double kSingularProximity = 1e-12;

BallRule ball_rule(const Ball& ball, const QuadratureSpec& spec,
                   const std::vector<Vector>& singular_points = {}, std::uint64_t stream = 0);

// Deterministic 64-bit mixing, used to derive per-task seeds.
std::uint64_t splitmix64(std::uint64_t x);

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    std::uint64_t next() { return engine_(); }
    double uniform();  // [0, 1)
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal();

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace degcz
