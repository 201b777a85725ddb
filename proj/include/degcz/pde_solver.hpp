#pragma once

#include "degcz/mesh.hpp"
#include "degcz/weight_algebra.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace degcz {

class DiscreteField {
public:
    DiscreteField() = default;
    DiscreteField(MeshPtr mesh, Vector values);
    static DiscreteField zero(MeshPtr mesh);
    static DiscreteField interpolate(MeshPtr mesh, const std::function<double(const Point2&)>& f);

    const MeshPtr& mesh() const { return mesh_; }
    const Vector& values() const { return values_; }
    Vector& values() { return values_; }
    double operator[](int v) const { return values_(v); }
    Point2 gradient(int cell) const;
    double barycenter_value(int cell) const;

private:
    MeshPtr mesh_;
    Vector values_;
};

// Vector datum G: analytic, per cell, or zero when both are empty.
struct VectorData {
    std::function<Point2(const Point2&)> analytic;
    std::vector<Point2> per_cell;
    bool is_zero() const { return !analytic && per_cell.empty(); }
    Point2 at(int cell, const Point2& x) const;
};

struct WeakProblem {
    WeightField weight;
    double p = 2.0;
    VectorData data;
    std::function<double(const Point2&)> dirichlet;
    std::vector<double> dirichlet_nodal;  // overrides `dirichlet` when non-empty
    std::optional<SpdMatrix> frozen;      // constant weight M_B

    void validate() const;
};

// Weight values at cell barycenters; a singular barycenter is nudged by 1e-12 h with a warning.
struct CellWeights {
    std::vector<Eigen::Matrix2d> m;
    std::vector<double> omega;
};
CellWeights evaluate_cell_weights(const Mesh& mesh, const WeakProblem& prob);

struct SolverConfig {
    double tolerance = 1e-8;
    int max_iterations = 100;  // per continuation stage
    double armijo = 1e-4;
    double backtrack = 0.5;
    int max_backtracks = 40;
    double regularization_eps = 0.0;
    std::vector<double> continuation = {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8};
    std::optional<Vector> initial_guess;

    void validate() const;
};

struct TraceEntry {
    int iteration = 0;
    double eps = 0.0;
    double energy = 0.0;
    double residual = 0.0;
    double step = 0.0;
};

class NonConvergence : public Error {
public:
    NonConvergence(const std::string& msg, std::vector<TraceEntry> trace)
        : Error(msg), trace_(std::move(trace)) {}
    const std::vector<TraceEntry>& trace() const { return trace_; }

private:
    std::vector<TraceEntry> trace_;
};

struct SolveResult {
    DiscreteField solution;
    std::vector<TraceEntry> trace;
    double residual = 0.0;
    double energy = 0.0;
};

// One-point quadrature of (1/p)|M grad u|^p - |MG|^{p-2} (MG).(M grad u).
double energy(const WeakProblem& prob, const DiscreteField& u);
double energy(const WeakProblem& prob, const DiscreteField& u, const CellWeights& w);

struct ResidualResult {
    double norm = 0.0;    // sqrt(sum_i r_i^2 / |patch_i|) over interior vertices
    Vector per_vertex;    // zero on boundary vertices
};
ResidualResult weak_residual(const WeakProblem& prob, const DiscreteField& u);
ResidualResult weak_residual(const WeakProblem& prob, const DiscreteField& u, const CellWeights& w);

SolveResult solve(const WeakProblem& prob, MeshPtr mesh, const SolverConfig& cfg = SolverConfig{});

// Integrals over region ∩ mesh via region_rule; omega is taken per cell at the barycenter.
double weighted_lp_norm(const DiscreteField& u, const ScalarWeightField& w, double rho, const Ball& region);
double weighted_lp_norm(const DiscreteField& u, const std::vector<double>& omega, double rho, const Ball& region);
double weighted_lp_norm_cells(const Mesh& mesh, const std::vector<double>& cell_values, double rho, const Ball& region);

// The flux M A(M xi) and the V map for a 2x2 matrix.
Point2 flux(const Eigen::Matrix2d& m, double p, const Point2& xi);

}  // namespace degcz
