#include "degcz/pde_solver.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <cmath>
#include <limits>
#include <sstream>

namespace degcz {

DiscreteField::DiscreteField(MeshPtr mesh, Vector values) : mesh_(std::move(mesh)), values_(std::move(values)) {
    if (!mesh_) throw InvalidInput("DiscreteField: null mesh");
    if (values_.size() != mesh_->num_vertices()) throw InvalidInput("DiscreteField: value count != vertex count");
}

DiscreteField DiscreteField::zero(MeshPtr mesh) {
    Vector v = Vector::Zero(mesh->num_vertices());
    return DiscreteField(std::move(mesh), std::move(v));
}

DiscreteField DiscreteField::interpolate(MeshPtr mesh, const std::function<double(const Point2&)>& f) {
    Vector v(mesh->num_vertices());
    for (int i = 0; i < mesh->num_vertices(); ++i) v(i) = f(mesh->vertex(i));
    return DiscreteField(std::move(mesh), std::move(v));
}

Point2 DiscreteField::gradient(int cell) const {
    const auto& t = mesh_->cell(cell);
    const auto& g = mesh_->hat_gradients(cell);
    // differences against vertex 0, so constants have an exactly zero gradient
    const double u0 = values_(t[0]);
    return g.col(1) * (values_(t[1]) - u0) + g.col(2) * (values_(t[2]) - u0);
}

double DiscreteField::barycenter_value(int cell) const {
    const auto& t = mesh_->cell(cell);
    return (values_(t[0]) + values_(t[1]) + values_(t[2])) / 3.0;
}

Point2 VectorData::at(int cell, const Point2& x) const {
    if (!per_cell.empty()) return per_cell.at(cell);
    if (analytic) return analytic(x);
    return Point2::Zero();
}

void WeakProblem::validate() const {
    if (!(p > 1.0) || !std::isfinite(p)) throw InvalidInput("problem: p must lie in (1, inf)");
    if (!frozen && !weight.evaluator) throw InvalidInput("problem: no weight");
    if (!frozen && weight.dim != 2) throw InvalidInput("problem: the solver is two-dimensional");
    if (frozen && frozen->dim() != 2) throw InvalidInput("problem: frozen matrix must be 2x2");
    if (!frozen && weight.condition_bound && !std::isfinite(*weight.condition_bound)) {
        throw InvalidInput("problem: weight condition bound must be finite");
    }
    if (!dirichlet && dirichlet_nodal.empty()) throw InvalidInput("problem: no Dirichlet data");
}

void SolverConfig::validate() const {
    if (!(tolerance > 0.0)) throw InvalidInput("solver: tolerance must be positive");
    if (!(regularization_eps >= 0.0)) throw InvalidInput("solver: regularization_eps must be nonnegative");
    if (max_iterations < 1) throw InvalidInput("solver: max_iterations must be positive");
    if (!(backtrack > 0.0 && backtrack < 1.0)) throw InvalidInput("solver: backtrack factor must lie in (0, 1)");
    if (!(armijo > 0.0 && armijo < 0.5)) throw InvalidInput("solver: armijo constant must lie in (0, 1/2)");
}

CellWeights evaluate_cell_weights(const Mesh& mesh, const WeakProblem& prob) {
    CellWeights w;
    const int nc = mesh.num_cells();
    w.m.resize(nc);
    w.omega.resize(nc);
    if (prob.frozen) {
        Eigen::Matrix2d m = prob.frozen->matrix();
        double om = prob.frozen->norm();
        for (int c = 0; c < nc; ++c) {
            w.m[c] = m;
            w.omega[c] = om;
        }
        return w;
    }
    for (int c = 0; c < nc; ++c) {
        Vector x = mesh.barycenter(c);
        SpdMatrix val = SpdMatrix::identity(2);
        try {
            val = prob.weight(x);
        } catch (const SingularPoint&) {
            Vector shifted = x;
            shifted(0) += 1e-12 * mesh.diameter(c);
            shifted(1) += 0.5e-12 * mesh.diameter(c);
            std::ostringstream msg;
            msg << "weight singular at barycenter of cell " << c << "; evaluation point shifted by 1e-12 h";
            warn(msg.str());
            val = prob.weight(shifted);
        }
        w.m[c] = val.matrix();
        w.omega[c] = val.norm();
    }
    return w;
}

Point2 flux(const Eigen::Matrix2d& m, double p, const Point2& xi) {
    Point2 y = m * xi;
    double r = y.norm();
    if (r == 0.0) return Point2::Zero();
    return std::pow(r, p - 2.0) * (m * y);
}

namespace {

struct Assembly {
    const Mesh& mesh;
    const WeakProblem& prob;
    const CellWeights& w;
    std::vector<Point2> data_flux;  // calA(x, G) per cell
    std::vector<double> data_energy_coeff;

    Assembly(const Mesh& m, const WeakProblem& pr, const CellWeights& cw) : mesh(m), prob(pr), w(cw) {
        const int nc = mesh.num_cells();
        data_flux.assign(nc, Point2::Zero());
        if (prob.data.is_zero()) return;
        for (int c = 0; c < nc; ++c) data_flux[c] = flux(w.m[c], prob.p, prob.data.at(c, mesh.barycenter(c)));
    }

    Point2 cell_grad(const Vector& u, int c) const {
        const auto& t = mesh.cell(c);
        const auto& g = mesh.hat_gradients(c);
        return g.col(0) * u(t[0]) + g.col(1) * u(t[1]) + g.col(2) * u(t[2]);
    }

    // regularized energy; eps < 0 means the exact functional
    double energy(const Vector& u, double eps) const {
        const double p = prob.p;
        double total = 0.0;
        for (int c = 0; c < mesh.num_cells(); ++c) {
            Point2 xi = cell_grad(u, c);
            Point2 y = w.m[c] * xi;
            double e;
            if (p == 2.0) {
                e = 0.5 * y.squaredNorm();
            } else if (eps > 0.0) {
                e = std::pow(y.squaredNorm() + eps * eps, 0.5 * p) / p;
            } else {
                e = std::pow(y.norm(), p) / p;
            }
            e -= data_flux[c].dot(xi);
            total += e * mesh.area(c);
        }
        return total;
    }

    Vector residual(const Vector& u, double eps) const {
        const double p = prob.p;
        Vector r = Vector::Zero(mesh.num_vertices());
        for (int c = 0; c < mesh.num_cells(); ++c) {
            Point2 xi = cell_grad(u, c);
            Point2 y = w.m[c] * xi;
            Point2 f;
            if (p == 2.0 || eps <= 0.0) {
                f = flux(w.m[c], p, xi);
            } else {
                f = std::pow(y.squaredNorm() + eps * eps, 0.5 * (p - 2.0)) * (w.m[c] * y);
            }
            f -= data_flux[c];
            const auto& t = mesh.cell(c);
            const auto& g = mesh.hat_gradients(c);
            for (int k = 0; k < 3; ++k) r(t[k]) += f.dot(g.col(k)) * mesh.area(c);
        }
        for (int v = 0; v < mesh.num_vertices(); ++v) {
            if (mesh.is_boundary(v)) r(v) = 0.0;
        }
        return r;
    }

    double scaled_norm(const Vector& r) const {
        double acc = 0.0;
        const auto& patch = mesh.patch_area();
        for (int v = 0; v < mesh.num_vertices(); ++v) {
            if (!mesh.is_boundary(v)) acc += r(v) * r(v) / patch[v];
        }
        return std::sqrt(acc);
    }

    // Hessian restricted to interior unknowns
    Eigen::SparseMatrix<double> hessian(const Vector& u, double eps, const std::vector<int>& dof) const {
        const double p = prob.p;
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(9 * mesh.num_cells());
        for (int c = 0; c < mesh.num_cells(); ++c) {
            const Eigen::Matrix2d& m = w.m[c];
            Eigen::Matrix2d k;
            if (p == 2.0) {
                k = m * m;
            } else {
                Point2 y = m * cell_grad(u, c);
                double s = y.squaredNorm() + eps * eps;
                Point2 my = m * y;
                k = std::pow(s, 0.5 * (p - 2.0)) * (m * m) + (p - 2.0) * std::pow(s, 0.5 * (p - 4.0)) * (my * my.transpose());
            }
            const auto& t = mesh.cell(c);
            const auto& g = mesh.hat_gradients(c);
            Eigen::Matrix3d local = g.transpose() * k * g * mesh.area(c);
            for (int a = 0; a < 3; ++a) {
                int ia = dof[t[a]];
                if (ia < 0) continue;
                for (int b = 0; b < 3; ++b) {
                    int ib = dof[t[b]];
                    if (ib < 0) continue;
                    trip.emplace_back(ia, ib, local(a, b));
                }
            }
        }
        int n = 0;
        for (int d : dof) n = std::max(n, d + 1);
        Eigen::SparseMatrix<double> h(n, n);
        h.setFromTriplets(trip.begin(), trip.end());
        return h;
    }
};

Vector boundary_values(const Mesh& mesh, const WeakProblem& prob) {
    Vector u = Vector::Zero(mesh.num_vertices());
    if (!prob.dirichlet_nodal.empty() && static_cast<int>(prob.dirichlet_nodal.size()) != mesh.num_vertices()) {
        throw InvalidInput("problem: nodal Dirichlet data size mismatch");
    }
    for (int v = 0; v < mesh.num_vertices(); ++v) {
        if (!mesh.is_boundary(v)) continue;
        u(v) = prob.dirichlet_nodal.empty() ? prob.dirichlet(mesh.vertex(v)) : prob.dirichlet_nodal[v];
    }
    return u;
}

}  // namespace

double energy(const WeakProblem& prob, const DiscreteField& u, const CellWeights& w) {
    Assembly as(*u.mesh(), prob, w);
    return as.energy(u.values(), -1.0);
}

double energy(const WeakProblem& prob, const DiscreteField& u) {
    prob.validate();
    return energy(prob, u, evaluate_cell_weights(*u.mesh(), prob));
}

ResidualResult weak_residual(const WeakProblem& prob, const DiscreteField& u, const CellWeights& w) {
    Assembly as(*u.mesh(), prob, w);
    ResidualResult out;
    out.per_vertex = as.residual(u.values(), -1.0);
    out.norm = as.scaled_norm(out.per_vertex);
    return out;
}

ResidualResult weak_residual(const WeakProblem& prob, const DiscreteField& u) {
    prob.validate();
    return weak_residual(prob, u, evaluate_cell_weights(*u.mesh(), prob));
}

SolveResult solve(const WeakProblem& prob, MeshPtr mesh, const SolverConfig& cfg) {
    prob.validate();
    cfg.validate();
    if (!mesh) throw InvalidInput("solve: null mesh");
    const Mesh& msh = *mesh;
    CellWeights w = evaluate_cell_weights(msh, prob);
    Assembly as(msh, prob, w);

    std::vector<int> dof(msh.num_vertices(), -1);
    int ndof = 0;
    for (int v = 0; v < msh.num_vertices(); ++v) {
        if (!msh.is_boundary(v)) dof[v] = ndof++;
    }
    Vector u = boundary_values(msh, prob);
    if (cfg.initial_guess) {
        if (cfg.initial_guess->size() != msh.num_vertices()) throw InvalidInput("solve: initial guess size mismatch");
        for (int v = 0; v < msh.num_vertices(); ++v) {
            if (dof[v] >= 0) u(v) = (*cfg.initial_guess)(v);
        }
    }
    SolveResult result;
    if (ndof == 0) {
        result.solution = DiscreteField(mesh, u);
        result.residual = 0.0;
        result.energy = as.energy(u, -1.0);
        result.trace.push_back({0, 0.0, result.energy, 0.0, 0.0});
        return result;
    }

    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
    auto newton_direction = [&](const Vector& grad_full, double eps, bool first) {
        Eigen::SparseMatrix<double> h = as.hessian(u, eps, dof);
        if (first) ldlt.analyzePattern(h);
        ldlt.factorize(h);
        if (ldlt.info() != Eigen::Success) throw InternalError("solve: Hessian factorization failed");
        if ((ldlt.vectorD().array() <= 0.0).any()) throw InternalError("solve: Hessian is not positive definite");
        Vector g(ndof);
        for (int v = 0; v < msh.num_vertices(); ++v) {
            if (dof[v] >= 0) g(dof[v]) = grad_full(v);
        }
        Vector d = ldlt.solve(-g);
        Vector full = Vector::Zero(msh.num_vertices());
        for (int v = 0; v < msh.num_vertices(); ++v) {
            if (dof[v] >= 0) full(v) = d(dof[v]);
        }
        return full;
    };

    int iteration = 0;
    if (prob.p == 2.0) {
        // one linear solve: the gradient at u is affine in u
        Vector g = as.residual(u, -1.0);
        Vector d = newton_direction(g, 0.0, true);
        u += d;
        double res = as.scaled_norm(as.residual(u, -1.0));
        double en = as.energy(u, -1.0);
        result.trace.push_back({++iteration, 0.0, en, res, 1.0});
        result.solution = DiscreteField(mesh, u);
        result.residual = res;
        result.energy = en;
        if (res > cfg.tolerance) {
            std::ostringstream msg;
            msg << "solve: linear residual " << res << " above tolerance " << cfg.tolerance << " (round-off)";
            warn(msg.str());
        }
        return result;
    }

    std::vector<double> schedule;
    for (double e : cfg.continuation) {
        if (e > cfg.regularization_eps) schedule.push_back(e);
    }
    if (cfg.regularization_eps > 0.0) schedule.push_back(cfg.regularization_eps);
    if (schedule.empty()) schedule.push_back(1e-8);

    bool first = true;
    auto run_stage = [&](double eps) {
        for (int it = 0; it < cfg.max_iterations; ++it) {
            Vector g = as.residual(u, eps);
            double gnorm = as.scaled_norm(g);
            if (gnorm <= 0.1 * cfg.tolerance) return;
            Vector d = newton_direction(g, eps, first);
            first = false;
            double j0 = as.energy(u, eps);
            double slope = g.dot(d);
            if (!(slope < 0.0)) throw InternalError("solve: Newton direction is not a descent direction");
            if (-slope <= 1e-15 * std::max(1.0, std::abs(j0))) return;  // round-off floor
            double t = 1.0;
            int bt = 0;
            double j1 = as.energy(u + t * d, eps);
            while (!(j1 <= j0 + cfg.armijo * t * slope)) {
                if (++bt > cfg.max_backtracks) {
                    if (-slope <= 1e-10 * std::max(1.0, std::abs(j0))) return;
                    std::ostringstream msg;
                    msg << "solve: line search failed at eps " << eps << " after " << cfg.max_backtracks << " backtracks";
                    throw NonConvergence(msg.str(), result.trace);
                }
                t *= cfg.backtrack;
                j1 = as.energy(u + t * d, eps);
            }
            u += t * d;
            double res0 = as.scaled_norm(as.residual(u, -1.0));
            result.trace.push_back({++iteration, eps, j1, res0, t});
        }
    };

    for (double eps : schedule) run_stage(eps);
    double res = as.scaled_norm(as.residual(u, -1.0));
    double eps = schedule.back();
    while (res > cfg.tolerance && eps > 1e-14) {
        eps *= 0.1;
        run_stage(eps);
        res = as.scaled_norm(as.residual(u, -1.0));
    }
    if (res > cfg.tolerance) {
        std::ostringstream msg;
        msg << "solve: residual " << res << " above tolerance " << cfg.tolerance;
        throw NonConvergence(msg.str(), result.trace);
    }
    result.solution = DiscreteField(mesh, u);
    result.residual = res;
    result.energy = as.energy(u, -1.0);
    return result;
}

double weighted_lp_norm_cells(const Mesh& mesh, const std::vector<double>& cell_values, double rho,
                              const Ball& region) {
    if (!(rho >= 1.0)) throw InvalidInput("weighted_lp_norm: rho must be at least 1");
    auto rule = region_rule(mesh, region);
    double acc = 0.0, area = 0.0;
    for (const auto& s : rule) {
        acc += std::pow(cell_values[s.cell], rho) * s.weight;
        area += s.weight;
    }
    if (area == 0.0) throw GeometryError("weighted_lp_norm: region misses the mesh");
    return std::pow(acc / area, 1.0 / rho);
}

double weighted_lp_norm(const DiscreteField& u, const std::vector<double>& omega, double rho, const Ball& region) {
    const Mesh& mesh = *u.mesh();
    std::vector<double> vals(mesh.num_cells());
    for (int c = 0; c < mesh.num_cells(); ++c) vals[c] = u.gradient(c).norm() * omega[c];
    return weighted_lp_norm_cells(mesh, vals, rho, region);
}

double weighted_lp_norm(const DiscreteField& u, const ScalarWeightField& w, double rho, const Ball& region) {
    const Mesh& mesh = *u.mesh();
    std::vector<double> omega(mesh.num_cells());
    for (int c = 0; c < mesh.num_cells(); ++c) omega[c] = w(Vector(mesh.barycenter(c)));
    return weighted_lp_norm(u, omega, rho, region);
}

}  // namespace degcz
