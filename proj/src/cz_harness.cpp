#include "degcz/cz_harness.hpp"

#include "degcz/config.hpp"
#include "degcz/nfunctions.hpp"
#include "degcz/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

namespace degcz {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

double point_value(const DiscreteField& u, int cell, const Point2& x) {
    const Mesh& m = *u.mesh();
    int v0 = m.cell(cell)[0];
    return u[v0] + u.gradient(cell).dot(x - m.vertex(v0));
}

double safe_ratio(double lhs, double rhs) {
    if (lhs == 0.0 && rhs == 0.0) return 0.0;
    if (rhs == 0.0) return std::numeric_limits<double>::infinity();
    return lhs / rhs;
}

double region_mean_u(const DiscreteField& u, const std::vector<RegionSample>& rule) {
    if (rule.empty()) throw GeometryError("region misses the mesh");
    // offset by the first sample so a constant field has exactly its value as mean
    const double ref = point_value(u, rule.front().cell, rule.front().x);
    double acc = 0.0, area = 0.0;
    for (const auto& s : rule) {
        acc += (point_value(u, s.cell, s.x) - ref) * s.weight;
        area += s.weight;
    }
    if (area == 0.0) throw GeometryError("region misses the mesh");
    return ref + acc / area;
}

void require_inside(const Mesh& mesh, const Ball& b, const char* what) {
    if (!mesh.geometry().contains(b, 1e-9)) {
        std::ostringstream msg;
        msg << what << ": ball B_" << b.radius << "(" << b.center.transpose() << ") leaves the domain "
            << mesh.geometry().describe();
        throw GeometryError(msg.str());
    }
}

double omega_at(const ScalarWeightField& w, const Point2& x, double h) {
    try {
        return w(Vector(x));
    } catch (const SingularPoint&) {
        Vector y = x;
        y(0) += 1e-12 * h;
        return w(y);
    }
}

Point2 data_at(const WeakProblem& prob, const Mesh& mesh, int cell) {
    return prob.data.at(cell, mesh.barycenter(cell));
}

}  // namespace

std::string format_ratio(const CzRow& row) {
    if (row.zero_case) return "0/0";
    return format_double(row.ratio);
}

WeakProblem example_problem(const MeyersExample& ex, double p) {
    if (ex.n != 2) throw InvalidInput("example_problem: the solver is two-dimensional");
    WeakProblem prob;
    prob.weight = example_weight(ex);
    prob.p = p;
    prob.dirichlet = [ex](const Point2& x) { return u_exact(ex, Vector(x)); };
    return prob;
}

CzRow cz_ratio(const DiscreteField& u, const WeakProblem& prob, const Ball& b0, double rho, CzGeometry geometry) {
    prob.validate();
    return cz_ratio(u, prob, evaluate_cell_weights(*u.mesh(), prob), b0, rho, geometry);
}

CzRow cz_ratio(const DiscreteField& u, const WeakProblem& prob, const CellWeights& w, const Ball& b0, double rho,
               CzGeometry geometry) {
    if (!(rho >= 1.0)) throw InvalidInput("cz_ratio: rho must be at least 1");
    const Mesh& mesh = *u.mesh();
    Ball inner = geometry == CzGeometry::Nonlinear ? b0.scaled(0.5) : b0;
    Ball outer = geometry == CzGeometry::Nonlinear ? b0.scaled(4.0) : b0.scaled(2.0);
    require_inside(mesh, outer, "cz_ratio");
    CzRow row;
    row.p = prob.p;
    row.rho = rho;
    row.ball = b0;
    row.level = mesh.refinement_level();
    row.lhs = weighted_lp_norm(u, w.omega, rho, inner);

    auto rule = region_rule(mesh, outer);
    double mean = 0.0, gacc = 0.0, area = 0.0;
    for (const auto& s : rule) {
        mean += u.gradient(s.cell).norm() * w.omega[s.cell] * s.weight;
        if (!prob.data.is_zero()) gacc += std::pow(data_at(prob, mesh, s.cell).norm() * w.omega[s.cell], rho) * s.weight;
        area += s.weight;
    }
    row.rhs = mean / area + std::pow(gacc / area, 1.0 / rho);
    if (row.lhs == 0.0 && row.rhs == 0.0) {
        row.zero_case = true;
        row.ratio = kNan;
    } else {
        row.ratio = safe_ratio(row.lhs, row.rhs);
    }
    return row;
}

InequalityRatio caccioppoli_check(const DiscreteField& u, const WeakProblem& prob, const Ball& b) {
    prob.validate();
    const Mesh& mesh = *u.mesh();
    Ball b2 = b.scaled(2.0);
    require_inside(mesh, b2, "caccioppoli_check");
    CellWeights w = evaluate_cell_weights(mesh, prob);
    const double p = prob.p;
    InequalityRatio out;

    auto rule = region_rule(mesh, b);
    double acc = 0.0, area = 0.0;
    for (const auto& s : rule) {
        acc += std::pow(u.gradient(s.cell).norm() * w.omega[s.cell], p) * s.weight;
        area += s.weight;
    }
    out.lhs = acc / area;

    auto rule2 = region_rule(mesh, b2);
    double m = region_mean_u(u, rule2);
    double osc = 0.0, gterm = 0.0, area2 = 0.0;
    for (const auto& s : rule2) {
        double wp = std::pow(w.omega[s.cell], p);
        osc += std::pow(std::abs(point_value(u, s.cell, s.x) - m) / b.radius, p) * wp * s.weight;
        if (!prob.data.is_zero()) gterm += std::pow(data_at(prob, mesh, s.cell).norm(), p) * wp * s.weight;
        area2 += s.weight;
    }
    out.rhs = (osc + gterm) / area2;
    out.ratio = safe_ratio(out.lhs, out.rhs);
    return out;
}

PoincareReport poincare_check(const DiscreteField& u, const ScalarWeightField& omega, const Ball& b, double p,
                              double theta, const QuadratureSpec& quad) {
    const Mesh& mesh = *u.mesh();
    const double n = mesh.dim();
    if (!(p > 1.0)) throw InvalidInput("poincare_check: p must exceed 1");
    if (!(theta > 0.0 && theta <= 1.0)) throw InvalidInput("poincare_check: theta must lie in (0, 1]");
    const double tp = theta * p;
    if (tp < std::max(1.0, n * p / (n + p)) - 1e-12) {
        throw InvalidInput("poincare_check: theta p must be at least max(1, np/(n+p))");
    }
    PoincareReport rep;
    auto rule = region_rule(mesh, b);
    double m = region_mean_u(u, rule);
    double lhs = 0.0, rhs = 0.0, area = 0.0;
    for (const auto& s : rule) {
        double om = omega_at(omega, s.x, mesh.diameter(s.cell));
        lhs += std::pow(std::abs(point_value(u, s.cell, s.x) - m) / b.radius * om, p) * s.weight;
        rhs += std::pow(u.gradient(s.cell).norm() * om, tp) * s.weight;
        area += s.weight;
    }
    rep.ratio.lhs = std::pow(lhs / area, 1.0 / p);
    rep.ratio.rhs = std::pow(rhs / area, 1.0 / tp);
    rep.ratio.ratio = safe_ratio(rep.ratio.lhs, rep.ratio.rhs);

    // weight condition on sub-balls of 2B
    BallFamilySpec fs;
    fs.domain = b.scaled(2.0);
    fs.levels = 3;
    fs.id = "poincare-2B";
    BallFamily fam = make_family(fs);
    for (const Ball& sub : fam.balls) {
        if (!fs.domain.contains(sub)) continue;
        MomentResult plus = power_moment(omega, sub, p, quad);
        double val;
        bool divergent = plus.divergent;
        if (tp == 1.0) {
            BallRule r = ball_rule(sub, quad, omega.singular_points);
            double sup = 0.0;
            for (int i = 0; i < r.size(); ++i) sup = std::max(sup, 1.0 / omega(r.point(i)));
            val = std::pow(plus.value, 1.0 / p) * sup;
        } else {
            double tpp = tp / (tp - 1.0);
            MomentResult minus = power_moment(omega, sub, -tpp, quad);
            divergent = divergent || minus.divergent;
            val = std::pow(plus.value, 1.0 / p) * std::pow(minus.value, 1.0 / tpp);
        }
        if (divergent || !std::isfinite(val)) {
            rep.c1_finite = false;
            rep.sampled_c1 = std::numeric_limits<double>::infinity();
            break;
        }
        rep.sampled_c1 = std::max(rep.sampled_c1, val);
    }
    return rep;
}

double cutoff(const Ball& b0, const Point2& x) {
    double t = (x - Point2(b0.center)).norm() / b0.radius;
    if (t <= 0.5) return 1.0;
    if (t >= 1.0) return 0.0;
    double s = 2.0 * (t - 0.5);
    return 1.0 - s * s * (3.0 - 2.0 * s);
}

LocalizedTriple build_localized(const DiscreteField& u, const WeakProblem& prob, const Ball& b0,
                                std::optional<Ball> b, const QuadratureSpec& quad, const SolverConfig& solver) {
    prob.validate();
    const MeshPtr& mesh = u.mesh();
    require_inside(*mesh, b0.scaled(2.0), "build_localized");
    LocalizedTriple t;
    t.b0 = b0;
    t.b = b ? *b : b0.scaled(0.5);
    t.p = prob.p;
    if (!b0.scaled(2.0).contains(t.b.scaled(4.0), 1e-12)) {
        throw InvalidInput("build_localized: the comparison ball must satisfy 4B inside 2B0");
    }
    const double pp = prob.p / (prob.p - 1.0);
    t.mean_u = region_mean_u(u, region_rule(*mesh, b0.scaled(2.0)));
    const int nv = mesh->num_vertices();
    Vector zeta(nv), z(nv);
    for (int v = 0; v < nv; ++v) {
        zeta(v) = cutoff(b0, mesh->vertex(v));
        z(v) = (u[v] - t.mean_u) * std::pow(zeta(v), pp);
    }
    t.zeta = DiscreteField(mesh, zeta);
    t.z = DiscreteField(mesh, z);
    t.g.resize(mesh->num_cells());
    for (int c = 0; c < mesh->num_cells(); ++c) {
        double zc = std::pow(cutoff(b0, mesh->barycenter(c)), pp);
        t.g[c] = zc * u.gradient(c) - t.z.gradient(c);
    }

    t.m_b = prob.frozen ? *prob.frozen : log_mean_matrix(prob.weight, t.b, quad);
    std::vector<bool> keep(mesh->num_cells());
    for (int c = 0; c < mesh->num_cells(); ++c) keep[c] = t.b.contains(Vector(mesh->barycenter(c)));
    t.sub = submesh(*mesh, keep, &t.vertex_map);
    Vector zs(t.sub->num_vertices());
    for (int v = 0; v < nv; ++v) {
        if (t.vertex_map[v] >= 0) zs(t.vertex_map[v]) = z(v);
    }
    t.z_sub = DiscreteField(t.sub, zs);

    WeakProblem frozen;
    frozen.p = prob.p;
    frozen.frozen = t.m_b;
    frozen.dirichlet_nodal.assign(zs.data(), zs.data() + zs.size());
    SolverConfig cfg = solver;
    cfg.initial_guess = zs;
    t.h = solve(frozen, t.sub, cfg).solution;
    return t;
}

ComparisonReport comparison_check(const LocalizedTriple& t, const DiscreteField& u, const WeakProblem& prob,
                                  double delta, double s, const QuadratureSpec& quad) {
    if (!(delta > 0.0 && delta < 1.0)) throw InvalidInput("comparison_check: delta must lie in (0, 1)");
    if (!(s >= 1.0)) throw InvalidInput("comparison_check: s must be at least 1");
    const double p = t.p;
    ComparisonReport rep;
    rep.delta = delta;
    rep.s = s;

    const Mesh& sub = *t.sub;
    Eigen::Matrix2d mb = t.m_b.matrix();
    double acc = 0.0, area = 0.0;
    for (int c = 0; c < sub.num_cells(); ++c) {
        Vector vh = v_map(p, Vector(mb * t.h.gradient(c)));
        Vector vz = v_map(p, Vector(mb * t.z_sub.gradient(c)));
        acc += (vh - vz).squaredNorm() * sub.area(c);
        area += sub.area(c);
    }
    rep.lhs = acc / area;

    if (!prob.frozen) {
        BallFamilySpec fs;
        fs.domain = t.b;
        fs.levels = 3;
        fs.id = "comparison-B";
        rep.bmo_log_m = bmo_matrix(log_field(prob.weight), make_family(fs), quad).value;
    }

    const Mesh& mesh = *u.mesh();
    CellWeights w = evaluate_cell_weights(mesh, prob);
    auto mean_s = [&](const Ball& region, auto&& integrand) {
        double a = 0.0, ar = 0.0;
        for (const auto& smp : region_rule(mesh, region)) {
            a += std::pow(integrand(smp), s) * smp.weight;
            ar += smp.weight;
        }
        return std::pow(a / ar, 1.0 / s);
    };
    double zterm = mean_s(t.b, [&](const RegionSample& smp) {
        return std::pow(t.z.gradient(smp.cell).norm() * w.omega[smp.cell], p);
    });
    rep.oscillation_term = (rep.bmo_log_m * rep.bmo_log_m + delta) * zterm;
    const double dp = std::pow(delta, 1.0 - p);
    const double R = t.b0.radius;
    Ball b4 = t.b.scaled(4.0);
    rep.u_term = dp * mean_s(b4, [&](const RegionSample& smp) {
        return std::pow(std::abs(point_value(u, smp.cell, smp.x) - t.mean_u) / R * w.omega[smp.cell], p);
    });
    if (!prob.data.is_zero()) {
        rep.g_term = dp * mean_s(b4, [&](const RegionSample& smp) {
            return std::pow(cutoff(t.b0, smp.x) * data_at(prob, mesh, smp.cell).norm() * w.omega[smp.cell], p);
        });
    }
    rep.constant = safe_ratio(rep.lhs, rep.oscillation_term + rep.u_term + rep.g_term);
    return rep;
}

namespace {

struct CellIndex {
    std::vector<int> order;  // cells sorted by barycenter x
    std::vector<double> xs;

    explicit CellIndex(const Mesh& mesh) : order(mesh.num_cells()) {
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            return mesh.barycenter(a)(0) < mesh.barycenter(b)(0);
        });
        xs.resize(order.size());
        for (std::size_t i = 0; i < order.size(); ++i) xs[i] = mesh.barycenter(order[i])(0);
    }

    void members(const Mesh& mesh, const Ball& b, std::vector<int>& out) const {
        out.clear();
        auto lo = std::lower_bound(xs.begin(), xs.end(), b.center(0) - b.radius);
        auto hi = std::upper_bound(xs.begin(), xs.end(), b.center(0) + b.radius);
        for (auto it = lo; it != hi; ++it) {
            int c = order[it - xs.begin()];
            if ((mesh.barycenter(c) - Point2(b.center)).norm() <= b.radius) out.push_back(c);
        }
    }
};

std::vector<double> maximal_impl(const Mesh& mesh, const std::vector<double>& f, double rho, const BallFamily& fam,
                                 bool sharp) {
    if (static_cast<int>(f.size()) != mesh.num_cells()) throw InvalidInput("maximal: one value per cell expected");
    if (!(rho >= 1.0)) throw InvalidInput("maximal: rho must be at least 1");
    CellIndex index(mesh);
    std::vector<double> out(f.size(), 0.0);
    std::vector<int> mem;
    for (const Ball& b : fam.balls) {
        index.members(mesh, b, mem);
        if (mem.empty()) continue;
        double area = 0.0, mean = 0.0;
        for (int c : mem) {
            area += mesh.area(c);
            mean += f[c] * mesh.area(c);
        }
        mean /= area;
        double acc = 0.0;
        for (int c : mem) {
            double v = sharp ? std::abs(f[c] - mean) : std::abs(f[c]);
            acc += std::pow(v, rho) * mesh.area(c);
        }
        double val = std::pow(acc / area, 1.0 / rho);
        for (int c : mem) out[c] = std::max(out[c], val);
    }
    return out;
}

double cell_norm(const Mesh& mesh, const std::vector<double>& f, double q) {
    double acc = 0.0;
    for (int c = 0; c < mesh.num_cells(); ++c) acc += std::pow(std::abs(f[c]), q) * mesh.area(c);
    return std::pow(acc / mesh.total_area(), 1.0 / q);
}

}  // namespace

std::vector<double> maximal(const Mesh& mesh, const std::vector<double>& f, double rho, const BallFamily& fam) {
    return maximal_impl(mesh, f, rho, fam, false);
}

std::vector<double> sharp_maximal(const Mesh& mesh, const std::vector<double>& f, double rho,
                                  const BallFamily& fam) {
    return maximal_impl(mesh, f, rho, fam, true);
}

BallFamily centered_family(const Mesh& mesh, double r_max, int per_octave, double min_factor) {
    if (!(r_max > 0.0) || per_octave < 1 || !(min_factor > 0.0)) throw InvalidInput("centered_family: bad parameters");
    BallFamily fam;
    fam.id = "centered";
    fam.spec.id = fam.id;
    const double step = std::pow(2.0, -1.0 / per_octave);
    for (int c = 0; c < mesh.num_cells(); ++c) {
        double rmin = min_factor * mesh.diameter(c);
        for (double r = r_max; r >= rmin; r *= step) {
            fam.balls.emplace_back(Vector(mesh.barycenter(c)), r);
            fam.radii.push_back(r);
        }
    }
    return fam;
}

std::vector<FeffermanSteinRow> fefferman_stein(const Mesh& mesh, const std::vector<double>& f,
                                               const std::vector<double>& qs, const BallFamily& fam) {
    std::vector<double> sharp = sharp_maximal(mesh, f, 1.0, fam);
    std::vector<FeffermanSteinRow> rows;
    for (double q : qs) {
        if (!(q >= 1.0)) throw InvalidInput("fefferman_stein: q must be at least 1");
        FeffermanSteinRow r;
        r.q = q;
        r.f_norm = cell_norm(mesh, f, q);
        r.sharp_norm = cell_norm(mesh, sharp, q);
        r.constant = safe_ratio(r.f_norm, q * r.sharp_norm);
        rows.push_back(r);
    }
    return rows;
}

double weighted_h1_error(const DiscreteField& uh, const MeyersExample& ex, int depth) {
    const Mesh& mesh = *uh.mesh();
    double acc = 0.0, area = 0.0;
    for (int c = 0; c < mesh.num_cells(); ++c) {
        const auto& t = mesh.cell(c);
        Point2 a = mesh.vertex(t[0]), b = mesh.vertex(t[1]), d = mesh.vertex(t[2]);
        std::vector<std::array<Point2, 3>> tris = {{a, b, d}};
        for (int k = 0; k < depth; ++k) {
            std::vector<std::array<Point2, 3>> next;
            for (const auto& tr : tris) {
                Point2 ab = 0.5 * (tr[0] + tr[1]), bc = 0.5 * (tr[1] + tr[2]), ca = 0.5 * (tr[2] + tr[0]);
                next.push_back({tr[0], ab, ca});
                next.push_back({ab, tr[1], bc});
                next.push_back({ca, bc, tr[2]});
                next.push_back({ab, bc, ca});
            }
            tris.swap(next);
        }
        const double w = mesh.area(c) / tris.size();
        const Point2 gh = uh.gradient(c);
        for (const auto& tr : tris) {
            Vector x = (tr[0] + tr[1] + tr[2]) / 3.0;
            SpdMatrix m = weight_exact(ex, x);
            double e = (gh - Point2(grad_u_exact(ex, x))).norm() * m.norm();
            acc += e * e * w;
        }
        area += mesh.area(c);
    }
    return std::sqrt(acc / area);
}

std::vector<ConvergenceLevel> convergence_study(const MeyersExample& ex, double p, const GradedDiskOptions& base,
                                                int levels, const SolverConfig& solver) {
    if (levels < 1) throw InvalidInput("convergence_study: levels must be positive");
    WeakProblem prob = example_problem(ex, p);
    std::vector<ConvergenceLevel> out;
    for (int l = 0; l < levels; ++l) {
        MeshPtr mesh = graded_disk_mesh(refine_graded(base, l));
        SolveResult sol = solve(prob, mesh, solver);
        ConvergenceLevel lv;
        lv.level = l;
        lv.vertices = mesh->num_vertices();
        lv.h_max = mesh->max_diameter();
        lv.error = weighted_h1_error(sol.solution, ex);
        lv.residual = sol.residual;
        lv.factor = out.empty() ? 0.0 : safe_ratio(out.back().error, lv.error);
        out.push_back(lv);
    }
    return out;
}

std::vector<ConvergenceLevel> residual_study(const MeyersExample& ex, double p, const GradedDiskOptions& base,
                                             int levels) {
    if (levels < 1) throw InvalidInput("residual_study: levels must be positive");
    WeakProblem prob = example_problem(ex, p);
    std::vector<ConvergenceLevel> out;
    for (int l = 0; l < levels; ++l) {
        MeshPtr mesh = graded_disk_mesh(refine_graded(base, l));
        DiscreteField ui = DiscreteField::interpolate(mesh, [&](const Point2& x) {
            return x.norm() == 0.0 ? 0.0 : u_exact(ex, Vector(x));
        });
        ConvergenceLevel lv;
        lv.level = l;
        lv.vertices = mesh->num_vertices();
        lv.h_max = mesh->max_diameter();
        CellWeights w = evaluate_cell_weights(*mesh, prob);
        lv.residual = weak_residual(prob, ui, w).norm;
        // the gap to the Galerkin solution with the same boundary values; for p = 2 this is the
        // residual measured in the dual energy norm
        WeakProblem nodal = prob;
        nodal.dirichlet_nodal.assign(ui.values().data(), ui.values().data() + ui.values().size());
        DiscreteField uh = solve(nodal, mesh).solution;
        double acc = 0.0;
        for (int c = 0; c < mesh->num_cells(); ++c) {
            Point2 d = w.m[c] * (ui.gradient(c) - uh.gradient(c));
            acc += mesh->area(c) * d.squaredNorm();
        }
        lv.error = std::sqrt(acc / mesh->total_area());
        lv.factor = out.empty() ? 0.0 : safe_ratio(out.back().error, lv.error);
        out.push_back(lv);
    }
    return out;
}

const std::vector<std::string>& CzReport::columns() {
    static const std::vector<std::string> cols = {
        "experiment_id", "variant", "n", "eps", "p", "rho", "ball_cx", "ball_cy", "ball_r", "level",
        "lhs", "rhs", "ratio", "bmo_logM", "lambda_cond", "classification"};
    return cols;
}

std::string CzReport::csv_body() const {
    std::ostringstream out;
    const auto& cols = columns();
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << "\n";
    for (const CzRow& r : rows) {
        out << r.experiment_id << "," << r.variant << "," << r.n << "," << format_double(r.eps) << ","
            << format_double(r.p) << "," << format_double(r.rho) << "," << format_double(r.ball.center(0)) << ","
            << format_double(r.ball.center(1)) << "," << format_double(r.ball.radius) << "," << r.level << ","
            << format_double(r.lhs) << "," << format_double(r.rhs) << "," << format_ratio(r) << ","
            << format_double(r.bmo_log_m) << "," << format_double(r.lambda_cond) << "," << r.classification
            << "\n";
    }
    return out.str();
}

void CzReport::write_csv(const std::string& path, const std::vector<std::string>& header_lines) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInput("cannot write " + path);
    for (const auto& h : header_lines) out << "# " << h << "\n";
    out << csv_body();
}

void SweepSpec::validate() const {
    if (n != 2) throw InvalidInput("sweep: the discrete harness is two-dimensional");
    if (levels < 3) throw InvalidInput("sweep: at least three refinement levels are needed");
    if (eps_grid.empty()) throw InvalidInput("sweep: empty eps grid");
    for (double e : eps_grid) MeyersExample(variant, n, e).validate();
    if (rho_grid.empty() && rho_factors.empty()) throw InvalidInput("sweep: empty rho grid");
    for (double e : eps_grid) {
        for (double r : rhos(e)) {
            if (!(r >= 1.0)) throw InvalidInput("sweep: rho must be at least 1");
        }
    }
    if (!(p > 1.0)) throw InvalidInput("sweep: p must exceed 1");
    if (!(growth_threshold > 1.0)) throw InvalidInput("sweep: growth threshold must exceed 1");
    if (!(dead_zone >= 0.0 && dead_zone < 1.0)) throw InvalidInput("sweep: dead zone must lie in [0, 1)");
    if (!(inner_shrink > 0.0 && inner_shrink <= 1.0)) throw InvalidInput("sweep: inner_shrink must lie in (0, 1]");
    if (threads < 1) throw InvalidInput("sweep: threads must be positive");
    quad.validate();
}

std::vector<double> SweepSpec::rhos(double eps) const {
    if (!rho_grid.empty()) return rho_grid;
    std::vector<double> out;
    for (double f : rho_factors) out.push_back(f * n / eps);
    return out;
}

GradedDiskOptions SweepSpec::mesh_at(int level) const {
    GradedDiskOptions o = mesh;
    o.inner_radius = mesh.inner_radius * std::pow(inner_shrink, level);
    o.level = level;
    return o;
}

CzReport sweep(const SweepSpec& spec) {
    spec.validate();
    CzReport report;
    const std::size_t ne = spec.eps_grid.size();
    const std::size_t nl = static_cast<std::size_t>(spec.levels);

    struct Task {
        std::vector<CzRow> rows;
        std::string failure;
    };
    std::vector<Task> tasks(ne * nl);
    std::vector<double> bmo(ne), lambda(ne);
    parallel_for(ne, spec.threads, [&](std::size_t i) {
        MeyersExample ex(spec.variant, spec.n, spec.eps_grid[i]);
        BallFamilySpec fs;
        fs.domain = spec.geometry == CzGeometry::Nonlinear ? spec.b0.scaled(4.0) : spec.b0.scaled(2.0);
        fs.levels = 3;
        fs.id = "sweep-outer";
        bmo[i] = bmo_matrix(log_field(example_weight(ex)), make_family(fs), spec.quad).value;
        lambda[i] = 1.0 / ex.theta();
    });
    parallel_for(tasks.size(), spec.threads, [&](std::size_t k) {
        const std::size_t ie = k / nl;
        const int level = static_cast<int>(k % nl);
        const double eps = spec.eps_grid[ie];
        Task& task = tasks[k];
        try {
            MeyersExample ex(spec.variant, spec.n, eps);
            WeakProblem prob = example_problem(ex, spec.p);
            MeshPtr mesh = graded_disk_mesh(spec.mesh_at(level));
            SolveResult sol = solve(prob, mesh);
            CellWeights w = evaluate_cell_weights(*mesh, prob);
            for (double rho : spec.rhos(eps)) {
                CzRow row = cz_ratio(sol.solution, prob, w, spec.b0, rho, spec.geometry);
                row.experiment_id = spec.experiment_id;
                row.variant = to_string(spec.variant);
                row.n = spec.n;
                row.eps = eps;
                row.level = level;
                row.bmo_log_m = bmo[ie];
                row.lambda_cond = lambda[ie];
                task.rows.push_back(row);
            }
        } catch (const Error& e) {
            std::ostringstream msg;
            msg << "eps=" << format_double(eps) << " level=" << level << ": " << e.what();
            task.failure = msg.str();
        }
    });

    for (std::size_t ie = 0; ie < ne; ++ie) {
        const double eps = spec.eps_grid[ie];
        PhaseBoundary pb;
        pb.eps = eps;
        pb.analytic = spec.n / eps;
        bool any_failure = false;
        for (std::size_t l = 0; l < nl; ++l) {
            if (!tasks[ie * nl + l].failure.empty()) {
                any_failure = true;
                report.failures.push_back(tasks[ie * nl + l].failure);
            }
        }
        const auto rhos = spec.rhos(eps);
        for (std::size_t ir = 0; ir < rhos.size(); ++ir) {
            const double rho = rhos[ir];
            std::vector<CzRow*> series;
            for (std::size_t l = 0; l < nl; ++l) {
                auto& rows = tasks[ie * nl + l].rows;
                if (ir < rows.size()) series.push_back(&rows[ir]);
            }
            std::string cls;
            double growth = kNan;
            if (any_failure || series.size() != nl) {
                cls = "failed";
                pb.failed.push_back(rho);
            } else {
                growth = safe_ratio(series.back()->ratio, series.front()->ratio);
                bool dead = std::abs(rho * eps / spec.n - 1.0) < spec.dead_zone - 1e-9;
                if (dead) {
                    cls = "dead-zone";
                    pb.excluded.push_back(rho);
                } else if (growth >= spec.growth_threshold) {
                    cls = "diverging";
                    pb.diverging.push_back(rho);
                } else {
                    cls = "bounded";
                    pb.bounded.push_back(rho);
                }
            }
            pb.growth.push_back(growth);
            for (CzRow* r : series) r->classification = cls;
        }
        if (!pb.bounded.empty() && !pb.diverging.empty()) {
            double b = *std::max_element(pb.bounded.begin(), pb.bounded.end());
            double d = *std::min_element(pb.diverging.begin(), pb.diverging.end());
            if (b < d) pb.boundary = 0.5 * (b + d);
        }
        report.boundaries.push_back(pb);
    }
    for (auto& t : tasks) {
        for (auto& r : t.rows) report.rows.push_back(r);
    }
    std::stable_sort(report.rows.begin(), report.rows.end(), [](const CzRow& a, const CzRow& b) {
        if (a.eps != b.eps) return a.eps < b.eps;
        if (a.rho != b.rho) return a.rho < b.rho;
        if (a.ball_id != b.ball_id) return a.ball_id < b.ball_id;
        return a.level < b.level;
    });
    return report;
}

}  // namespace degcz
