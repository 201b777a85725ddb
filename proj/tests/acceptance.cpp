// Acceptance runner: one PASS/FAIL line per criterion.
#include "degcz/config.hpp"
#include "degcz/cz_harness.hpp"
#include "degcz/exact_examples.hpp"
#include "degcz/nfunctions.hpp"
#include "degcz/seminorms.hpp"
#include "degcz/weight_registry.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace degcz;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v, int prec = 4) {
    std::ostringstream o;
    o.precision(prec);
    o << v;
    return o.str();
}

Matrix random_orthogonal(Rng& rng, int n) {
    Matrix g(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) g(i, j) = rng.normal();
    Eigen::HouseholderQR<Matrix> qr(g);
    return qr.householderQ() * Matrix::Identity(n, n);
}

Vector random_unit(Rng& rng, int n) {
    Vector v(n);
    do {
        for (int i = 0; i < n; ++i) v(i) = rng.normal();
    } while (v.norm() < 1e-8);
    return v / v.norm();
}

// 1. exact-solution identities
Outcome criterion1(std::uint64_t seed) {
    Rng rng(seed);
    double worst_identity = 0.0, worst_flux = 0.0, worst_direct = 0.0;
    for (Variant v : {Variant::Plain, Variant::Degenerate}) {
        for (int n : {2, 3}) {
            for (double eps : {0.1, 0.25, 0.5}) {
                MeyersExample ex(v, n, eps);
                worst_identity = std::max(worst_identity, std::abs(divergence_identity(ex)));
                worst_direct = std::max(worst_direct, std::abs(divergence_coefficient_direct(ex)));
                for (int k = 0; k < 50; ++k) {
                    Vector x = random_unit(rng, n) * std::exp(rng.uniform(std::log(1e-3), std::log(2.0)));
                    Vector direct = weighted_maps(weight_exact(ex, x), 2.0, grad_u_exact(ex, x)).cal_a;
                    Vector closed = flux_closed_form(ex, x);
                    worst_flux = std::max(worst_flux, (direct - closed).norm() / closed.norm());
                }
            }
        }
    }
    Outcome o;
    o.pass = worst_identity <= 1e-14 && worst_flux <= 1e-10;
    o.detail = "max |identity| = " + fmt(worst_identity) + ", max flux rel. error = " + fmt(worst_flux) +
               " (product-rule coefficient, reported: max " + fmt(worst_direct) + ")";
    return o;
}

// 2. solver convergence on graded disks
Outcome criterion2() {
    MeyersExample ex(Variant::Plain, 2, 0.25);
    GradedDiskOptions base;
    base.segments = 16;
    base.ratio = 0.7;
    base.inner_radius = 1e-2;
    auto study = convergence_study(ex, 2.0, base, 4);
    Outcome o;
    o.pass = true;
    std::ostringstream d;
    for (const auto& lv : study) {
        d << "L" << lv.level << ": V=" << lv.vertices << " err=" << fmt(lv.error);
        if (lv.level > 0) {
            d << " x" << fmt(lv.factor, 3);
            if (!(lv.factor >= 1.5)) o.pass = false;
        }
        if (lv.vertices > 50000) o.pass = false;
        d << "; ";
    }
    o.detail = d.str();
    return o;
}

// 3. sharpness threshold
Outcome criterion3(int threads) {
    SweepSpec spec;
    spec.experiment_id = "acceptance-3";
    spec.threads = threads;
    CzReport rep = sweep(spec);
    Outcome o;
    o.pass = rep.failures.empty();
    std::ostringstream d;
    for (const auto& pb : rep.boundaries) {
        d << "eps=" << pb.eps << ": bounded{";
        for (double r : pb.bounded) d << fmt(r) << " ";
        d << "} diverging{";
        for (double r : pb.diverging) d << fmt(r) << " ";
        d << "} boundary=" << (pb.boundary ? fmt(*pb.boundary) : "none") << "; ";
        auto has = [](const std::vector<double>& v, double x) {
            for (double y : v)
                if (std::abs(y - x) < 1e-9) return true;
            return false;
        };
        if (std::abs(pb.eps - 0.5) < 1e-12) {
            for (double r : {2.0, 3.0, 3.6})
                if (!has(pb.bounded, r)) o.pass = false;
            for (double r : {4.4, 5.0})
                if (!has(pb.diverging, r)) o.pass = false;
        } else if (std::abs(pb.eps - 0.25) < 1e-12) {
            if (!pb.boundary || *pb.boundary < 7.2 || *pb.boundary > 8.8) o.pass = false;
        }
    }
    for (const auto& f : rep.failures) d << "failure: " << f << "; ";
    o.detail = d.str();
    return o;
}

// 4. degenerate weight: bmo(M) grows, bmo(log M) stays small
Outcome criterion4(int threads) {
    Outcome o;
    o.pass = true;
    std::ostringstream d;
    const QuadratureSpec q = QuadratureSpec::polar(128, 32);
    for (double eps : {0.1, 0.25, 0.5}) {
        MeyersExample ex(Variant::Degenerate, 2, eps);
        WeightField m = example_weight(ex);
        BallFamilySpec base;
        base.domain = Ball::origin(2, 1.0);
        base.levels = 3;
        base.focus = Vector::Zero(2);
        base.focus_step = 12;
        base.focus_levels = 1;
        base.id = "coarse";
        BallFamilySpec fine = base;
        fine.focus_levels = 3;
        fine.id = "fine";
        BallFamily fc = make_family(base), ff = make_family(fine);
        double bm_c = bmo_matrix(as_symmetric_field(m), fc, q, threads).value;
        double bm_f = bmo_matrix(as_symmetric_field(m), ff, q, threads).value;
        double bl_c = bmo_matrix(log_field(m), fc, q, threads).value;
        double bl_f = bmo_matrix(log_field(m), ff, q, threads).value;
        double growth = bm_f / bm_c;
        bool ok = growth >= 2.0 && bl_c <= 1.5 * eps + 0.01 && bl_f <= 1.5 * eps + 0.01;
        o.pass = o.pass && ok;
        d << "eps=" << eps << ": bmo(M) x" << fmt(growth, 3) << ", bmo(log M) " << fmt(bl_c) << "/" << fmt(bl_f)
          << " (bound " << fmt(1.5 * eps + 0.01) << "); ";
    }
    o.detail = d.str();
    return o;
}

// 5. weight-algebra identities
Outcome criterion5(std::uint64_t seed) {
    Rng rng(seed);
    double worst_rt = 0.0;
    for (int k = 0; k < 10000; ++k) {
        int n = 2 + (k % 2);
        Matrix qm = random_orthogonal(rng, n);
        Vector lam(n);
        for (int i = 0; i < n; ++i) lam(i) = std::exp(3.0 * rng.normal());
        Matrix m = qm * lam.asDiagonal() * qm.transpose();
        m = (0.5 * (m + m.transpose())).eval();
        SpdMatrix s(m);
        Matrix back = spd_exp(spd_log(s)).matrix();
        worst_rt = std::max(worst_rt, (back - m).norm() / m.norm());
    }
    double worst_rank1 = 0.0;
    for (int k = 0; k < 1000; ++k) {
        int n = 2 + (k % 2);
        Vector xh = random_unit(rng, n);
        double a = std::exp(rng.uniform(std::log(1e-3), std::log(50.0))) * (k % 3 == 0 ? -0.99 / 50.0 : 1.0);
        Matrix m = Matrix::Identity(n, n) + a * xh * xh.transpose();
        Matrix expect = std::log1p(a) * xh * xh.transpose();
        worst_rank1 = std::max(worst_rank1, (spd_log(SpdMatrix(m)) - expect).norm() / std::max(1.0, std::abs(std::log1p(a))));
    }
    // duality holds node by node, so a coarse rule suffices
    const QuadratureSpec qd = QuadratureSpec::polar(256, 32);
    const QuadratureSpec q;
    double worst_dual = 0.0;
    std::vector<WeightField> fields = {example_weight(MeyersExample(Variant::Degenerate, 2, 0.25)),
                                       log_normal_weight(2, 0.4, 3, seed), power_radial_weight(2, -0.2, 0.6)};
    std::vector<Ball> balls = {Ball::origin(2, 1.0), Ball::at2(0.3, -0.2, 0.4), Ball::at2(0.05, 0.0, 0.1)};
    for (const auto& f : fields) {
        for (const auto& b : balls) {
            SpdMatrix mb = log_mean_matrix(f, b, qd);
            SpdMatrix mi = log_mean_matrix(inverse_field(f), b, qd);
            worst_dual = std::max(worst_dual, (mb.matrix() * mi.matrix() - Matrix::Identity(2, 2)).norm());
            ScalarWeightField w = scalar_weight(f);
            double ls = log_mean_scalar(w, b, qd) * log_mean_scalar(reciprocal(w), b, qd);
            worst_dual = std::max(worst_dual, std::abs(ls - 1.0));
        }
    }
    double worst_scalar = 0.0;
    for (int n : {2, 3}) {
        // the 3-D default rule has 4M nodes, so it gets a smaller grid
        const std::vector<double> eps_grid = n == 2 ? std::vector<double>{0.1, 0.3, 0.5, 1.0} : std::vector<double>{0.1, 0.3, 1.0};
        const std::vector<double> r_grid = n == 2 ? std::vector<double>{0.25, 1.0, 3.0} : std::vector<double>{1.0, 3.0};
        for (double eps : eps_grid) {
            for (double r : r_grid) {
                double got = log_mean_scalar(power_weight(n, eps), Ball::origin(n, r), q);
                double want = std::pow(r, eps) * std::exp(-eps / n);
                worst_scalar = std::max(worst_scalar, std::abs(got - want) / want);
            }
        }
    }
    Outcome o;
    o.pass = worst_rt <= 1e-9 && worst_rank1 <= 1e-12 && worst_dual <= 1e-10 && worst_scalar <= 1e-6;
    o.detail = "exp/log " + fmt(worst_rt) + ", rank-one " + fmt(worst_rank1) + ", inversion duality " +
               fmt(worst_dual) + ", |x|^eps log-mean " + fmt(worst_scalar);
    return o;
}

// 6. N-function property suite
Outcome criterion6(std::uint64_t seed) {
    NfunSuiteConfig cfg;
    cfg.seed = seed;
    NfunSuiteReport rep = run_nfun_suite(cfg);
    Outcome o;
    long viol = rep.asserted_violations();
    std::ostringstream d;
    d << "asserted violations " << viol << "; hammer c:";
    bool hammer_ok = true;
    for (double p : cfg.ps) {
        double c = rep.hammer_constant(p);
        d << " p=" << p << ":" << fmt(c, 5);
        if (!(c <= 10.0)) hammer_ok = false;
        if (p == 2.0 && c != 1.0) hammer_ok = false;
    }
    const NfunCaseRow* dual = nullptr;
    double dual_err = 0.0;
    for (double p : cfg.ps) {
        dual = rep.find(p, "conjugate-duality");
        if (dual) dual_err = std::max(dual_err, dual->max_ratio);
    }
    d << "; duality max error " << fmt(dual_err);
    o.pass = viol == 0 && hammer_ok && dual_err <= 1e-8;
    o.detail = d.str();
    return o;
}

// 7. seminorm estimators
Outcome criterion7(int threads) {
    const QuadratureSpec q = QuadratureSpec::polar(128, 32);
    BallFamilySpec fs;
    fs.domain = Ball::origin(2, 1.0);
    fs.levels = 3;
    BallFamily fam = make_family(fs);
    std::ostringstream d;
    bool ok = true;

    // scalar <= 2 matrix
    std::vector<WeightField> fields = {example_weight(MeyersExample(Variant::Plain, 2, 0.25)),
                                       example_weight(MeyersExample(Variant::Degenerate, 2, 0.25)),
                                       log_normal_weight(2, 0.5, 3, 7), rank_one_radial_weight(2, 0.4),
                                       power_radial_weight(2, 0.3, 0.5)};
    double worst = 0.0;
    for (const auto& f : fields) {
        double bm = bmo_matrix(log_field(f), fam, q, threads).value;
        double bs = bmo_scalar(log_field(scalar_weight(f)), fam, q, threads).value;
        if (bs > 2.0 * bm) ok = false;
        worst = std::max(worst, bm > 0 ? bs / bm : 0.0);
    }
    d << "scalar/matrix max " << fmt(worst) << "; ";

    // scale invariance: log(tM) = log t + log M, and dilation of the field with the family
    WeightField f = fields[2];
    double b1 = bmo_matrix(log_field(f), fam, q, threads).value;
    double b2 = bmo_matrix(log_field(scaled_field(f, 7.5)), fam, q, threads).value;
    const double lam = 3.0;
    SymmetricField dil = log_field(f);
    auto base = dil.evaluator;
    dil.evaluator = [base, lam](const Vector& x) { return base(x / lam); };
    BallFamilySpec big = fs;
    big.domain = Ball::origin(2, lam);
    double b3 = bmo_matrix(dil, make_family(big), q, threads).value;
    double scale_err = std::max(std::abs(b1 - b2), std::abs(b1 - b3));
    if (scale_err > 1e-12) ok = false;
    d << "scale invariance " << fmt(scale_err) << "; ";

    ApEstimate one = muckenhoupt_ap(constant_scalar_weight(2, 1.0), 2.0, fam, q, threads);
    if (one.value != 1.0 || one.divergent) ok = false;
    d << "A_2(1) = " << fmt(one.value, 17) << "; ";

    ApEstimate a12 = muckenhoupt_ap(power_weight(2, 1.2), 2.0, fam, q, threads);
    if (!a12.divergent) ok = false;
    d << "A_2(|x|^1.2) " << (a12.divergent ? "divergent" : "finite") << "; ";

    ApEstimate a06 = muckenhoupt_ap(power_weight(2, 0.6), 2.0, fam, q, threads);
    BallFamilySpec finer = fs;
    finer.levels = 4;
    ApEstimate a06f = muckenhoupt_ap(power_weight(2, 0.6), 2.0, make_family(finer), q, threads);
    double change = std::abs(a06f.value / a06.value - 1.0);
    if (a06.divergent || a06f.divergent || change > 0.10) ok = false;
    d << "A_2(|x|^0.6) " << fmt(a06.value) << " -> " << fmt(a06f.value) << " (" << fmt(100 * change, 3) << "%)";
    return {ok, d.str()};
}

std::vector<Ball> random_balls(Rng& rng, int count) {
    std::vector<Ball> out;
    while (static_cast<int>(out.size()) < count) {
        double r = std::exp(rng.uniform(std::log(0.08), std::log(0.25)));
        Vector c = random_unit(rng, 2) * (1.0 - 2.0 * r) * std::sqrt(rng.uniform());
        out.emplace_back(c, r);
    }
    return out;
}

// 8. inequality-shape checks
Outcome criterion8(std::uint64_t seed) {
    MeyersExample ex(Variant::Plain, 2, 0.25);
    WeakProblem prob = example_problem(ex, 2.0);
    GradedDiskOptions base;
    base.segments = 32;
    base.ratio = 0.8;
    base.inner_radius = 1e-3;
    Rng rng(seed);
    std::vector<Ball> balls = random_balls(rng, 20);
    std::vector<std::vector<double>> cacc(2), poin(2);
    ScalarWeightField omega = scalar_weight(prob.weight);
    for (int l = 0; l < 2; ++l) {
        MeshPtr mesh = graded_disk_mesh(refine_graded(base, l));
        DiscreteField u = solve(prob, mesh).solution;
        for (const Ball& b : balls) {
            cacc[l].push_back(caccioppoli_check(u, prob, b).ratio);
            poin[l].push_back(poincare_check(u, omega, b, 2.0, 1.0).ratio.ratio);
        }
    }
    double worst_c = 0.0, worst_p = 0.0;
    for (std::size_t i = 0; i < balls.size(); ++i) {
        worst_c = std::max(worst_c, std::abs(cacc[1][i] / cacc[0][i] - 1.0));
        worst_p = std::max(worst_p, std::abs(poin[1][i] / poin[0][i] - 1.0));
    }
    // Fefferman-Stein on the gradient magnitude
    MeshPtr mesh = graded_disk_mesh(base);
    DiscreteField u = solve(prob, mesh).solution;
    std::vector<double> f(mesh->num_cells());
    double mean = 0.0;
    for (int c = 0; c < mesh->num_cells(); ++c) {
        f[c] = u.gradient(c).norm();
        mean += f[c] * mesh->area(c);
    }
    mean /= mesh->total_area();
    for (double& v : f) v -= mean;
    BallFamily fam = centered_family(*mesh, 1.0, 2, 1.0);
    auto rows = fefferman_stein(*mesh, f, {4.0, 8.0, 16.0}, fam);
    double cmin = rows[0].constant, cmax = rows[0].constant;
    for (const auto& r : rows) {
        cmin = std::min(cmin, r.constant);
        cmax = std::max(cmax, r.constant);
    }
    Outcome o;
    o.pass = worst_c <= 0.25 && worst_p <= 0.25 && cmax <= 2.0 * cmin;
    std::ostringstream d;
    d << "Caccioppoli max change " << fmt(100 * worst_c, 3) << "%, Poincare max change " << fmt(100 * worst_p, 3)
      << "%; C(q):";
    for (const auto& r : rows) d << " q=" << r.q << ":" << fmt(r.constant);
    d << " (spread x" << fmt(cmax / cmin, 3) << ")";
    o.detail = d.str();
    return o;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// 9. determinism of the CLI outputs
Outcome criterion9(const std::string& cli, std::uint64_t seed) {
    namespace fs = std::filesystem;
    if (cli.empty() || !fs::exists(cli)) return {false, "CLI binary not found: '" + cli + "'"};
    fs::path root = fs::temp_directory_path() / ("degcz-determinism-" + std::to_string(seed));
    fs::remove_all(root);
    const std::vector<std::string> commands = {"analyze-weight", "nfun-props", "solve", "cz-sweep"};
    std::ostringstream d;
    bool ok = true;
    std::vector<std::vector<std::pair<std::string, std::string>>> runs(2);
    for (int run = 0; run < 2; ++run) {
        for (const auto& cmd : commands) {
            fs::path out = root / ("run" + std::to_string(run)) / cmd;
            fs::create_directories(out);
            std::string line = "\"" + cli + "\" " + cmd + " --seed " + std::to_string(seed) +
                               " --threads 1 --out \"" + out.string() + "\"";
            if (cmd == "nfun-props") line += " --set samples=20000";
            line += " > \"" + (out / "stdout.txt").string() + "\" 2>&1";
            int rc = std::system(line.c_str());
            if (rc != 0) {
                ok = false;
                d << cmd << " exited " << rc << "; ";
            }
            std::vector<fs::path> files;
            for (const auto& e : fs::recursive_directory_iterator(out)) {
                if (e.is_regular_file() && (e.path().extension() == ".csv" || e.path().extension() == ".json"))
                    files.push_back(e.path());
            }
            std::sort(files.begin(), files.end());
            for (const auto& p : files) runs[run].emplace_back(fs::relative(p, root / ("run" + std::to_string(run))).string(), slurp(p.string()));
        }
    }
    if (runs[0].size() != runs[1].size() || runs[0].empty()) {
        ok = false;
        d << "file sets differ or are empty; ";
    } else {
        int identical = 0;
        for (std::size_t i = 0; i < runs[0].size(); ++i) {
            if (runs[0][i] == runs[1][i]) {
                ++identical;
            } else {
                ok = false;
                d << "differs: " << runs[0][i].first << "; ";
            }
        }
        d << identical << "/" << runs[0].size() << " files byte-identical";
    }
    fs::remove_all(root);
    return {ok, d.str()};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance criteria"};
    std::vector<int> which;
    std::uint64_t seed = 20240611;
    int threads = 1;
    std::string cli;
    app.add_option("--criterion", which, "criteria to run (default: all)")->check(CLI::Range(1, 9));
    app.add_option("--seed", seed, "random seed");
    app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    app.add_option("--cli", cli, "path of the degcz executable (criterion 9)");
    CLI11_PARSE(app, argc, argv);
    if (which.empty()) which = {1, 2, 3, 4, 5, 6, 7, 8, 9};
    set_warning_handler([](std::string_view) {});

    const std::vector<std::string> names = {"",
                                            "exact-solution identity",
                                            "solver convergence",
                                            "sharpness threshold",
                                            "degenerate weight characterization",
                                            "weight-algebra identities",
                                            "N-function property suite",
                                            "seminorm estimators",
                                            "inequality-shape checks",
                                            "determinism"};
    const std::vector<double> budget = {0, 1, 60, 300, 30, 10, 30, 60, 120, 600};
    bool all = true;
    for (int k : which) {
        auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            switch (k) {
                case 1: o = criterion1(seed); break;
                case 2: o = criterion2(); break;
                case 3: o = criterion3(threads); break;
                case 4: o = criterion4(threads); break;
                case 5: o = criterion5(seed); break;
                case 6: o = criterion6(seed); break;
                case 7: o = criterion7(threads); break;
                case 8: o = criterion8(seed); break;
                case 9: o = criterion9(cli, seed); break;
            }
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        bool in_time = secs <= budget[k];
        bool pass = o.pass && in_time;
        all = all && pass;
        std::printf("criterion %d (%s): %s [%.2f s / %.0f s budget] %s\n", k, names[k].c_str(), pass ? "PASS" : "FAIL",
                    secs, budget[k], o.detail.c_str());
        std::fflush(stdout);
    }
    return all ? 0 : 1;
}
