#include "degcz/config.hpp"
#include "degcz/cz_harness.hpp"
#include "degcz/exact_examples.hpp"
#include "degcz/nfunctions.hpp"
#include "degcz/seminorms.hpp"
#include "degcz/weight_registry.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace degcz;

namespace {

// exit codes
constexpr int kUsage = 1;
constexpr int kSetup = 2;
constexpr int kNonConvergence = 3;
constexpr int kViolation = 4;

class SetupError : public Error {
public:
    using Error::Error;
};

struct Flags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::string out = "degcz-out";
    std::optional<int> grid;
    std::optional<double> eps, p, rho;
    std::vector<std::string> sets;
    std::vector<std::string> inputs;  // report only
};

struct Run {
    std::string command;
    Config cfg;
    fs::path out;
    std::uint64_t seed = 1;
    int threads = 1;

    std::vector<std::string> header() const {
        return {"settings_hash=" + hex64(cfg.hash()) + " seed=" + std::to_string(seed), "config: " + cfg.one_line()};
    }
    json meta() const {
        json j;
        j["settings_hash"] = hex64(cfg.hash());
        j["seed"] = seed;
        j["config"] = json::object();
        for (const auto& [k, v] : cfg.entries()) j["config"][k] = v;
        return j;
    }
};

using Table = std::vector<std::vector<std::string>>;

std::string fd(double v) { return format_double(v); }
std::string fb(bool b) { return b ? "true" : "false"; }

json num(double v) {
    if (std::isfinite(v)) return v;
    return format_double(v);
}

void write_text(const fs::path& path, const std::string& body) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw SetupError("cannot write " + path.string());
    f << body;
    if (!f) throw SetupError("write failed: " + path.string());
}

void write_csv(const Run& run, const std::string& name, const std::vector<std::string>& cols, const Table& rows) {
    std::ostringstream s;
    for (const auto& h : run.header()) s << "# " << h << "\n";
    for (std::size_t i = 0; i < cols.size(); ++i) s << (i ? "," : "") << cols[i];
    s << "\n";
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) s << (i ? "," : "") << r[i];
        s << "\n";
    }
    write_text(run.out / name, s.str());
}

void write_json(const Run& run, const std::string& name, json body) {
    json j = run.meta();
    for (auto& [k, v] : body.items()) j[k] = v;
    write_text(run.out / name, j.dump(2) + "\n");
}

QuadratureSpec quad_from(const Config& c) {
    QuadratureSpec q = QuadratureSpec::polar(static_cast<int>(c.get_int("quad.radial", 128)),
                                             static_cast<int>(c.get_int("quad.angular", 32)));
    q.validate();
    return q;
}

std::vector<double> center_cols(const Vector& c) {
    std::vector<double> out = {0.0, 0.0, 0.0};
    for (int i = 0; i < std::min<int>(3, c.size()); ++i) out[i] = c(i);
    return out;
}

// ---------------------------------------------------------------- defaults

Config defaults_for(const std::string& cmd) {
    Config d;
    d.set("command", cmd);
    d.set("seed", "1");
    d.set("threads", "1");
    if (cmd == "analyze-weight") {
        d.set("weight.family", "example");
        d.set("weight.variant", "plain");
        d.set("weight.eps", "0.25");
        d.set("weight.dim", "2");
        d.set("domain.radius", "1");
        d.set("family.levels", "3");
        d.set("family.focus_levels", "1");
        d.set("family.focus_step", "12");
        d.set("family.extra_focus_levels", "2");
        d.set("quad.radial", "128");
        d.set("quad.angular", "32");
        d.set("ap.p", "[1.5, 2, 3]");
        d.set("small.q", "[1, 2, 4]");
        d.set("small.s", "[1.1, 1.5, 2]");
        d.set("calibration.eps", "[0.05, 0.1, 0.2]");
        d.set("calibration.q", "[1, 2, 4]");
        d.set("unbounded.growth", "2");
    } else if (cmd == "verify-example") {
        d.set("example.variant", "plain");
        d.set("example.n", "2");
        d.set("example.eps", "0.5");
        d.set("check.points", "50");
        d.set("check.identity_tol", "1e-14");
        d.set("check.flux_tol", "1e-10");
        d.set("check.fd_tol", "1e-6");
        d.set("study.levels", "4");
        d.set("study.p", "2");
        d.set("study.min_order", "0.5");
        d.set("mesh.segments", "16");
        d.set("mesh.ratio", "0.7");
        d.set("mesh.inner_radius", "0.01");
    } else if (cmd == "solve") {
        d.set("weight.family", "constant");
        d.set("weight.value", "1");
        d.set("weight.dim", "2");
        d.set("p", "2");
        d.set("mesh.kind", "unit-square");
        d.set("mesh.n", "8");
        d.set("mesh.level", "0");
        d.set("boundary.kind", "linear");
        d.set("boundary.a", "[1, 2]");
        d.set("boundary.b", "0");
        d.set("data.kind", "zero");
        d.set("solver.tolerance", "1e-8");
        d.set("solver.max_iterations", "100");
        d.set("solver.regularization_eps", "0");
    } else if (cmd == "cz-sweep") {
        SweepSpec s;
        d.set("sweep.id", s.experiment_id);
        d.set("sweep.variant", "plain");
        d.set("sweep.n", "2");
        d.set("sweep.p", "2");
        d.set("sweep.eps", "[0.5, 0.25]");
        d.set("sweep.rho_factors", "[0.5, 0.75, 0.9, 1.1, 1.25]");
        d.set("sweep.levels", std::to_string(s.levels));
        d.set("sweep.inner_shrink", "1e-4");
        d.set("sweep.geometry", "nonlinear");
        d.set("sweep.growth", "1.5");
        d.set("sweep.dead_zone", "0.1");
        d.set("b0.center", "[0, 0]");
        d.set("b0.radius", "0.25");
        d.set("mesh.segments", "32");
        d.set("mesh.ratio", "0.7");
        d.set("mesh.inner_radius", "0.01");
        d.set("quad.radial", "128");
        d.set("quad.angular", "32");
    } else if (cmd == "nfun-props") {
        d.set("ps", "[1.5, 2, 3, 4.5]");
        d.set("samples", "100000");
    }
    return d;
}

// keys a command accepts beyond its defaults
bool optional_key(const std::string& cmd, const std::string& key) {
    auto starts = [&](const char* pre) { return key.rfind(pre, 0) == 0; };
    if (cmd == "analyze-weight" || cmd == "solve") {
        if (starts("weight.")) return true;
    }
    if (cmd == "verify-example") return key == "example.theta";
    if (cmd == "solve") {
        return key == "mesh.segments" || key == "mesh.ratio" || key == "mesh.inner_radius" ||
               key == "mesh.r_inner" || key == "mesh.r_outer" || key == "mesh.rings" || key == "data.g";
    }
    if (cmd == "cz-sweep") return key == "sweep.rho";
    return false;
}

void set_flag(Config& c, const std::string& cmd, const char* flag, const std::string& value) {
    static const std::map<std::string, std::map<std::string, std::string>> table = {
        {"--eps", {{"analyze-weight", "weight.eps"}, {"verify-example", "example.eps"}, {"solve", "weight.eps"},
                   {"cz-sweep", "sweep.eps"}}},
        {"--p", {{"analyze-weight", "ap.p"}, {"verify-example", "study.p"}, {"solve", "p"}, {"cz-sweep", "sweep.p"},
                 {"nfun-props", "ps"}}},
        {"--rho", {{"cz-sweep", "sweep.rho"}}},
        {"--grid", {{"analyze-weight", "family.levels"}, {"verify-example", "study.levels"}, {"solve", "mesh.level"},
                    {"cz-sweep", "sweep.levels"}}},
    };
    const auto& per = table.at(flag);
    auto it = per.find(cmd);
    if (it == per.end()) throw InvalidInput(std::string(flag) + " is not used by " + cmd);
    c.set(it->second, value);
}

Run resolve(const std::string& cmd, const Flags& f) {
    Run run;
    run.command = cmd;
    Config cfg = defaults_for(cmd);
    const Config base = cfg;
    if (!f.config_path.empty()) cfg.merge(Config::load(f.config_path));
    for (const std::string& kv : f.sets) {
        auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) throw InvalidInput("--set expects key=value, got '" + kv + "'");
        cfg.merge(Config::parse(kv, "--set"));
    }
    if (f.seed) cfg.set("seed", std::to_string(*f.seed));
    if (f.threads) cfg.set("threads", std::to_string(*f.threads));
    if (f.eps) set_flag(cfg, cmd, "--eps", fd(*f.eps));
    if (f.p) set_flag(cfg, cmd, "--p", fd(*f.p));
    if (f.rho) set_flag(cfg, cmd, "--rho", fd(*f.rho));
    if (f.grid) set_flag(cfg, cmd, "--grid", std::to_string(*f.grid));
    cfg.set("command", cmd);
    for (const auto& [k, v] : cfg.entries()) {
        if (!base.has(k) && !optional_key(cmd, k)) throw InvalidInput("unknown key '" + k + "' for " + cmd);
    }
    run.seed = cfg.get_u64("seed", 1);
    long threads = cfg.get_int("threads", 1);
    if (threads < 1) throw InvalidInput("threads must be positive");
    run.threads = static_cast<int>(threads);
    run.cfg = cfg;

    const char* env = std::getenv("DEGCZ_OUT");
    run.out = (env && *env) ? fs::path(env) : fs::path(f.out);
    std::error_code ec;
    fs::create_directories(run.out, ec);
    if (ec) throw SetupError("cannot create output directory " + run.out.string() + ": " + ec.message());
    return run;
}

// ---------------------------------------------------------------- analyze-weight

void append_per_ball(Table& rows, const std::string& quantity, const BallFamily& fam,
                     const std::vector<double>& per_ball) {
    double running = 0.0;
    for (std::size_t i = 0; i < fam.balls.size(); ++i) {
        running = std::max(running, per_ball[i]);
        auto c = center_cols(fam.balls[i].center);
        rows.push_back({quantity, fam.id, std::to_string(i), fd(c[0]), fd(c[1]), fd(c[2]), fd(fam.balls[i].radius),
                        fd(per_ball[i]), fd(running)});
    }
}

json ball_json(const Ball& b) {
    json j;
    j["center"] = json::array();
    for (int i = 0; i < b.dim(); ++i) j["center"].push_back(b.center(i));
    j["radius"] = b.radius;
    return j;
}

int analyze_weight(const Run& run) {
    const Config& c = run.cfg;
    WeightField m = make_weight(c, "weight");
    ScalarWeightField omega = scalar_weight(m);
    const int dim = m.dim;
    const Ball domain = Ball::origin(dim, c.get_double("domain.radius"));
    const QuadratureSpec q = quad_from(c);

    BallFamilySpec spec;
    spec.domain = domain;
    spec.levels = static_cast<int>(c.get_int("family.levels", 3));
    spec.seed = run.seed;
    spec.id = "base";
    if (!m.singular_points.empty()) {
        spec.focus = m.singular_points.front();
        spec.focus_levels = static_cast<int>(c.get_int("family.focus_levels", 1));
        spec.focus_step = static_cast<int>(c.get_int("family.focus_step", 12));
    }
    BallFamily fam = make_family(spec);

    BmoEstimate log_m = bmo_matrix(log_field(m), fam, q, run.threads);
    BmoEstimate log_w = bmo_scalar(log_field(omega), fam, q, run.threads);
    BmoEstimate plain_m = bmo_matrix(as_symmetric_field(m), fam, q, run.threads);

    Table per_ball;
    append_per_ball(per_ball, "bmo_logM", fam, log_m.per_ball);
    append_per_ball(per_ball, "bmo_logomega", fam, log_w.per_ball);
    append_per_ball(per_ball, "bmo_M", fam, plain_m.per_ball);

    // bmo(M) on a family refined toward the singular point
    std::optional<double> growth;
    std::string m_flag = "bounded";
    if (spec.focus) {
        BallFamilySpec fine = spec;
        fine.focus_levels += static_cast<int>(c.get_int("family.extra_focus_levels", 2));
        fine.id = "refined";
        BallFamily ff = make_family(fine);
        BmoEstimate fine_m = bmo_matrix(as_symmetric_field(m), ff, q, run.threads);
        append_per_ball(per_ball, "bmo_M", ff, fine_m.per_ball);
        if (plain_m.value > 0.0) {
            growth = fine_m.value / plain_m.value;
            if (*growth >= c.get_double("unbounded.growth")) m_flag = "unbounded (growing with family refinement)";
        }
    }
    write_csv(run, "bmo_balls.csv", {"quantity", "family_id", "ball", "cx", "cy", "cz", "r", "value", "running_max"},
              per_ball);

    Table sem;
    auto sem_row = [&](const std::string& name, const BmoEstimate& e, const std::string& flag) {
        auto cc = center_cols(e.attaining_ball.center);
        sem.push_back({name, fam.id, std::to_string(e.ball_count), fd(e.value), fd(cc[0]), fd(cc[1]), fd(cc[2]),
                       fd(e.attaining_ball.radius), flag});
    };
    sem_row("bmo_logM", log_m, "");
    sem_row("bmo_logomega", log_w, "");
    sem_row("bmo_M", plain_m, m_flag);
    write_csv(run, "seminorms.csv", {"quantity", "family_id", "balls", "value", "cx", "cy", "cz", "r", "flag"}, sem);

    Table ap_rows;
    json ap_json = json::array();
    for (double p : c.get_doubles("ap.p", {2.0})) {
        ApEstimate a = muckenhoupt_ap(omega, p, fam, q, run.threads);
        ap_rows.push_back({fd(p), fd(a.value), fb(a.divergent)});
        ap_json.push_back({{"p", p}, {"value", num(a.value)}, {"divergent", a.divergent}});
    }
    write_csv(run, "ap.csv", {"p", "value", "divergent"}, ap_rows);

    const double sampled_lambda = sampled_condition_bound(m, domain, q);
    Calibration cal = calibrate_constants(dim, c.get_doubles("calibration.eps", {}), c.get_doubles("calibration.q", {}),
                                          q, spec.levels);

    Table matrix_rows;
    bool ok = true;
    for (double qq : c.get_doubles("small.q", {})) {
        SmallReport r = prop_small_check(m, domain, qq, q, spec.levels, cal.c3);
        ok = ok && r.holds;
        matrix_rows.push_back({fd(qq), fd(r.lhs), fd(r.bmo), fd(r.ratio), fd(cal.c3),
                               r.rhs_bound ? fd(*r.rhs_bound) : "", fb(r.holds)});
    }
    write_csv(run, "small_matrix.csv", {"q", "lhs", "bmo_logM", "ratio", "c3", "rhs_bound", "holds"}, matrix_rows);

    Table scalar_rows;
    for (double s : c.get_doubles("small.s", {})) {
        ScalarSmallReport r = small_scalar_checks(omega, domain, s, q, cal.gamma, spec.levels);
        if (r.applicable) ok = ok && r.all_hold();
        for (const auto& [name, item] : std::vector<std::pair<std::string, ScalarSmallItem>>{
                 {"positive", r.positive}, {"negative", r.negative}, {"ap", r.ap}}) {
            scalar_rows.push_back({fd(s), name, fd(r.bmo), fd(r.gamma), fb(r.applicable), fd(item.lhs), fd(item.bound),
                                   fb(item.divergent), fb(item.holds), fd(item.margin)});
        }
    }
    write_csv(run, "small_scalar.csv",
              {"s", "item", "bmo_logomega", "gamma", "applicable", "lhs", "bound", "divergent", "holds", "margin"},
              scalar_rows);

    json body;
    body["weight"] = m.label;
    body["dim"] = dim;
    body["family"] = {{"id", fam.id}, {"balls", fam.count()}, {"levels", spec.levels}};
    body["quadrature"] = q.describe();
    body["bmo_logM"] = {{"value", log_m.value}, {"attaining_ball", ball_json(log_m.attaining_ball)}};
    body["bmo_logomega"] = {{"value", log_w.value}, {"attaining_ball", ball_json(log_w.attaining_ball)}};
    body["bmo_M"] = {{"value", plain_m.value}, {"attaining_ball", ball_json(plain_m.attaining_ball)},
                     {"refinement_growth", growth ? json(*growth) : json(nullptr)}, {"flag", m_flag}};
    body["ap"] = ap_json;
    body["condition_bound"] = {{"sampled", sampled_lambda},
                               {"declared", m.condition_bound ? json(*m.condition_bound) : json(nullptr)}};
    body["calibrated"] = {{"c3", cal.c3}, {"gamma", cal.gamma}, {"eps_grid", cal.eps_grid}, {"q_grid", cal.q_grid}};
    body["checks_hold"] = ok;
    write_json(run, "weight_summary.json", body);

    std::cout << "weight " << m.label << ": bmo(log M) " << fd(log_m.value) << ", bmo(log w) " << fd(log_w.value)
              << ", bmo(M) " << fd(plain_m.value) << " [" << m_flag << "]\n";
    // c3 and gamma are calibrated on a narrow family, so a failed row is reported, not fatal
    if (!ok) std::cout << "note: some smallness rows exceed the calibrated constants\n";
    return 0;
}

// ---------------------------------------------------------------- verify-example

int verify_example(const Run& run) {
    const Config& c = run.cfg;
    std::optional<double> theta;
    if (c.has("example.theta")) theta = c.get_double("example.theta");
    MeyersExample ex(parse_variant(c.get("example.variant")), static_cast<int>(c.get_int("example.n", 2)),
                     c.get_double("example.eps"), theta);
    ex.validate();
    const int n = ex.n;
    const long points = c.get_int("check.points", 50);
    if (points < 1) throw InvalidInput("check.points must be positive");

    Table rows;
    bool all = true;
    auto record = [&](const std::string& name, double value, double threshold, bool pass, const std::string& note) {
        all = all && pass;
        rows.push_back({name, fd(value), fd(threshold), pass ? "pass" : "fail", note});
    };

    const double id_tol = c.get_double("check.identity_tol");
    const double identity = divergence_identity(ex);
    record("divergence_identity", std::abs(identity), id_tol, std::abs(identity) <= id_tol, "");
    rows.push_back({"divergence_coefficient_direct", fd(divergence_coefficient_direct(ex)), "", "info", "product rule"});

    std::mt19937_64 rng(run.seed);
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    auto random_point = [&]() {
        Vector x(n);
        for (int i = 0; i < n; ++i) x(i) = gauss(rng);
        double r = 0.05 + 0.95 * unif(rng);
        return Vector(x.normalized() * r);
    };

    double flux_err = 0.0, fd_err = 0.0;
    for (long k = 0; k < points; ++k) {
        Vector x = random_point();
        Matrix mm = weight_exact(ex, x).matrix();
        Vector g = grad_u_exact(ex, x);
        Vector direct = mm * (mm * g);
        Vector closed = flux_closed_form(ex, x);
        flux_err = std::max(flux_err, (direct - closed).norm() / std::max(closed.norm(), 1e-300));

        const double h = 1e-6 * x.norm();
        Vector num_g(n);
        for (int i = 0; i < n; ++i) {
            Vector xp = x, xm = x;
            xp(i) += h;
            xm(i) -= h;
            num_g(i) = (u_exact(ex, xp) - u_exact(ex, xm)) / (2.0 * h);
        }
        fd_err = std::max(fd_err, (num_g - g).norm() / std::max(g.norm(), 1e-300));
    }
    const double flux_tol = c.get_double("check.flux_tol");
    const double fd_tol = c.get_double("check.fd_tol");
    record("flux_consistency", flux_err, flux_tol, flux_err <= flux_tol, std::to_string(points) + " points");
    record("finite_difference_gradient", fd_err, fd_tol, fd_err <= fd_tol, std::to_string(points) + " points");

    Table study_rows;
    json study = nullptr;
    if (n == 2) {
        GradedDiskOptions base{static_cast<int>(c.get_int("mesh.segments", 16)), c.get_double("mesh.ratio"),
                               c.get_double("mesh.inner_radius"), 1.0, 0};
        const int levels = static_cast<int>(c.get_int("study.levels", 4));
        if (levels < 2) throw InvalidInput("study.levels must be at least 2");
        std::vector<ConvergenceLevel> lv;
        try {
            lv = residual_study(ex, c.get_double("study.p"), base, levels);
        } catch (const InvalidInput&) {
            throw;
        } catch (const NonConvergence&) {
            throw;
        } catch (const Error& e) {
            throw SetupError(std::string("mesh setup failed: ") + e.what());
        }
        for (const auto& l : lv) {
            study_rows.push_back({std::to_string(l.level), std::to_string(l.vertices), fd(l.h_max), fd(l.residual),
                                  fd(l.error), fd(l.factor)});
        }
        const double order = std::log(lv.front().error / lv.back().error) / std::log(lv.front().h_max / lv.back().h_max);
        const double min_order = c.get_double("study.min_order");
        record("residual_refinement_order", order, min_order, std::isfinite(order) && order >= min_order,
               "energy gap between interpolant and discrete solution");
        study = {{"levels", levels}, {"observed_order", num(order)}};
    } else {
        rows.push_back({"residual_refinement_order", "", "", "skipped", "mesh solver is two-dimensional"});
    }

    write_csv(run, "verify.csv", {"check", "value", "threshold", "status", "note"}, rows);
    if (!study_rows.empty()) {
        write_csv(run, "residual_study.csv", {"level", "vertices", "h_max", "residual", "energy_gap", "factor"},
                  study_rows);
    }
    json body;
    body["example"] = describe(ex);
    body["passed"] = all;
    body["residual_study"] = study;
    write_json(run, "verify_summary.json", body);
    std::cout << describe(ex) << ": " << (all ? "pass" : "fail") << "\n";
    return all ? 0 : kViolation;
}

// ---------------------------------------------------------------- solve

MeshPtr build_mesh(const Config& c) {
    const std::string kind = c.get("mesh.kind");
    MeshPtr mesh;
    const int level = static_cast<int>(c.get_int("mesh.level", 0));
    if (level < 0) throw InvalidInput("mesh.level must be nonnegative");
    try {
        if (kind == "unit-square") {
            mesh = unit_square_mesh(static_cast<int>(c.get_int("mesh.n", 8)));
        } else if (kind == "graded-disk") {
            GradedDiskOptions o{static_cast<int>(c.get_int("mesh.segments", 16)), c.get_double("mesh.ratio", 0.7),
                                c.get_double("mesh.inner_radius", 1e-2), 1.0, 0};
            return graded_disk_mesh(refine_graded(o, level));
        } else if (kind == "annulus") {
            mesh = annulus_mesh(c.get_double("mesh.r_inner", 0.25), c.get_double("mesh.r_outer", 1.0),
                                static_cast<int>(c.get_int("mesh.rings", 8)),
                                static_cast<int>(c.get_int("mesh.segments", 32)));
        } else {
            throw InvalidInput("unknown mesh.kind '" + kind + "' (unit-square, graded-disk, annulus)");
        }
    } catch (const InvalidInput&) {
        throw;
    } catch (const Error& e) {
        throw SetupError(std::string("mesh generation failed: ") + e.what());
    }
    for (int l = 0; l < level; ++l) mesh = refine_uniform(*mesh);
    return mesh;
}

int solve_command(const Run& run) {
    const Config& c = run.cfg;
    MeshPtr mesh = build_mesh(c);
    WeakProblem prob;
    prob.weight = make_weight(c, "weight");
    if (prob.weight.dim != 2) throw InvalidInput("solve needs a two-dimensional weight");
    prob.p = c.get_double("p");

    const std::string bkind = c.get("boundary.kind");
    std::function<double(const Point2&)> exact;
    if (bkind == "linear") {
        std::vector<double> a = c.get_doubles("boundary.a", {});
        if (a.size() != 2) throw InvalidInput("boundary.a needs two entries");
        const double b = c.get_double("boundary.b");
        exact = [a, b](const Point2& x) { return a[0] * x(0) + a[1] * x(1) + b; };
    } else if (bkind == "zero") {
        exact = [](const Point2&) { return 0.0; };
    } else if (bkind == "example") {
        if (c.get("weight.family") != "example") throw InvalidInput("boundary.kind = example needs weight.family = example");
        MeyersExample ex(parse_variant(c.get("weight.variant", "plain")), 2, c.get_double("weight.eps", 0.25));
        exact = [ex](const Point2& x) { return x.norm() == 0.0 ? 0.0 : u_exact(ex, Vector(x)); };
    } else {
        throw InvalidInput("unknown boundary.kind '" + bkind + "' (linear, zero, example)");
    }
    prob.dirichlet = exact;

    const std::string dkind = c.get("data.kind");
    if (dkind == "constant") {
        std::vector<double> g = c.get_doubles("data.g", {0.0, 0.0});
        if (g.size() != 2) throw InvalidInput("data.g needs two entries");
        Point2 gv(g[0], g[1]);
        prob.data.analytic = [gv](const Point2&) { return gv; };
    } else if (dkind != "zero") {
        throw InvalidInput("unknown data.kind '" + dkind + "' (zero, constant)");
    }

    SolverConfig sc;
    sc.tolerance = c.get_double("solver.tolerance");
    sc.max_iterations = static_cast<int>(c.get_int("solver.max_iterations", 100));
    sc.regularization_eps = c.get_double("solver.regularization_eps");

    auto trace_rows = [](const std::vector<TraceEntry>& trace) {
        Table t;
        for (const auto& e : trace)
            t.push_back({std::to_string(e.iteration), fd(e.eps), fd(e.energy), fd(e.residual), fd(e.step)});
        return t;
    };
    const std::vector<std::string> trace_cols = {"iteration", "eps", "energy", "residual", "step"};

    SolveResult res;
    try {
        res = solve(prob, mesh, sc);
    } catch (const NonConvergence& e) {
        write_csv(run, "trace.csv", trace_cols, trace_rows(e.trace()));
        throw;
    }
    write_csv(run, "trace.csv", trace_cols, trace_rows(res.trace));

    Table sol;
    double max_dev = 0.0;
    for (int v = 0; v < mesh->num_vertices(); ++v) {
        const Point2& x = mesh->vertex(v);
        sol.push_back({std::to_string(v), fd(x(0)), fd(x(1)), fd(res.solution[v])});
        max_dev = std::max(max_dev, std::abs(res.solution[v] - exact(x)));
    }
    write_csv(run, "solution.csv", {"vertex", "x", "y", "u"}, sol);

    json body;
    body["vertices"] = mesh->num_vertices();
    body["cells"] = mesh->num_cells();
    body["iterations"] = res.trace.size();
    body["residual"] = res.residual;
    body["energy"] = res.energy;
    body["max_deviation_from_boundary_function"] = max_dev;

    // weight diagnostics at cell barycenters; the solve does not refuse weights outside the small-BMO regime
    double lam_min = std::numeric_limits<double>::infinity(), lam_max = 0.0, kappa = 1.0;
    for (int cell = 0; cell < mesh->num_cells(); ++cell) {
        SpdMatrix m = prob.weight(Vector(mesh->barycenter(cell)));
        lam_min = std::min(lam_min, m.min_eigenvalue());
        lam_max = std::max(lam_max, m.eigenvalues().maxCoeff());
        kappa = std::max(kappa, condition_number(m));
    }
    json diag;
    diag["label"] = prob.weight.label;
    diag["min_eigenvalue"] = lam_min;
    diag["max_eigenvalue"] = lam_max;
    diag["max_condition_number"] = kappa;
    body["weight_diagnostics"] = diag;
    write_json(run, "solve_summary.json", body);
    std::cout << "solved on " << mesh->num_vertices() << " vertices, " << res.trace.size() << " iteration(s), residual "
              << fd(res.residual) << "\n";
    return 0;
}

// ---------------------------------------------------------------- cz-sweep

int cz_sweep_command(const Run& run) {
    const Config& c = run.cfg;
    SweepSpec s;
    s.experiment_id = c.get("sweep.id");
    s.variant = parse_variant(c.get("sweep.variant"));
    s.n = static_cast<int>(c.get_int("sweep.n", 2));
    s.p = c.get_double("sweep.p");
    s.eps_grid = c.get_doubles("sweep.eps", {});
    s.rho_factors = c.get_doubles("sweep.rho_factors", {});
    if (c.has("sweep.rho")) s.rho_grid = c.get_doubles("sweep.rho", {});
    s.levels = static_cast<int>(c.get_int("sweep.levels", 4));
    s.inner_shrink = c.get_double("sweep.inner_shrink");
    const std::string geom = c.get("sweep.geometry");
    if (geom == "nonlinear") {
        s.geometry = CzGeometry::Nonlinear;
    } else if (geom == "linear") {
        s.geometry = CzGeometry::Linear;
    } else {
        throw InvalidInput("sweep.geometry must be nonlinear or linear");
    }
    s.growth_threshold = c.get_double("sweep.growth");
    s.dead_zone = c.get_double("sweep.dead_zone");
    std::vector<double> b0c = c.get_doubles("b0.center", {0.0, 0.0});
    if (b0c.size() != 2) throw InvalidInput("b0.center needs two entries");
    s.b0 = Ball::at2(b0c[0], b0c[1], c.get_double("b0.radius"));
    s.mesh = GradedDiskOptions{static_cast<int>(c.get_int("mesh.segments", 32)), c.get_double("mesh.ratio"),
                               c.get_double("mesh.inner_radius"), 1.0, 0};
    s.quad = quad_from(c);
    s.threads = run.threads;
    s.validate();

    CzReport rep = sweep(s);
    rep.write_csv((run.out / "cz_report.csv").string(), run.header());

    json body;
    body["experiment_id"] = s.experiment_id;
    body["boundaries"] = json::array();
    for (const auto& b : rep.boundaries) {
        json j;
        j["eps"] = b.eps;
        j["analytic"] = b.analytic;
        j["boundary"] = b.boundary ? json(*b.boundary) : json(nullptr);
        j["bounded"] = b.bounded;
        j["diverging"] = b.diverging;
        j["excluded"] = b.excluded;
        j["failed"] = b.failed;
        json g = json::array();
        for (double v : b.growth) g.push_back(num(v));
        j["growth"] = g;
        body["boundaries"].push_back(j);
        std::cout << "eps " << fd(b.eps) << ": boundary " << (b.boundary ? fd(*b.boundary) : std::string("none"))
                  << " (n/eps = " << fd(b.analytic) << ")\n";
    }
    body["failures"] = rep.failures;
    write_json(run, "phase_boundary.json", body);
    return 0;
}

// ---------------------------------------------------------------- nfun-props

int nfun_command(const Run& run) {
    const Config& c = run.cfg;
    NfunSuiteConfig nc;
    nc.ps = c.get_doubles("ps", {});
    nc.samples = c.get_int("samples", 100000);
    nc.seed = run.seed;
    if (nc.ps.empty()) throw InvalidInput("ps must not be empty");
    for (double p : nc.ps) {
        if (!(p > 1.0)) throw InvalidInput("every p must exceed 1");
    }
    if (nc.samples < 1) throw InvalidInput("samples must be positive");
    NfunSuiteReport rep = run_nfun_suite(nc);

    Table rows;
    for (const auto& r : rep.rows) {
        rows.push_back({fd(r.p), r.case_id, fb(r.asserted), std::to_string(r.count), std::to_string(r.violations),
                        fd(r.min_ratio), fd(r.max_ratio), fd(r.constant)});
    }
    write_csv(run, "nfun_props.csv",
              {"p", "case_id", "asserted", "count", "violations", "min_ratio", "max_ratio", "constant"}, rows);
    json body;
    body["asserted_violations"] = rep.asserted_violations();
    body["hammer_constant"] = json::array();
    for (double p : nc.ps) body["hammer_constant"].push_back({{"p", p}, {"c", num(rep.hammer_constant(p))}});
    write_json(run, "nfun_summary.json", body);
    std::cout << rep.asserted_violations() << " asserted violation(s) over " << nc.ps.size() << " exponent(s)\n";
    return rep.asserted_violations() == 0 ? 0 : kViolation;
}

// ---------------------------------------------------------------- report

int report_command(const Run& run, const std::vector<std::string>& inputs) {
    std::vector<fs::path> roots;
    for (const auto& s : inputs) roots.emplace_back(s);
    if (roots.empty()) roots.push_back(run.out);
    std::vector<std::pair<std::string, fs::path>> files;
    for (const auto& root : roots) {
        if (!fs::exists(root)) throw InvalidInput("no such input: " + root.string());
        if (fs::is_regular_file(root)) {
            files.emplace_back(root.filename().string(), root);
            continue;
        }
        for (const auto& e : fs::recursive_directory_iterator(root)) {
            if (!e.is_regular_file() || e.path().extension() != ".csv") continue;
            if (fs::equivalent(e.path().parent_path(), run.out) && e.path().filename() == "summary.csv") continue;
            files.emplace_back(fs::relative(e.path(), root).generic_string(), e.path());
        }
    }
    std::sort(files.begin(), files.end());

    Table rows;
    json entries = json::array();
    for (const auto& [name, path] : files) {
        std::ifstream in(path);
        if (!in) throw SetupError("cannot read " + path.string());
        std::string line, hash, seed, command, columns;
        long data_rows = 0;
        while (std::getline(in, line)) {
            if (line.rfind("# ", 0) == 0) {
                std::istringstream ls(line.substr(2));
                std::string tok;
                const bool settings = line.rfind("# settings_hash=", 0) == 0;
                while (ls >> tok) {
                    if (!tok.empty() && tok.back() == ';') tok.pop_back();
                    if (settings && tok.rfind("settings_hash=", 0) == 0) hash = tok.substr(14);
                    if (settings && tok.rfind("seed=", 0) == 0) seed = tok.substr(5);
                    if (!settings && tok.rfind("command=", 0) == 0) command = tok.substr(8);
                }
                continue;
            }
            if (columns.empty()) {
                columns = line;
            } else if (!line.empty()) {
                ++data_rows;
            }
        }
        std::string cols_field = columns;
        std::replace(cols_field.begin(), cols_field.end(), ',', ';');
        rows.push_back({name, command, hash, seed, std::to_string(data_rows), cols_field});
        entries.push_back({{"file", name}, {"command", command}, {"settings_hash", hash}, {"seed", seed},
                           {"rows", data_rows}, {"columns", columns}});
    }
    write_csv(run, "summary.csv", {"file", "command", "settings_hash", "seed", "rows", "columns"}, rows);
    json body;
    body["files"] = entries;
    write_json(run, "summary.json", body);
    std::cout << "summarized " << files.size() << " CSV file(s)\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"weighted Calderon-Zygmund experiments"};
    app.require_subcommand(1);
    Flags flags;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", flags.config_path, "key = value configuration file");
        sub->add_option("--seed", flags.seed, "random seed");
        sub->add_option("--threads", flags.threads, "worker threads");
        sub->add_option("--out", flags.out, "output directory (DEGCZ_OUT overrides)");
        sub->add_option("--grid", flags.grid, "refinement level");
        sub->add_option("--eps", flags.eps, "weight exponent");
        sub->add_option("--p", flags.p, "growth exponent");
        sub->add_option("--rho", flags.rho, "integrability exponent");
        sub->add_option("--set", flags.sets, "override a config key (key=value), repeatable");
    };
    const std::vector<std::pair<std::string, std::string>> commands = {
        {"analyze-weight", "seminorms, A_p constants and smallness checks of a named weight"},
        {"verify-example", "identity, flux, gradient and residual-refinement checks of an exact solution"},
        {"solve", "solve the weighted p-Laplace problem on a mesh"},
        {"cz-sweep", "integrability sweep and phase boundary"},
        {"nfun-props", "N-function property suite"},
        {"report", "merge CSV outputs into a summary"},
    };
    std::map<std::string, CLI::App*> subs;
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        add_common(sub);
        subs[name] = sub;
    }
    subs["report"]->add_option("inputs", flags.inputs, "directories or CSV files (default: the output directory)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    std::string cmd;
    for (const auto& [name, sub] : subs) {
        if (sub->parsed()) cmd = name;
    }

    try {
        Run run = resolve(cmd, flags);
        if (cmd == "analyze-weight") return analyze_weight(run);
        if (cmd == "verify-example") return verify_example(run);
        if (cmd == "solve") return solve_command(run);
        if (cmd == "cz-sweep") return cz_sweep_command(run);
        if (cmd == "nfun-props") return nfun_command(run);
        if (cmd == "report") return report_command(run, flags.inputs);
        return kUsage;
    } catch (const InvalidInput& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const NotPositiveDefinite& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const NonConvergence& e) {
        std::cerr << "nonconvergence: " << e.what() << "\n";
        return kNonConvergence;
    } catch (const std::exception& e) {
        std::cerr << "setup error: " << e.what() << "\n";
        return kSetup;
    }
}
