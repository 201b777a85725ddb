#pragma once

#include "degcz/core.hpp"
#include "degcz/spd.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace degcz {

// phi(t) = t^p / p
class PowerPhi {
public:
    explicit PowerPhi(double p);
    double p() const { return p_; }
    double conjugate_exponent() const { return p_ / (p_ - 1.0); }
    double operator()(double t) const;
    double derivative(double t) const;
    double conjugate(double t) const;
    PowerPhi dual() const { return PowerPhi(conjugate_exponent()); }

private:
    double p_;
};

// phi_a(t) = int_0^t phi'(a v s) / (a v s) s ds, in closed form.
class ShiftedPhi {
public:
    ShiftedPhi(PowerPhi base, double a);
    const PowerPhi& base() const { return base_; }
    double shift() const { return a_; }
    double operator()(double t) const;
    double derivative(double t) const;
    // (phi_a)^* = (phi^*)_{phi'(a)}
    double conjugate(double t) const;

private:
    PowerPhi base_;
    double a_;
};

double phi_a(const ShiftedPhi& sp, double t);

// A(0) = V(0) = 0 for every p > 1.
Vector a_map(double p, const Vector& xi);
Vector v_map(double p, const Vector& xi);

struct WeightedMaps {
    Vector cal_a;  // M A(M xi)
    Vector cal_v;  // V(M xi)
};
WeightedMaps weighted_maps(const SpdMatrix& m, double p, const Vector& xi);
WeightedMaps weighted_maps(const Matrix& m, double p, const Vector& xi);

struct HammerReport {
    // (A(P)-A(Q)).(P-Q), |V(P)-V(Q)|^2, phi_|Q|(|P-Q|), (phi*)_|A(Q)|(|A(P)-A(Q)|)
    std::array<double, 4> quantities{};
    std::array<std::array<double, 4>, 4> ratio{};
    bool positive = false;
};
HammerReport hammer_check(double p, const Vector& P, const Vector& Q);
inline constexpr std::array<const char*, 4> kHammerNames = {"monotone", "v_dist", "phi_shift",
                                                            "conj_shift"};

// Analytic constants for which the shift inequalities hold exactly for phi = t^p/p.
double removal_shift_constant(double r, double kappa);
double young_constant(double p, double delta);
double young2_constant_first(double p, double delta);
double young2_constant_second(double p, double delta);

// sup_{s >= 0} (t s - phi_a(s)) by bisection on the derivative; independent of the dual formula.
double numeric_conjugate(const ShiftedPhi& sp, double t);

struct NfunCaseRow {
    double p = 2.0;
    std::string case_id;
    double min_ratio = 0.0;
    double max_ratio = 0.0;
    long violations = 0;
    long count = 0;
    bool asserted = false;  // violations count as failures
    double constant = 0.0;  // the constant used or reported for the case
};

struct NfunSuiteConfig {
    std::vector<double> ps = {1.5, 2.0, 3.0, 4.5};
    long samples = 100000;
    std::uint64_t seed = 1;
};

struct NfunSuiteReport {
    std::vector<NfunCaseRow> rows;
    long asserted_violations() const;
    // spread of all hammer ratios at p: the c with every ratio in [1/c, c]
    double hammer_constant(double p) const;
    const NfunCaseRow* find(double p, const std::string& id) const;
};

NfunSuiteReport run_nfun_suite(const NfunSuiteConfig& cfg);

}  // namespace degcz
