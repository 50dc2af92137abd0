#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

namespace tbm {

struct Range {
    double min = 0.0;
    double max = 0.0;
    bool contains(double v) const { return v >= min && v <= max; }
};

// q(UCS, p) = c_uu·UCS² + c_up·UCS·p + c_pp·p² + c_u·UCS + c_p·p + c_0
// UCS in MPa, p in mm/r, result in kN.
struct ForcePolynomial {
    double c_uu = 0.0;
    double c_up = 0.0;
    double c_pp = 0.0;
    double c_u = 0.0;
    double c_p = 0.0;
    double c_0 = 0.0;
    Range ucs_range{50.0, 300.0};
    Range p_range{1.0, 9.0};

    std::array<double, 6> coeffs() const { return {c_uu, c_up, c_pp, c_u, c_p, c_0}; }
    static ForcePolynomial from_coeffs(const std::array<double, 6>& c, Range ucs = {50.0, 300.0},
                                       Range p = {1.0, 9.0});
    void validate() const;

    // Horner form in p with UCS-polynomial coefficients.
    double evaluate(double ucs, double p) const;
    bool in_domain(double ucs, double p) const { return ucs_range.contains(ucs) && p_range.contains(p); }
};

// p_min(UCS, s) = s / (a·UCS + b)
struct CpRule {
    double a = -0.0359;
    double b = 21.1;
    double ucs_domain_max = 300.0;

    void validate() const;
    double denominator(double ucs) const { return a * ucs + b; }
};

struct CutterLayout {
    std::vector<double> radii_m;
    double nominal_spacing_mm = 78.0;

    std::size_t count() const { return radii_m.size(); }
    double radius_sum() const;
    void validate() const;

    // 38 cutters at r_i = i·78 mm.
    static CutterLayout default_layout();
};

struct PhysicsRules {
    ForcePolynomial normal;
    ForcePolynomial rolling;
    CpRule cp;
    CutterLayout layout;

    void validate() const;
    static PhysicsRules paper_defaults();
};

// Value plus a flag raised when (ucs, p) lies outside the fitted domain.
struct ForceValue {
    double value = 0.0;
    bool out_of_domain = false;
};

ForceValue normal_force(const PhysicsRules& rules, double ucs, double p);
ForceValue rolling_force(const PhysicsRules& rules, double ucs, double p);
ForceValue cutterhead_thrust(const PhysicsRules& rules, const CutterLayout& layout, double ucs, double p);
ForceValue cutterhead_torque(const PhysicsRules& rules, const CutterLayout& layout, double ucs, double p);
double critical_penetration(const CpRule& rule, double ucs, double spacing_mm);

struct CuttingSample {
    double ucs = 0.0;
    double p = 0.0;
    double s = 0.0;
    double f_n = 0.0;
    double f_r = 0.0;
    bool fragments_formed = false;
};

enum class ForceTarget { Normal, Rolling };

struct FitReport {
    std::size_t samples = 0;
    double rmse = 0.0;
    double max_abs_residual = 0.0;
    double r2 = 0.0;
};

struct PolynomialFit {
    ForcePolynomial poly;
    FitReport report;
};

PolynomialFit fit_force_polynomial(std::span<const CuttingSample> samples, ForceTarget target);

struct CpFit {
    CpRule rule;
    std::size_t boundaries = 0;   // (ucs, s) groups that produced a critical s/p value
    std::size_t ucs_levels = 0;
};

CpFit fit_cp_rule(std::span<const CuttingSample> samples);

struct PhysicsFit {
    PhysicsRules rules;
    FitReport normal;
    FitReport rolling;
    std::size_t cp_boundaries = 0;
};

// Fits both force polynomials and the CP rule; layout comes from `base`.
PhysicsFit fit_physics(std::span<const CuttingSample> samples, const PhysicsRules& base);

}  // namespace tbm
