#include "physics.hpp"

#include "error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace tbm {

namespace {

constexpr double kPivotThreshold = 1e-10;

bool finite(double v) { return std::isfinite(v); }

void check_inputs(double ucs, double p) {
    require(finite(ucs) && finite(p), ErrorCode::InvalidInput, "force inputs must be finite");
    require(ucs >= 0.0 && p >= 0.0, ErrorCode::InvalidInput, "force inputs must be non-negative");
}

void validate_range(const Range& r, const char* name) {
    std::ostringstream os;
    os << name << " range must satisfy min < max";
    require(finite(r.min) && finite(r.max) && r.min < r.max, ErrorCode::InvalidInput, os.str());
}

}  // namespace

ForcePolynomial ForcePolynomial::from_coeffs(const std::array<double, 6>& c, Range ucs, Range p) {
    ForcePolynomial f;
    f.c_uu = c[0];
    f.c_up = c[1];
    f.c_pp = c[2];
    f.c_u = c[3];
    f.c_p = c[4];
    f.c_0 = c[5];
    f.ucs_range = ucs;
    f.p_range = p;
    return f;
}

void ForcePolynomial::validate() const {
    for (double c : coeffs())
        require(finite(c), ErrorCode::InvalidInput, "force polynomial coefficients must be finite");
    validate_range(ucs_range, "polynomial UCS");
    validate_range(p_range, "polynomial penetration");
}

double ForcePolynomial::evaluate(double ucs, double p) const {
    const double k2 = c_pp;
    const double k1 = c_up * ucs + c_p;
    const double k0 = (c_uu * ucs + c_u) * ucs + c_0;
    return (k2 * p + k1) * p + k0;
}

void CpRule::validate() const {
    require(finite(a) && finite(b) && finite(ucs_domain_max), ErrorCode::InvalidInput,
            "CP rule coefficients must be finite");
    require(ucs_domain_max > 0.0, ErrorCode::InvalidInput, "CP rule ucs_domain_max must be positive");
    // Linear denominator: positive on the closed interval iff positive at both ends.
    require(denominator(0.0) > 0.0 && denominator(ucs_domain_max) > 0.0, ErrorCode::InvalidInput,
            "CP rule denominator a*UCS+b must stay positive on [0, ucs_domain_max]");
}

double CutterLayout::radius_sum() const { return std::accumulate(radii_m.begin(), radii_m.end(), 0.0); }

void CutterLayout::validate() const {
    for (std::size_t i = 0; i < radii_m.size(); ++i) {
        require(finite(radii_m[i]) && radii_m[i] > 0.0, ErrorCode::InvalidInput, "cutter radii must be positive");
        if (i > 0)
            require(radii_m[i] > radii_m[i - 1], ErrorCode::InvalidInput, "cutter radii must be strictly increasing");
    }
    require(finite(nominal_spacing_mm) && nominal_spacing_mm > 0.0, ErrorCode::InvalidInput,
            "nominal cutter spacing must be positive");
}

CutterLayout CutterLayout::default_layout() {
    CutterLayout layout;
    layout.radii_m.reserve(38);
    for (int i = 1; i <= 38; ++i) layout.radii_m.push_back(i * 0.078);
    layout.nominal_spacing_mm = 78.0;
    return layout;
}

void PhysicsRules::validate() const {
    normal.validate();
    rolling.validate();
    cp.validate();
    layout.validate();
}

PhysicsRules PhysicsRules::paper_defaults() {
    PhysicsRules r;
    r.normal = ForcePolynomial::from_coeffs({-1.5e-3, 0.26, -0.74, 0.79, 0.6, 2.72});
    r.rolling = ForcePolynomial::from_coeffs({-1.44e-4, 0.05, -0.12, 0.01, 0.13, -1.8});
    r.cp = CpRule{};
    r.layout = CutterLayout::default_layout();
    return r;
}

ForceValue normal_force(const PhysicsRules& rules, double ucs, double p) {
    check_inputs(ucs, p);
    return {rules.normal.evaluate(ucs, p), !rules.normal.in_domain(ucs, p)};
}

ForceValue rolling_force(const PhysicsRules& rules, double ucs, double p) {
    check_inputs(ucs, p);
    return {rules.rolling.evaluate(ucs, p), !rules.rolling.in_domain(ucs, p)};
}

ForceValue cutterhead_thrust(const PhysicsRules& rules, const CutterLayout& layout, double ucs, double p) {
    ForceValue f = normal_force(rules, ucs, p);
    f.value *= static_cast<double>(layout.count());
    return f;
}

ForceValue cutterhead_torque(const PhysicsRules& rules, const CutterLayout& layout, double ucs, double p) {
    ForceValue f = rolling_force(rules, ucs, p);
    f.value *= layout.radius_sum();
    return f;
}

double critical_penetration(const CpRule& rule, double ucs, double spacing_mm) {
    require(finite(ucs) && finite(spacing_mm), ErrorCode::InvalidInput, "CP inputs must be finite");
    require(spacing_mm > 0.0, ErrorCode::InvalidInput, "cutter spacing must be positive");
    const double den = rule.denominator(ucs);
    if (!(den > 0.0)) {
        std::ostringstream os;
        os << "CP rule undefined at UCS=" << ucs << " MPa (a*UCS+b=" << den << " <= 0)";
        fail(ErrorCode::Domain, os.str());
    }
    return spacing_mm / den;
}

PolynomialFit fit_force_polynomial(std::span<const CuttingSample> samples, ForceTarget target) {
    const auto n = static_cast<Eigen::Index>(samples.size());
    require(n >= 6, ErrorCode::Fit, "force polynomial fit needs at least 6 samples");

    Eigen::MatrixXd x(n, 6);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& s = samples[static_cast<std::size_t>(i)];
        require(finite(s.ucs) && finite(s.p), ErrorCode::InvalidInput, "cutting sample inputs must be finite");
        x.row(i) << s.ucs * s.ucs, s.ucs * s.p, s.p * s.p, s.ucs, s.p, 1.0;
        y(i) = target == ForceTarget::Normal ? s.f_n : s.f_r;
        require(finite(y(i)), ErrorCode::InvalidInput, "cutting sample forces must be finite");
    }

    // Column scaling keeps the Gram matrix O(1) so the pivot threshold is meaningful.
    Eigen::VectorXd scale = x.cwiseAbs().colwise().maxCoeff().transpose();
    for (Eigen::Index j = 0; j < 6; ++j)
        if (scale(j) == 0.0) scale(j) = 1.0;
    const Eigen::MatrixXd xs = x * scale.cwiseInverse().asDiagonal();
    const Eigen::MatrixXd gram = xs.transpose() * xs / static_cast<double>(n);
    const Eigen::VectorXd rhs = xs.transpose() * y / static_cast<double>(n);

    Eigen::FullPivLU<Eigen::MatrixXd> lu(gram);
    const Eigen::VectorXd pivots = lu.matrixLU().diagonal().cwiseAbs();
    const auto rank = (pivots.array() >= kPivotThreshold).count();
    if (rank < 6) {
        std::ostringstream os;
        os << "rank-deficient design for bivariate quadratic fit: rank " << rank
           << " of 6 (need distinct (ucs, p) points spanning both variables)";
        fail(ErrorCode::Fit, os.str());
    }
    const Eigen::VectorXd beta = lu.solve(rhs).cwiseQuotient(scale);

    std::array<double, 6> c{};
    for (int j = 0; j < 6; ++j) c[static_cast<std::size_t>(j)] = beta(j);

    Range ucs_r{x.col(3).minCoeff(), x.col(3).maxCoeff()};
    Range p_r{x.col(4).minCoeff(), x.col(4).maxCoeff()};
    PolynomialFit out;
    out.poly = ForcePolynomial::from_coeffs(c, ucs_r, p_r);

    const Eigen::VectorXd resid = y - x * beta;
    const double mean = y.mean();
    const double sst = (y.array() - mean).square().sum();
    const double sse = resid.squaredNorm();
    out.report.samples = samples.size();
    out.report.rmse = std::sqrt(sse / static_cast<double>(n));
    out.report.max_abs_residual = resid.cwiseAbs().maxCoeff();
    out.report.r2 = sst > 0.0 ? 1.0 - sse / sst : (sse == 0.0 ? 1.0 : 0.0);
    return out;
}

CpFit fit_cp_rule(std::span<const CuttingSample> samples) {
    // Critical p per (ucs, s): the smallest penetration that formed fragments.
    std::map<std::pair<double, double>, double> critical;
    for (const auto& s : samples) {
        require(finite(s.ucs) && finite(s.p) && finite(s.s), ErrorCode::InvalidInput,
                "cutting sample inputs must be finite");
        require(s.ucs > 0.0 && s.p > 0.0 && s.s > 0.0, ErrorCode::InvalidInput,
                "cutting sample ucs, p and s must be positive");
        if (!s.fragments_formed) continue;
        auto [it, inserted] = critical.try_emplace({s.ucs, s.s}, s.p);
        if (!inserted) it->second = std::min(it->second, s.p);
    }

    std::set<double> levels;
    for (const auto& [key, p] : critical) levels.insert(key.first);
    if (levels.size() < 2) {
        std::ostringstream os;
        os << "CP rule fit needs labeled fragment boundaries at >= 2 UCS levels, found " << levels.size();
        fail(ErrorCode::Fit, os.str());
    }

    // Ordinary least squares of s/p_crit = a·UCS + b.
    const double n = static_cast<double>(critical.size());
    double su = 0.0, sr = 0.0;
    for (const auto& [key, p] : critical) {
        su += key.first;
        sr += key.second / p;
    }
    const double mu = su / n;
    const double mr = sr / n;
    double suu = 0.0, sur = 0.0;
    for (const auto& [key, p] : critical) {
        const double du = key.first - mu;
        suu += du * du;
        sur += du * (key.second / p - mr);
    }

    CpFit out;
    out.rule.a = sur / suu;
    out.rule.b = mr - out.rule.a * mu;
    out.rule.ucs_domain_max = *levels.rbegin();
    out.boundaries = critical.size();
    out.ucs_levels = levels.size();
    return out;
}

PhysicsFit fit_physics(std::span<const CuttingSample> samples, const PhysicsRules& base) {
    PhysicsFit out;
    out.rules = base;
    auto fn = fit_force_polynomial(samples, ForceTarget::Normal);
    auto fr = fit_force_polynomial(samples, ForceTarget::Rolling);
    auto cp = fit_cp_rule(samples);
    out.rules.normal = fn.poly;
    out.rules.rolling = fr.poly;
    out.rules.cp = cp.rule;
    out.normal = fn.report;
    out.rolling = fr.report;
    out.cp_boundaries = cp.boundaries;
    return out;
}

}  // namespace tbm
