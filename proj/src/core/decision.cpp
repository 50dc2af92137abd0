#include "decision.hpp"

#include "error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace tbm {

namespace {

// Grid values are exact multiples of the step; rounding strips accumulated
// representation error (0.30000000000000004 → 0.3).
std::vector<double> axis_values(double lo, double hi, double step) {
    const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
    std::vector<double> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) out.push_back(std::round((lo + static_cast<double>(i) * step) * 1e10) / 1e10);
    return out;
}

void non_negative(double v, const char* name) {
    require(!std::isnan(v) && v >= 0.0, ErrorCode::InvalidInput, std::string(name) + " must be >= 0");
}

}  // namespace

void RatedLimits::validate() const {
    non_negative(thrust_rated, "thrust_rated");
    non_negative(torque_rated, "torque_rated");
    non_negative(belt_rated, "belt_rated");
    for (double sf : {safety_factor_thrust, safety_factor_torque})
        require(sf > 0.0 && sf <= 1.0, ErrorCode::InvalidInput, "safety factors must lie in (0, 1]");
}

void CostModel::validate() const {
    for (double v : {c1, c2, length_m, area_m2, hours_per_day})
        require(std::isfinite(v) && v > 0.0, ErrorCode::InvalidInput, "cost model values must be positive");
    require(utilization > 0.0 && utilization <= 1.0, ErrorCode::InvalidInput, "utilization must lie in (0, 1]");
}

void GridSpec::validate() const {
    for (double v : {rpm_min, rpm_max, rpm_step, p_min, p_max, p_step})
        require(std::isfinite(v), ErrorCode::InvalidInput, "grid values must be finite");
    require(rpm_step > 0.0 && p_step > 0.0, ErrorCode::InvalidInput, "grid steps must be > 0");
    require(rpm_max > rpm_min && p_max > p_min, ErrorCode::InvalidInput, "grid max must exceed min");
    require(rpm_min >= 0.0 && p_min >= 0.0, ErrorCode::InvalidInput, "grid ranges must be non-negative");
}

std::vector<double> GridSpec::rpm_values() const { return axis_values(rpm_min, rpm_max, rpm_step); }
std::vector<double> GridSpec::p_values() const { return axis_values(p_min, p_max, p_step); }

void DecisionContext::validate(const CpRule& cp) const {
    for (double v : {ucs, rqd, cai, d_avg, ci, peak_acc, main_freq})
        require(std::isfinite(v), ErrorCode::InvalidInput, "decision context values must be finite");
    if (ucs < 0.0 || ucs > cp.ucs_domain_max) {
        std::ostringstream os;
        os << "context UCS " << ucs << " MPa outside CP-rule domain [0, " << cp.ucs_domain_max << "]";
        fail(ErrorCode::Domain, os.str());
    }
}

FeatureVector DecisionContext::features(double p, double rpm) const {
    return {p, rpm, ucs, rqd, cai, d_avg, ci, peak_acc, main_freq};
}

double penetration_rate(double p, double rpm) {
    require(std::isfinite(p) && std::isfinite(rpm) && p >= 0.0 && rpm >= 0.0, ErrorCode::InvalidInput,
            "p and rpm must be finite and >= 0");
    return p * rpm;
}

CostBreakdown total_cost(double pr, double hf, const CostModel& cm) {
    if (!(pr > 0.0) || !(hf > 0.0)) return {};
    const double advance_m_per_h = pr * 0.06;
    CostBreakdown c;
    c.c_s = cm.c1 * cm.length_m / (cm.utilization * cm.hours_per_day * advance_m_per_h);
    c.c_c = cm.c2 * cm.length_m * cm.area_m2 / hf;
    c.c_t = c.c_s + c.c_c;
    return c;
}

FeasibleRegion feasible_region(const Mapping& mapping, const PhysicsRules& physics, const DecisionContext& ctx,
                               const RatedLimits& limits, const CostModel& cm, const GridSpec& grid) {
    limits.validate();
    cm.validate();
    grid.validate();
    ctx.validate(physics.cp);

    FeasibleRegion region;
    region.rpm_values = grid.rpm_values();
    region.p_values = grid.p_values();
    region.p_critical = critical_penetration(physics.cp, ctx.ucs, physics.layout.nominal_spacing_mm);

    std::vector<FeatureVector> inputs;
    inputs.reserve(region.rpm_values.size() * region.p_values.size());
    for (double rpm : region.rpm_values)
        for (double p : region.p_values) inputs.push_back(ctx.features(p, rpm));
    const auto predicted = mapping.predict_batch(inputs);

    const double th_lim = limits.thrust_limit();
    const double tor_lim = limits.torque_limit();
    region.cells.resize(inputs.size());
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        Cell& c = region.cells[i];
        c.p = inputs[i][kP];
        c.rpm = inputs[i][kRpm];
        c.predicted = predicted[i];
        c.thrust_ok = c.predicted[kTh] <= th_lim;
        c.torque_ok = c.predicted[kTor] <= tor_lim;
        c.belt_ok = c.predicted[kPb] <= limits.belt_rated;
        c.cp_ok = c.p >= region.p_critical;
        c.feasible = c.thrust_ok && c.torque_ok && c.belt_ok && c.cp_ok;
        c.cost = total_cost(penetration_rate(c.p, c.rpm), c.predicted[kHf], cm);
        region.feasible_count += c.feasible ? 1 : 0;
        region.eliminated.thrust += c.thrust_ok ? 0 : 1;
        region.eliminated.torque += c.torque_ok ? 0 : 1;
        region.eliminated.belt += c.belt_ok ? 0 : 1;
        region.eliminated.cp += c.cp_ok ? 0 : 1;
    }
    return region;
}

DecisionResult optimize(const Mapping& mapping, const PhysicsRules& physics, const DecisionContext& ctx,
                        const RatedLimits& limits, const CostModel& cm, const GridSpec& grid) {
    DecisionResult result;
    result.region = feasible_region(mapping, physics, ctx, limits, cm, grid);

    // Costs within a relative 1e-12 of the minimum count as tied: grid products
    // such as 12·5.2 and 16·3.9 differ only in the last bit. Index order is
    // rpm-major, so the first tied cell has the lowest rpm, then lowest p.
    double min_cost = std::numeric_limits<double>::infinity();
    for (const Cell& c : result.region.cells)
        if (c.feasible && c.cost.finite()) min_cost = std::min(min_cost, c.cost.c_t);
    bool found = false;
    for (std::size_t i = 0; i < result.region.cells.size() && std::isfinite(min_cost); ++i) {
        const Cell& c = result.region.cells[i];
        if (c.feasible && c.cost.finite() && c.cost.c_t <= min_cost * (1.0 + kCostTieTolerance)) {
            found = true;
            result.optimum_index = i;
            result.cost = c.cost;
            break;
        }
    }
    if (found) {
        const Cell& best = result.region.cells[result.optimum_index];
        result.status = DecisionStatus::Optimal;
        result.p = best.p;
        result.rpm = best.rpm;
        result.predicted = best.predicted;
        result.pr = penetration_rate(best.p, best.rpm);
    }
    return result;
}

}  // namespace tbm
