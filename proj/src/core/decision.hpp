#pragma once

#include "dataset.hpp"
#include "mapping.hpp"
#include "physics.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace tbm {

struct RatedLimits {
    double thrust_rated = 30000.0;  // kN
    double torque_rated = 3780.0;   // kN·m
    double belt_rated = 600.0;      // m³/h
    double safety_factor_thrust = 0.4;
    double safety_factor_torque = 0.4;

    double thrust_limit() const { return safety_factor_thrust * thrust_rated; }
    double torque_limit() const { return safety_factor_torque * torque_rated; }
    void validate() const;
};

struct CostModel {
    double c1 = 20000.0;                      // currency/day
    double c2 = 15000.0;                      // currency/cutter
    double length_m = 1.0;                    // decision horizon L
    double area_m2 = 28.274333882308138;      // π·3² for a 6 m cutterhead
    double utilization = 0.5;                 // μ
    double hours_per_day = 24.0;              // t

    void validate() const;
};

struct GridSpec {
    double rpm_min = 0.0;
    double rpm_max = 10.0;
    double rpm_step = 0.1;
    double p_min = 0.0;
    double p_max = 16.0;
    double p_step = 1.0;

    void validate() const;
    std::vector<double> rpm_values() const;
    std::vector<double> p_values() const;
};

// Rock, muck and vibration state held fixed during one scan.
struct DecisionContext {
    double ucs = 0.0;
    double rqd = 0.0;
    double cai = 0.0;
    double d_avg = 0.0;
    double ci = 0.0;
    double peak_acc = 0.0;
    double main_freq = 0.0;

    void validate(const CpRule& cp) const;
    FeatureVector features(double p, double rpm) const;
};

struct CostBreakdown {
    double c_s = std::numeric_limits<double>::infinity();
    double c_c = std::numeric_limits<double>::infinity();
    double c_t = std::numeric_limits<double>::infinity();
    bool finite() const { return std::isfinite(c_t); }
};

double penetration_rate(double p, double rpm);  // mm/min

// pr in mm/min, hf in m³/cutter. Non-positive pr or hf yields the infinite sentinel.
CostBreakdown total_cost(double pr, double hf, const CostModel& cm);

struct Cell {
    double rpm = 0.0;
    double p = 0.0;
    TargetVector predicted{};  // hf, th, tor, pb
    bool thrust_ok = false;
    bool torque_ok = false;
    bool belt_ok = false;
    bool cp_ok = false;
    bool feasible = false;
    CostBreakdown cost;
};

struct ConstraintCounts {
    std::size_t thrust = 0;
    std::size_t torque = 0;
    std::size_t belt = 0;
    std::size_t cp = 0;
};

struct FeasibleRegion {
    std::vector<double> rpm_values;
    std::vector<double> p_values;
    double p_critical = 0.0;           // CP-rule minimum penetration for the context
    std::vector<Cell> cells;           // rpm-major: index = i_rpm·|p| + i_p
    std::size_t feasible_count = 0;
    ConstraintCounts eliminated;       // cells failing each constraint

    const Cell& at(std::size_t i_rpm, std::size_t i_p) const { return cells[i_rpm * p_values.size() + i_p]; }
};

FeasibleRegion feasible_region(const Mapping& mapping, const PhysicsRules& physics, const DecisionContext& ctx,
                               const RatedLimits& limits, const CostModel& cm, const GridSpec& grid);

// Relative cost band treated as a tie by optimize().
inline constexpr double kCostTieTolerance = 1e-12;

enum class DecisionStatus { Optimal, Infeasible };

struct DecisionResult {
    DecisionStatus status = DecisionStatus::Infeasible;
    double p = 0.0;
    double rpm = 0.0;
    TargetVector predicted{};
    double pr = 0.0;
    CostBreakdown cost;
    std::size_t optimum_index = 0;
    FeasibleRegion region;
};

DecisionResult optimize(const Mapping& mapping, const PhysicsRules& physics, const DecisionContext& ctx,
                        const RatedLimits& limits, const CostModel& cm, const GridSpec& grid);

}  // namespace tbm
