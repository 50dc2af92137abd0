#pragma once

#include "decision.hpp"

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tbm {

enum class SectionMethod { Operator, Model };
enum class SectionMetric { Pr, Hf, Cost };

std::string_view to_string(SectionMethod m);
std::string_view to_string(SectionMetric m);

// Metrics left NaN were not reported for that section.
struct SectionRecord {
    std::string id;
    double start_m = 0.0;
    double end_m = 0.0;
    SectionMethod method = SectionMethod::Operator;
    double pr = 0.0;    // mm/min
    double hf = 0.0;    // m³/cutter
    double cost = 0.0;  // currency

    double length() const;
    double metric(SectionMetric m) const;
};

std::vector<SectionRecord> read_sections_csv(std::istream& is);

// Σ L_i·m_i / Σ L_i
double weighted_average(std::span<const SectionRecord> sections, SectionMetric metric);

struct MethodComparison {
    SectionMetric metric = SectionMetric::Pr;
    double model_avg = 0.0;
    double operator_avg = 0.0;
    double relative_change = 0.0;  // percent, model vs operator
};

MethodComparison compare_methods(std::span<const SectionRecord> sections, SectionMetric metric);
double relative_change(double model_avg, double operator_avg);

// Comparisons for every metric reported by all sections.
std::vector<MethodComparison> compare_all(std::span<const SectionRecord> sections);

struct BoxStats {
    std::size_t count = 0;
    double min = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double max = 0.0;
    double mean = 0.0;
};

// Linear interpolation between closest ranks on sorted data (type 7).
double quantile_type7(std::span<const double> sorted, double q);
BoxStats box_stats(std::vector<double> values);

struct DeductionGrid {
    std::vector<double> ucs{50, 100, 150, 200, 250, 300};
    std::vector<double> rqd{20, 40, 60, 80, 100};
    std::vector<double> cai{2, 3, 4, 5};

    static std::vector<double> levels(double min, double max, double step);
    void validate() const;
};

struct DeductionRow {
    double ucs = 0.0;
    double rqd = 0.0;
    double cai = 0.0;
    DecisionStatus status = DecisionStatus::Infeasible;
    double p_opt = 0.0;
    double rpm_opt = 0.0;
    double cost = 0.0;
};

struct GroupStats {
    std::string parameter;  // ucs, rqd or cai
    double level = 0.0;
    std::size_t results = 0;     // all rows at this level
    std::size_t infeasible = 0;
    std::optional<BoxStats> p;
    std::optional<BoxStats> rpm;
};

struct DeductionStudy {
    std::vector<DeductionRow> rows;  // ucs-major, then rqd, then cai
    std::size_t infeasible_count = 0;
    std::vector<GroupStats> groups;
};

// Muck and vibration features come from `fixed` (d_avg, ci, peak_acc, main_freq
// entries); the scanned and rock entries are ignored.
DeductionStudy deduction_study(const Mapping& mapping, const PhysicsRules& physics, const RatedLimits& limits,
                               const CostModel& cm, const GridSpec& grid, const DeductionGrid& dgrid,
                               const FeatureVector& fixed, unsigned threads = 0);

}  // namespace tbm
