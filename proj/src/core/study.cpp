#include "study.hpp"

#include "error.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <istream>
#include <limits>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

namespace tbm {

namespace {

constexpr std::string_view kSectionHeader = "id,start_m,end_m,method,pr,hf,cost";

double optional_metric(const std::string& field, std::string_view what) {
    if (field.empty()) return std::numeric_limits<double>::quiet_NaN();
    return parse_double(field, what);
}

}  // namespace

std::string_view to_string(SectionMethod m) { return m == SectionMethod::Model ? "model" : "operator"; }

std::string_view to_string(SectionMetric m) {
    switch (m) {
        case SectionMetric::Pr: return "pr";
        case SectionMetric::Hf: return "hf";
        case SectionMetric::Cost: return "cost";
    }
    return "unknown";
}

double SectionRecord::length() const { return std::abs(end_m - start_m); }

double SectionRecord::metric(SectionMetric m) const {
    switch (m) {
        case SectionMetric::Pr: return pr;
        case SectionMetric::Hf: return hf;
        case SectionMetric::Cost: return cost;
    }
    return std::numeric_limits<double>::quiet_NaN();
}

std::vector<SectionRecord> read_sections_csv(std::istream& is) {
    std::string line;
    require(static_cast<bool>(std::getline(is, line)), ErrorCode::Parse, "section CSV is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    require(line == kSectionHeader, ErrorCode::Parse, "section CSV header must be '" + std::string(kSectionHeader) + "'");
    std::vector<SectionRecord> out;
    std::size_t row = 1;
    while (std::getline(is, line)) {
        ++row;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 7) {
            std::ostringstream os;
            os << "section CSV row " << row << " has " << f.size() << " fields, expected 7";
            fail(ErrorCode::Parse, os.str());
        }
        SectionRecord s;
        s.id = f[0];
        s.start_m = parse_double(f[1], "start_m");
        s.end_m = parse_double(f[2], "end_m");
        if (f[3] == "model") s.method = SectionMethod::Model;
        else if (f[3] == "operator") s.method = SectionMethod::Operator;
        else fail(ErrorCode::Parse, "section method must be 'model' or 'operator', got '" + f[3] + "'");
        s.pr = optional_metric(f[4], "pr");
        s.hf = optional_metric(f[5], "hf");
        s.cost = optional_metric(f[6], "cost");
        out.push_back(s);
    }
    return out;
}

double weighted_average(std::span<const SectionRecord> sections, SectionMetric metric) {
    require(!sections.empty(), ErrorCode::InvalidInput, "weighted average needs at least one section");
    double total = 0.0, weighted = 0.0;
    for (const auto& s : sections) {
        const double len = s.length();
        require(std::isfinite(len) && len > 0.0, ErrorCode::InvalidInput, "section '" + s.id + "' has no length");
        const double m = s.metric(metric);
        require(std::isfinite(m), ErrorCode::InvalidInput,
                "section '" + s.id + "' does not report " + std::string(to_string(metric)));
        total += len;
        weighted += len * m;
    }
    return weighted / total;
}

double relative_change(double model_avg, double operator_avg) {
    require(operator_avg != 0.0, ErrorCode::InvalidInput, "operator average is zero");
    return (model_avg - operator_avg) / operator_avg * 100.0;
}

MethodComparison compare_methods(std::span<const SectionRecord> sections, SectionMetric metric) {
    std::vector<SectionRecord> model, op;
    for (const auto& s : sections) (s.method == SectionMethod::Model ? model : op).push_back(s);
    require(!model.empty() && !op.empty(), ErrorCode::InvalidInput,
            "method comparison needs both model and operator sections");
    MethodComparison c;
    c.metric = metric;
    c.model_avg = weighted_average(model, metric);
    c.operator_avg = weighted_average(op, metric);
    c.relative_change = relative_change(c.model_avg, c.operator_avg);
    return c;
}

std::vector<MethodComparison> compare_all(std::span<const SectionRecord> sections) {
    std::vector<MethodComparison> out;
    for (auto metric : {SectionMetric::Pr, SectionMetric::Hf, SectionMetric::Cost}) {
        const bool reported = std::all_of(sections.begin(), sections.end(),
                                          [&](const SectionRecord& s) { return std::isfinite(s.metric(metric)); });
        if (reported) out.push_back(compare_methods(sections, metric));
    }
    require(!out.empty(), ErrorCode::InvalidInput, "no metric is reported by every section");
    return out;
}

double quantile_type7(std::span<const double> sorted, double q) {
    require(!sorted.empty(), ErrorCode::InvalidInput, "quantile of empty sample");
    const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

BoxStats box_stats(std::vector<double> values) {
    require(!values.empty(), ErrorCode::InvalidInput, "box statistics of empty sample");
    std::sort(values.begin(), values.end());
    BoxStats b;
    b.count = values.size();
    b.min = values.front();
    b.max = values.back();
    b.q1 = quantile_type7(values, 0.25);
    b.median = quantile_type7(values, 0.5);
    b.q3 = quantile_type7(values, 0.75);
    b.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    return b;
}

std::vector<double> DeductionGrid::levels(double min, double max, double step) {
    require(std::isfinite(min) && std::isfinite(max) && std::isfinite(step) && step > 0.0 && max >= min,
            ErrorCode::InvalidInput, "deduction range needs min <= max and step > 0");
    std::vector<double> out;
    const auto count = static_cast<std::size_t>(std::floor((max - min) / step + 1e-9)) + 1;
    for (std::size_t i = 0; i < count; ++i) out.push_back(std::round((min + static_cast<double>(i) * step) * 1e10) / 1e10);
    return out;
}

void DeductionGrid::validate() const {
    require(!ucs.empty() && !rqd.empty() && !cai.empty(), ErrorCode::InvalidInput,
            "deduction grid needs at least one level per parameter");
}

DeductionStudy deduction_study(const Mapping& mapping, const PhysicsRules& physics, const RatedLimits& limits,
                               const CostModel& cm, const GridSpec& grid, const DeductionGrid& dgrid,
                               const FeatureVector& fixed, unsigned threads) {
    dgrid.validate();
    DeductionStudy study;
    for (double u : dgrid.ucs)
        for (double q : dgrid.rqd)
            for (double c : dgrid.cai) study.rows.push_back({u, q, c});

    // Each row is independent; results land at their own index, so the output
    // does not depend on scheduling.
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < study.rows.size(); i = next++) {
            DeductionRow& row = study.rows[i];
            try {
                DecisionContext ctx{row.ucs, row.rqd, row.cai, fixed[kDAvg], fixed[kCi], fixed[kPeakAcc], fixed[kMainFreq]};
                const auto r = optimize(mapping, physics, ctx, limits, cm, grid);
                row.status = r.status;
                if (r.status == DecisionStatus::Optimal) {
                    row.p_opt = r.p;
                    row.rpm_opt = r.rpm;
                    row.cost = r.cost.c_t;
                }
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(study.rows.size()));
    {
        std::vector<std::jthread> pool;
        for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
        worker();
    }
    if (error) std::rethrow_exception(error);

    for (const auto& row : study.rows) study.infeasible_count += row.status == DecisionStatus::Infeasible ? 1 : 0;

    auto group = [&](const char* name, const std::vector<double>& levels, double DeductionRow::*field) {
        for (double level : levels) {
            GroupStats g;
            g.parameter = name;
            g.level = level;
            std::vector<double> ps, rpms;
            for (const auto& row : study.rows) {
                if (row.*field != level) continue;
                ++g.results;
                if (row.status != DecisionStatus::Optimal) {
                    ++g.infeasible;
                    continue;
                }
                ps.push_back(row.p_opt);
                rpms.push_back(row.rpm_opt);
            }
            if (!ps.empty()) {
                g.p = box_stats(ps);
                g.rpm = box_stats(rpms);
            }
            study.groups.push_back(std::move(g));
        }
    };
    group("ucs", dgrid.ucs, &DeductionRow::ucs);
    group("rqd", dgrid.rqd, &DeductionRow::rqd);
    group("cai", dgrid.cai, &DeductionRow::cai);
    return study;
}

}  // namespace tbm
