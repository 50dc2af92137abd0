#include "serialize.hpp"

#include "error.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace tbm {

namespace {

// Typed field access with errors naming the field.
double number(const json& j, const char* key) {
    if (!j.contains(key)) fail(ErrorCode::InvalidInput, std::string("missing field '") + key + "'");
    const auto& v = j.at(key);
    if (!v.is_number()) fail(ErrorCode::InvalidInput, std::string("field '") + key + "' must be a number");
    return v.get<double>();
}

double number_or(const json& j, const char* key, double fallback) {
    return j.contains(key) ? number(j, key) : fallback;
}

std::size_t count_or(const json& j, const char* key, std::size_t fallback) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (!v.is_number_integer() && !v.is_number_unsigned())
        fail(ErrorCode::InvalidInput, std::string("field '") + key + "' must be a non-negative integer");
    const auto n = v.get<long long>();
    if (n < 0) fail(ErrorCode::InvalidInput, std::string("field '") + key + "' must be a non-negative integer");
    return static_cast<std::size_t>(n);
}

std::vector<double> numbers(const json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_array())
        fail(ErrorCode::InvalidInput, std::string("field '") + key + "' must be an array of numbers");
    std::vector<double> out;
    for (const auto& v : j.at(key)) {
        if (!v.is_number()) fail(ErrorCode::InvalidInput, std::string("field '") + key + "' must hold numbers only");
        out.push_back(v.get<double>());
    }
    return out;
}

const json& object(const json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_object())
        fail(ErrorCode::InvalidInput, std::string("field '") + key + "' must be an object");
    return j.at(key);
}

std::array<double, 6> six(const json& j, const char* key) {
    const auto v = numbers(j, key);
    if (v.size() != 6) fail(ErrorCode::InvalidInput, std::string("field '") + key + "' must hold 6 coefficients");
    return {v[0], v[1], v[2], v[3], v[4], v[5]};
}

json range_json(const Range& r) { return json::array({r.min, r.max}); }

Range range_from(const json& j, const char* key, Range fallback) {
    if (!j.contains(key)) return fallback;
    const auto v = numbers(j, key);
    if (v.size() != 2) fail(ErrorCode::InvalidInput, std::string("range '") + key + "' must be [min, max]");
    return {v[0], v[1]};
}

json matrix_json(const Eigen::MatrixXd& m) {
    json flat = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) flat.push_back(m(r, c));
    return flat;
}

Eigen::MatrixXd matrix_from(const json& j, const char* key, Eigen::Index rows, Eigen::Index cols) {
    const auto v = numbers(j, key);
    if (static_cast<Eigen::Index>(v.size()) != rows * cols) {
        std::ostringstream os;
        os << "layer array '" << key << "' has " << v.size() << " entries, expected " << rows * cols;
        fail(ErrorCode::InvalidInput, os.str());
    }
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = v[static_cast<std::size_t>(r * cols + c)];
    return m;
}

Eigen::VectorXd vector_from(const json& j, const char* key, Eigen::Index n) {
    const Eigen::MatrixXd m = matrix_from(j, key, n, 1);
    return m.col(0);
}

template <std::size_t N>
std::array<double, N> fixed_array(const json& j, const char* key) {
    const auto v = numbers(j, key);
    if (v.size() != N) {
        std::ostringstream os;
        os << "field '" << key << "' must hold " << N << " numbers";
        fail(ErrorCode::InvalidInput, os.str());
    }
    std::array<double, N> out{};
    std::copy(v.begin(), v.end(), out.begin());
    return out;
}

json cost_json(const CostBreakdown& c) {
    if (!c.finite()) return nullptr;
    return {{"c_s", c.c_s}, {"c_c", c.c_c}, {"c_t", c.c_t}};
}

json targets_json(const TargetVector& t) {
    return {{"th", t[kTh]}, {"tor", t[kTor]}, {"hf", t[kHf]}, {"pb", t[kPb]}};
}

json box_json(const std::optional<BoxStats>& b) {
    if (!b) return nullptr;
    return {{"count", b->count}, {"min", b->min}, {"q1", b->q1}, {"median", b->median},
            {"q3", b->q3},       {"max", b->max}, {"mean", b->mean}};
}

std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

bool blank(const std::string& line) { return line.find_first_not_of(" \t\r") == std::string::npos; }

}  // namespace

std::string digest(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "fnv1a64:%016" PRIx64, h);
    return buf;
}

json to_json(const PhysicsRules& rules) {
    auto poly_domain = [](const ForcePolynomial& p) {
        return json{{"ucs", range_json(p.ucs_range)}, {"p", range_json(p.p_range)}};
    };
    return {
        {"fn_coeffs", rules.normal.coeffs()},
        {"fr_coeffs", rules.rolling.coeffs()},
        {"fn_domain", poly_domain(rules.normal)},
        {"fr_domain", poly_domain(rules.rolling)},
        {"cp", {{"a", rules.cp.a}, {"b", rules.cp.b}, {"ucs_domain_max", rules.cp.ucs_domain_max}}},
        {"layout", {{"radii_m", rules.layout.radii_m}, {"nominal_spacing_mm", rules.layout.nominal_spacing_mm}}},
    };
}

PhysicsRules physics_from_json(const json& j) {
    require(j.is_object(), ErrorCode::InvalidInput, "physics configuration must be a JSON object");
    PhysicsRules r;
    auto domain = [&](const char* key, Range& ucs, Range& p) {
        if (!j.contains(key)) return;
        const json& d = object(j, key);
        ucs = range_from(d, "ucs", ucs);
        p = range_from(d, "p", p);
    };
    r.normal = ForcePolynomial::from_coeffs(six(j, "fn_coeffs"));
    r.rolling = ForcePolynomial::from_coeffs(six(j, "fr_coeffs"));
    domain("fn_domain", r.normal.ucs_range, r.normal.p_range);
    domain("fr_domain", r.rolling.ucs_range, r.rolling.p_range);
    const json& cp = object(j, "cp");
    r.cp.a = number(cp, "a");
    r.cp.b = number(cp, "b");
    r.cp.ucs_domain_max = number_or(cp, "ucs_domain_max", 300.0);
    const json& layout = object(j, "layout");
    r.layout.radii_m = numbers(layout, "radii_m");
    r.layout.nominal_spacing_mm = number(layout, "nominal_spacing_mm");
    r.validate();
    return r;
}

std::string physics_digest(const PhysicsRules& rules) { return digest(to_json(rules).dump()); }

GenConfig gen_config_from_json(const json& j) {
    require(j.is_object(), ErrorCode::InvalidInput, "generator configuration must be a JSON object");
    GenConfig c;
    c.sample_count = count_or(j, "sample_count", c.sample_count);
    c.noise_rel = number_or(j, "noise_rel", c.noise_rel);
    c.outlier_rate = number_or(j, "outlier_rate", c.outlier_rate);
    c.outlier_scale = number_or(j, "outlier_scale", 3.0 * c.noise_rel);
    if (j.contains("ranges")) {
        const json& r = object(j, "ranges");
        auto& g = c.ranges;
        g.p = range_from(r, "p", g.p);
        g.rpm = range_from(r, "rpm", g.rpm);
        g.ucs = range_from(r, "ucs", g.ucs);
        g.rqd = range_from(r, "rqd", g.rqd);
        g.cai = range_from(r, "cai", g.cai);
        g.d_avg = range_from(r, "d_avg", g.d_avg);
        g.ci = range_from(r, "ci", g.ci);
        g.peak_acc = range_from(r, "peak_acc", g.peak_acc);
        g.main_freq = range_from(r, "main_freq", g.main_freq);
    }
    if (j.contains("physics")) c.physics = physics_from_json(j.at("physics"));
    c.validate();
    return c;
}

json to_json(const Hyperparams& hp) {
    return {{"h1", hp.h1},         {"h2", hp.h2},         {"alpha", hp.alpha},           {"lambda", hp.lambda},
            {"mu1", hp.mu1},       {"mu2", hp.mu2},       {"mu3", hp.mu3},               {"epochs", hp.epochs},
            {"batch_size", hp.batch_size}, {"momentum", hp.momentum}, {"seed", hp.seed}};
}

Hyperparams hyperparams_from_json(const json& j, bool require_seed) {
    require(j.is_object(), ErrorCode::InvalidInput, "hyperparameters must be a JSON object");
    Hyperparams hp;
    hp.h1 = count_or(j, "h1", hp.h1);
    hp.h2 = count_or(j, "h2", hp.h2);
    hp.alpha = number_or(j, "alpha", hp.alpha);
    hp.lambda = number_or(j, "lambda", hp.lambda);
    hp.mu1 = number_or(j, "mu1", hp.mu1);
    hp.mu2 = number_or(j, "mu2", hp.mu2);
    hp.mu3 = number_or(j, "mu3", hp.mu3);
    hp.epochs = count_or(j, "epochs", hp.epochs);
    hp.batch_size = count_or(j, "batch_size", hp.batch_size);
    hp.momentum = number_or(j, "momentum", hp.momentum);
    if (require_seed && !j.contains("seed")) fail(ErrorCode::InvalidInput, "missing field 'seed' (seeds are never defaulted)");
    hp.seed = count_or(j, "seed", 0);
    hp.validate();
    return hp;
}

Split split_from_json(const json& j) {
    Split s;
    s.train_count = count_or(j, "train_count", s.train_count);
    s.test_count = count_or(j, "test_count", s.test_count);
    return s;
}

json to_json(const Metrics& m) {
    json mape = json::object(), r2 = json::object();
    for (std::size_t k = 0; k < kTargetCount; ++k) {
        mape[std::string(kTargetNames[k])] = m.mape[k];
        r2[std::string(kTargetNames[k])] = m.r2[k];
    }
    return {{"mape", mape}, {"r2", r2}, {"aggregate_mape", m.aggregate_mape}};
}

json to_json(const MappingModel& model) {
    const auto& n = model.net;
    json j = {
        {"schema_version", kModelSchemaVersion},
        {"dims", {{"in", kFeatureCount}, {"h1", n.h1()}, {"h2", n.h2()}, {"out", kTargetCount}}},
        {"activation", "relu"},
        {"layers",
         json::array({{{"weights", matrix_json(n.w1)}, {"bias", matrix_json(n.b1)}},
                      {{"weights", matrix_json(n.w2)}, {"bias", matrix_json(n.b2)}},
                      {{"weights", matrix_json(n.w3)}, {"bias", matrix_json(n.b3)}}})},
        {"normalization",
         {{"feature_min", model.norm.features.min},
          {"feature_max", model.norm.features.max},
          {"target_min", model.norm.targets.min},
          {"target_max", model.norm.targets.max}}},
        {"feature_medians", model.feature_medians},
        {"hyperparams", to_json(model.hp)},
        {"physics_digest", model.physics_digest},
    };
    if (model.has_metrics) j["training_metrics"] = to_json(model.metrics);
    return j;
}

MappingModel model_from_json(const json& j) {
    require(j.is_object(), ErrorCode::InvalidInput, "model file must be a JSON object");
    const auto version = static_cast<int>(number(j, "schema_version"));
    if (version != kModelSchemaVersion) {
        std::ostringstream os;
        os << "unsupported model schema_version " << version << " (expected " << kModelSchemaVersion << ")";
        fail(ErrorCode::InvalidInput, os.str());
    }
    const json& dims = object(j, "dims");
    require(count_or(dims, "in", 0) == kFeatureCount && count_or(dims, "out", 0) == kTargetCount,
            ErrorCode::InvalidInput, "model dims must be in=9, out=4");
    require(j.value("activation", "") == "relu", ErrorCode::InvalidInput, "model activation must be 'relu'");
    const auto h1 = static_cast<Eigen::Index>(count_or(dims, "h1", 0));
    const auto h2 = static_cast<Eigen::Index>(count_or(dims, "h2", 0));
    require(h1 >= 1 && h2 >= 1, ErrorCode::InvalidInput, "model hidden widths must be >= 1");
    require(j.contains("layers") && j.at("layers").is_array() && j.at("layers").size() == 3, ErrorCode::InvalidInput,
            "model must hold exactly 3 layers");

    MappingModel m;
    const auto& layers = j.at("layers");
    m.net.w1 = matrix_from(layers[0], "weights", h1, kFeatureCount);
    m.net.b1 = vector_from(layers[0], "bias", h1);
    m.net.w2 = matrix_from(layers[1], "weights", h2, h1);
    m.net.b2 = vector_from(layers[1], "bias", h2);
    m.net.w3 = matrix_from(layers[2], "weights", kTargetCount, h2);
    m.net.b3 = vector_from(layers[2], "bias", kTargetCount);

    const json& norm = object(j, "normalization");
    m.norm.features.min = fixed_array<kFeatureCount>(norm, "feature_min");
    m.norm.features.max = fixed_array<kFeatureCount>(norm, "feature_max");
    m.norm.targets.min = fixed_array<kTargetCount>(norm, "target_min");
    m.norm.targets.max = fixed_array<kTargetCount>(norm, "target_max");
    m.feature_medians = fixed_array<kFeatureCount>(j, "feature_medians");
    m.hp = hyperparams_from_json(object(j, "hyperparams"), false);
    m.physics_digest = j.value("physics_digest", "");
    if (j.contains("training_metrics")) {
        const json& tm = object(j, "training_metrics");
        const json& mape = object(tm, "mape");
        const json& r2 = object(tm, "r2");
        for (std::size_t k = 0; k < kTargetCount; ++k) {
            const std::string name(kTargetNames[k]);
            m.metrics.mape[k] = number(mape, name.c_str());
            m.metrics.r2[k] = number(r2, name.c_str());
        }
        m.metrics.aggregate_mape = number(tm, "aggregate_mape");
        m.has_metrics = true;
    }
    m.validate();
    return m;
}

std::string model_digest(const MappingModel& model) { return digest(to_json(model).dump()); }

json to_json(const TrainingReport& report) {
    json j = {{"epoch_loss", report.epoch_loss},
              {"seed", report.seed},
              {"wall_seconds", report.wall_seconds},
              {"train_count", report.train_indices.size()},
              {"test_count", report.test_indices.size()},
              {"warnings", report.warnings}};
    j["metrics"] = report.has_metrics ? to_json(report.metrics) : json(nullptr);
    return j;
}

json to_json(const RatedLimits& l) {
    return {{"thrust_rated", l.thrust_rated},
            {"torque_rated", l.torque_rated},
            {"belt_rated", l.belt_rated},
            {"safety_factor_thrust", l.safety_factor_thrust},
            {"safety_factor_torque", l.safety_factor_torque}};
}

RatedLimits limits_from_json(const json& j, RatedLimits l) {
    require(j.is_object(), ErrorCode::InvalidInput, "limits must be a JSON object");
    l.thrust_rated = number_or(j, "thrust_rated", l.thrust_rated);
    l.torque_rated = number_or(j, "torque_rated", l.torque_rated);
    l.belt_rated = number_or(j, "belt_rated", l.belt_rated);
    l.safety_factor_thrust = number_or(j, "safety_factor_thrust", l.safety_factor_thrust);
    l.safety_factor_torque = number_or(j, "safety_factor_torque", l.safety_factor_torque);
    l.validate();
    return l;
}

json to_json(const CostModel& c) {
    return {{"c1", c.c1}, {"c2", c.c2}, {"L", c.length_m}, {"A", c.area_m2},
            {"utilization", c.utilization}, {"hours_per_day", c.hours_per_day}};
}

CostModel cost_from_json(const json& j, CostModel c) {
    require(j.is_object(), ErrorCode::InvalidInput, "cost model must be a JSON object");
    c.c1 = number_or(j, "c1", c.c1);
    c.c2 = number_or(j, "c2", c.c2);
    c.length_m = number_or(j, "L", c.length_m);
    c.area_m2 = number_or(j, "A", c.area_m2);
    c.utilization = number_or(j, "utilization", c.utilization);
    c.hours_per_day = number_or(j, "hours_per_day", c.hours_per_day);
    c.validate();
    return c;
}

json to_json(const GridSpec& g) {
    return {{"rpm_min", g.rpm_min}, {"rpm_max", g.rpm_max}, {"rpm_step", g.rpm_step},
            {"p_min", g.p_min},     {"p_max", g.p_max},     {"p_step", g.p_step}};
}

GridSpec grid_from_json(const json& j, GridSpec g) {
    require(j.is_object(), ErrorCode::InvalidInput, "grid must be a JSON object");
    g.rpm_min = number_or(j, "rpm_min", g.rpm_min);
    g.rpm_max = number_or(j, "rpm_max", g.rpm_max);
    g.rpm_step = number_or(j, "rpm_step", g.rpm_step);
    g.p_min = number_or(j, "p_min", g.p_min);
    g.p_max = number_or(j, "p_max", g.p_max);
    g.p_step = number_or(j, "p_step", g.p_step);
    g.validate();
    return g;
}

json to_json(const DecisionContext& c) {
    return {{"ucs", c.ucs}, {"rqd", c.rqd}, {"cai", c.cai}, {"d_avg", c.d_avg},
            {"ci", c.ci},   {"peak_acc", c.peak_acc}, {"main_freq", c.main_freq}};
}

DecisionContext context_from_json(const json& j) {
    require(j.is_object(), ErrorCode::InvalidInput, "context must be a JSON object");
    DecisionContext c;
    c.ucs = number(j, "ucs");
    c.rqd = number(j, "rqd");
    c.cai = number(j, "cai");
    c.d_avg = number(j, "d_avg");
    c.ci = number(j, "ci");
    c.peak_acc = number(j, "peak_acc");
    c.main_freq = number(j, "main_freq");
    return c;
}

std::string_view to_string(DecisionStatus s) { return s == DecisionStatus::Optimal ? "optimal" : "infeasible"; }

json to_json(const DecisionResult& r) {
    const auto& region = r.region;
    json cells = json::array();
    for (const auto& c : region.cells) {
        cells.push_back({{"rpm", c.rpm},
                         {"p", c.p},
                         {"th", c.predicted[kTh]},
                         {"tor", c.predicted[kTor]},
                         {"hf", c.predicted[kHf]},
                         {"pb", c.predicted[kPb]},
                         {"thrust_ok", c.thrust_ok},
                         {"torque_ok", c.torque_ok},
                         {"belt_ok", c.belt_ok},
                         {"cp_ok", c.cp_ok},
                         {"feasible", c.feasible},
                         {"cost", c.cost.finite() ? json(c.cost.c_t) : json(nullptr)}});
    }
    const bool optimal = r.status == DecisionStatus::Optimal;
    return {
        {"status", to_string(r.status)},
        {"optimum", optimal ? json{{"p", r.p}, {"rpm", r.rpm}} : json(nullptr)},
        {"predicted", optimal ? targets_json(r.predicted) : json(nullptr)},
        {"pr", optimal ? json(r.pr) : json(nullptr)},
        {"cost", optimal ? cost_json(r.cost) : json(nullptr)},
        {"feasible_count", region.feasible_count},
        {"eliminated",
         {{"thrust", region.eliminated.thrust},
          {"torque", region.eliminated.torque},
          {"belt", region.eliminated.belt},
          {"cp", region.eliminated.cp}}},
        {"p_critical", region.p_critical},
        {"grid", {{"rpm_values", region.rpm_values}, {"p_values", region.p_values}, {"cells", cells}}},
    };
}

void write_region_csv(std::ostream& os, const FeasibleRegion& region) {
    os << "rpm,p,th,tor,hf,pb,feasible,cost\n";
    for (const auto& c : region.cells) {
        os << format_double(c.rpm) << ',' << format_double(c.p) << ',' << format_double(c.predicted[kTh]) << ','
           << format_double(c.predicted[kTor]) << ',' << format_double(c.predicted[kHf]) << ','
           << format_double(c.predicted[kPb]) << ',' << (c.feasible ? 1 : 0) << ',' << format_double(c.cost.c_t)
           << '\n';
    }
}

DeductionGrid deduction_grid_from_json(const json& j) {
    require(j.is_object(), ErrorCode::InvalidInput, "deduction ranges must be a JSON object");
    DeductionGrid g;
    auto axis = [&](const char* key, std::vector<double>& levels) {
        if (!j.contains(key)) return;
        const json& r = object(j, key);
        levels = DeductionGrid::levels(number(r, "min"), number(r, "max"), number(r, "step"));
    };
    axis("ucs", g.ucs);
    axis("rqd", g.rqd);
    axis("cai", g.cai);
    g.validate();
    return g;
}

void write_deduction_csv(std::ostream& os, const DeductionStudy& study) {
    os << "ucs,rqd,cai,status,p_opt,rpm_opt,cost\n";
    for (const auto& r : study.rows) {
        os << format_double(r.ucs) << ',' << format_double(r.rqd) << ',' << format_double(r.cai) << ','
           << to_string(r.status) << ',';
        if (r.status == DecisionStatus::Optimal)
            os << format_double(r.p_opt) << ',' << format_double(r.rpm_opt) << ',' << format_double(r.cost);
        else
            os << ",,";
        os << '\n';
    }
}

json to_json(const DeductionStudy& study) {
    json groups = json::object();
    for (const auto& g : study.groups) {
        groups[g.parameter].push_back({{"level", g.level},
                                       {"results", g.results},
                                       {"infeasible", g.infeasible},
                                       {"p", box_json(g.p)},
                                       {"rpm", box_json(g.rpm)}});
    }
    return {{"rows", study.rows.size()}, {"infeasible", study.infeasible_count}, {"groups", groups}};
}

json to_json(const MethodComparison& c) {
    return {{"metric", to_string(c.metric)},
            {"model_avg", c.model_avg},
            {"operator_avg", c.operator_avg},
            {"relative_change", c.relative_change}};
}

json to_json(const MuckIndices& m) {
    return {{"d_avg", m.d_avg},
            {"ci", m.ci},
            {"geometry_class", m.has_geometry ? json(std::string(to_string(m.geometry_class))) : json(nullptr)}};
}

std::vector<CuttingSample> read_cutting_csv(std::istream& is) {
    constexpr std::string_view header = "ucs_mpa,p_mm,s_mm,fn_kn,fr_kn,fragments";
    std::string line;
    require(static_cast<bool>(std::getline(is, line)), ErrorCode::Parse, "cutting-sample CSV is empty");
    require(strip_cr(line) == header, ErrorCode::Parse, "cutting-sample CSV header must be '" + std::string(header) + "'");
    std::vector<CuttingSample> out;
    std::size_t row = 1;
    while (std::getline(is, line)) {
        ++row;
        if (blank(line)) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 6) {
            std::ostringstream os;
            os << "cutting-sample CSV row " << row << " has " << f.size() << " fields, expected 6";
            fail(ErrorCode::Parse, os.str());
        }
        CuttingSample s;
        s.ucs = parse_double(f[0], "ucs_mpa");
        s.p = parse_double(f[1], "p_mm");
        s.s = parse_double(f[2], "s_mm");
        s.f_n = parse_double(f[3], "fn_kn");
        s.f_r = parse_double(f[4], "fr_kn");
        if (f[5] != "0" && f[5] != "1") fail(ErrorCode::Parse, "fragments must be 0 or 1, got '" + f[5] + "'");
        s.fragments_formed = f[5] == "1";
        out.push_back(s);
    }
    return out;
}

SieveAnalysis read_sieve_csv(std::istream& is) {
    std::string line;
    require(static_cast<bool>(std::getline(is, line)), ErrorCode::Parse, "sieve CSV is empty");
    require(strip_cr(line) == "opening_mm,residue_g", ErrorCode::Parse, "sieve CSV header must be 'opening_mm,residue_g'");
    SieveAnalysis a;
    bool pan = false;
    while (std::getline(is, line)) {
        if (blank(line)) continue;
        require(!pan, ErrorCode::Parse, "sieve CSV 'pan' row must be last");
        const auto f = split_csv_line(line);
        require(f.size() == 2, ErrorCode::Parse, "sieve CSV rows need 2 fields");
        if (f[0] == "pan") {
            a.pan_g = parse_double(f[1], "pan weight");
            pan = true;
            continue;
        }
        a.openings_mm.push_back(parse_double(f[0], "opening_mm"));
        a.residues_g.push_back(parse_double(f[1], "residue_g"));
    }
    require(pan, ErrorCode::Parse, "sieve CSV must end with a 'pan,<g>' row");
    a.validate();
    return a;
}

std::vector<ParticleDims> read_particle_csv(std::istream& is) {
    std::string line;
    require(static_cast<bool>(std::getline(is, line)), ErrorCode::Parse, "particle CSV is empty");
    require(strip_cr(line) == "a_mm,b_mm,c_mm", ErrorCode::Parse, "particle CSV header must be 'a_mm,b_mm,c_mm'");
    std::vector<ParticleDims> out;
    while (std::getline(is, line)) {
        if (blank(line)) continue;
        const auto f = split_csv_line(line);
        require(f.size() == 3, ErrorCode::Parse, "particle CSV rows need 3 fields");
        ParticleDims d{parse_double(f[0], "a_mm"), parse_double(f[1], "b_mm"), parse_double(f[2], "c_mm")};
        d.validate();
        out.push_back(d);
    }
    return out;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::Io, "cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::Io, "cannot open '" + path + "' for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) fail(ErrorCode::Io, "failed writing '" + path + "'");
}

json parse_json(std::string_view text, std::string_view what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        fail(ErrorCode::Parse, std::string(what) + ": " + e.what());
    }
}

json read_json_file(const std::string& path) { return parse_json(read_text_file(path), path); }

}  // namespace tbm
