#include "synthetic.hpp"

#include "error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace tbm {

namespace {

void check_range(const Range& r, const char* name) {
    require(std::isfinite(r.min) && std::isfinite(r.max) && r.min < r.max, ErrorCode::InvalidInput,
            std::string("generation range for ") + name + " must satisfy min < max");
}

double unit(double v, const Range& r) { return (v - r.min) / (r.max - r.min); }

double within(const Range& r, double fraction) { return r.min + (r.max - r.min) * std::clamp(fraction, 0.0, 1.0); }

}  // namespace

void FeatureRanges::validate() const {
    check_range(p, "p");
    check_range(rpm, "rpm");
    check_range(ucs, "ucs");
    check_range(rqd, "rqd");
    check_range(cai, "cai");
    check_range(d_avg, "d_avg");
    check_range(ci, "ci");
    check_range(peak_acc, "peak_acc");
    check_range(main_freq, "main_freq");
    require(p.min >= 0.0 && rpm.min >= 0.0 && ucs.min >= 0.0, ErrorCode::InvalidInput,
            "p, rpm and ucs ranges must be non-negative");
}

void GenConfig::validate() const {
    ranges.validate();
    require(std::isfinite(noise_rel) && noise_rel >= 0.0, ErrorCode::InvalidInput, "noise_rel must be >= 0");
    require(outlier_rate >= 0.0 && outlier_rate <= 1.0, ErrorCode::InvalidInput, "outlier_rate must be in [0, 1]");
    require(std::isfinite(outlier_scale) && outlier_scale >= 0.0, ErrorCode::InvalidInput,
            "outlier_scale must be >= 0");
    physics.validate();
}

namespace truth {

double cutter_life(double ucs, double cai, double p, double rpm) {
    const double exponent = kAlphaUcs * ucs / 300.0 + kAlphaCai * cai / 5.0 + kAlphaAdvance * (p * rpm) / 160.0;
    return kHf0 * std::exp(-exponent);
}

double belt_volume(double p, double rpm) { return kBeltGain * (p * rpm * 0.06) * kCrossSectionM2 * kBulking; }

double thrust(const PhysicsRules& rules, double ucs, double p) {
    return std::max(0.0, cutterhead_thrust(rules, rules.layout, ucs, p).value);
}

double torque(const PhysicsRules& rules, double ucs, double p) {
    return std::max(0.0, cutterhead_torque(rules, rules.layout, ucs, p).value);
}

}  // namespace truth

TargetVector PhysicsStubMapping::predict(const FeatureVector& x) const {
    TargetVector t{};
    t[kHf] = truth::cutter_life(x[kUcs], x[kCai], x[kP], x[kRpm]);
    t[kTh] = truth::thrust(rules_, x[kUcs], x[kP]);
    t[kTor] = truth::torque(rules_, x[kUcs], x[kP]);
    t[kPb] = zero_belt_ ? 0.0 : truth::belt_volume(x[kP], x[kRpm]);
    return t;
}

std::vector<TargetVector> PhysicsStubMapping::predict_batch(std::span<const FeatureVector> inputs) const {
    std::vector<TargetVector> out;
    out.reserve(inputs.size());
    for (const auto& x : inputs) out.push_back(predict(x));
    return out;
}

Dataset generate_dataset(const GenConfig& config) {
    config.validate();
    const auto& r = config.ranges;
    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto draw = [&](const Range& range) { return range.min + (range.max - range.min) * u01(rng); };
    auto noisy = [&](double v) { return std::max(0.0, v * (1.0 + config.noise_rel * gauss(rng))); };

    Dataset data;
    data.reserve(config.sample_count);
    for (std::size_t i = 0; i < config.sample_count; ++i) {
        FieldSample s;
        s.p = draw(r.p);
        s.rpm = draw(r.rpm);
        s.ucs = draw(r.ucs);
        s.rqd = draw(r.rqd);
        s.cai = draw(r.cai);
        s.d_avg = draw(r.d_avg);
        s.ci = draw(r.ci);

        // Vibration: affine in strength and integrity, plus noise, kept inside the box.
        const double un = unit(s.ucs, r.ucs);
        const double qn = unit(s.rqd, r.rqd);
        s.peak_acc = within(r.peak_acc, 0.15 + 0.5 * un + 0.25 * (1.0 - qn) + 0.05 * gauss(rng));
        s.main_freq = within(r.main_freq, 0.2 + 0.4 * (1.0 - un) + 0.3 * qn + 0.05 * gauss(rng));

        s.th = noisy(truth::thrust(config.physics, s.ucs, s.p));
        s.tor = noisy(truth::torque(config.physics, s.ucs, s.p));
        s.hf = noisy(truth::cutter_life(s.ucs, s.cai, s.p, s.rpm));
        s.pb = noisy(truth::belt_volume(s.p, s.rpm));
        data.push_back(s);
    }
    if (config.outlier_rate > 0.0)
        data = contaminate(data, config.outlier_rate, config.outlier_scale, config.seed ^ 0x9E3779B97F4A7C15ULL);
    return data;
}

Dataset contaminate(const Dataset& data, double outlier_rate, double outlier_scale, std::uint64_t seed) {
    require(outlier_rate >= 0.0 && outlier_rate <= 1.0, ErrorCode::InvalidInput, "outlier_rate must be in [0, 1]");
    require(std::isfinite(outlier_scale) && outlier_scale >= 0.0, ErrorCode::InvalidInput,
            "outlier_scale must be >= 0");
    Dataset out = data;
    const auto flagged = static_cast<std::size_t>(std::floor(outlier_rate * static_cast<double>(data.size())));
    if (flagged == 0) return out;

    std::mt19937_64 rng(seed);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);

    std::bernoulli_distribution sign(0.5);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (std::size_t k = 0; k < flagged; ++k) {
        auto& s = out[order[k]];
        auto t = s.targets();
        for (double& v : t) {
            const double dir = sign(rng) ? 1.0 : -1.0;
            v = std::max(0.0, v * (1.0 + dir * outlier_scale * (1.0 + std::abs(gauss(rng)))));
        }
        s.set_targets(t);
        s.is_outlier = true;
    }
    return out;
}

}  // namespace tbm
