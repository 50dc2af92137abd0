#pragma once

#include "dataset.hpp"
#include "mapping.hpp"
#include "physics.hpp"

#include <cstdint>

namespace tbm {

// Feature generation box; defaults span the field statistics' min/max.
struct FeatureRanges {
    Range p{7.0, 15.0};
    Range rpm{4.5, 6.7};
    Range ucs{30.3, 129.3};
    Range rqd{11.0, 79.4};
    Range cai{1.9, 4.5};
    Range d_avg{8.86, 27.69};
    Range ci{306.0, 478.0};
    Range peak_acc{1.6, 2.85};
    Range main_freq{110.8, 116.2};

    void validate() const;
};

struct GenConfig {
    FeatureRanges ranges;
    double noise_rel = 0.05;
    double outlier_rate = 0.0;
    double outlier_scale = 0.15;  // relative magnitude, 3x the default noise
    std::size_t sample_count = 306;
    std::uint64_t seed = 0;
    PhysicsRules physics = PhysicsRules::paper_defaults();

    void validate() const;
};

// Noiseless synthetic laws. Documented stand-ins, not field fidelity.
namespace truth {

inline constexpr double kCrossSectionM2 = 28.274333882308138;  // π·3²
inline constexpr double kBulking = 1.6;
inline constexpr double kBeltGain = 3.211;
inline constexpr double kHf0 = 2705.0;
inline constexpr double kAlphaUcs = 2.0;
inline constexpr double kAlphaCai = 1.0;
inline constexpr double kAlphaAdvance = 1.54;

// m³/cutter; decreasing in UCS·CAI load and in p·rpm.
double cutter_life(double ucs, double cai, double p, double rpm);
// m³/h from advance p·rpm [mm/min].
double belt_volume(double p, double rpm);
double thrust(const PhysicsRules& rules, double ucs, double p);  // clamped at 0
double torque(const PhysicsRules& rules, double ucs, double p);  // clamped at 0

}  // namespace truth

// Noiseless ground truth as a mapping: th/tor from the physics rules (clamped
// at 0), hf and pb from the synthetic laws. `zero_belt` pins pb to 0.
class PhysicsStubMapping final : public Mapping {
public:
    explicit PhysicsStubMapping(PhysicsRules rules, bool zero_belt = false)
        : rules_(std::move(rules)), zero_belt_(zero_belt) {}
    std::vector<TargetVector> predict_batch(std::span<const FeatureVector> inputs) const override;
    TargetVector predict(const FeatureVector& x) const;

private:
    PhysicsRules rules_;
    bool zero_belt_;
};

Dataset generate_dataset(const GenConfig& config);

// Returns a copy with floor(rate·n) flagged samples whose targets are scaled by
// 1 ± scale·(1 + |z|).
Dataset contaminate(const Dataset& data, double outlier_rate, double outlier_scale, std::uint64_t seed);

}  // namespace tbm
