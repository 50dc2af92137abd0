#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace tbm {

// Sieve stack ordered coarsest-first.
struct SieveAnalysis {
    std::vector<double> openings_mm;
    std::vector<double> residues_g;
    double pan_g = 0.0;

    double total_weight() const;
    void validate() const;
};

struct ParticleDims {
    double a = 0.0;  // longest
    double b = 0.0;
    double c = 0.0;  // shortest
    void validate() const;
};

enum class GeometryClass { Flat, FlatElongated, Elongated, Cubic };

std::string_view to_string(GeometryClass g);

struct Percentile {
    double size_mm = 0.0;
    bool clamped = false;
};

Percentile sieve_percentile(const SieveAnalysis& analysis, double q);

struct AverageSize {
    double d16 = 0.0;
    double d50 = 0.0;
    double d84 = 0.0;
    double d_avg = 0.0;
    bool clamped = false;
};

AverageSize average_particle_size(const SieveAnalysis& analysis);
double coarseness_index(const SieveAnalysis& analysis);

inline constexpr double kZinggThreshold = 2.0 / 3.0;

GeometryClass classify_geometry(const ParticleDims& dims, double threshold = kZinggThreshold);

struct MuckIndices {
    double d_avg = 0.0;
    double ci = 0.0;
    // Majority class over the measured particles; absent when none were given.
    bool has_geometry = false;
    GeometryClass geometry_class = GeometryClass::Cubic;
};

MuckIndices muck_indices(const SieveAnalysis& analysis, const std::vector<ParticleDims>& particles);

}  // namespace tbm
