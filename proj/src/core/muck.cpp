#include "muck.hpp"

#include "error.hpp"

#include <array>
#include <cmath>
#include <numeric>

namespace tbm {

double SieveAnalysis::total_weight() const {
    return std::accumulate(residues_g.begin(), residues_g.end(), 0.0) + pan_g;
}

void SieveAnalysis::validate() const {
    require(!openings_mm.empty(), ErrorCode::InvalidInput, "sieve analysis needs at least one sieve");
    require(openings_mm.size() == residues_g.size(), ErrorCode::InvalidInput,
            "sieve openings and residues differ in length");
    for (std::size_t i = 0; i < openings_mm.size(); ++i) {
        require(std::isfinite(openings_mm[i]) && openings_mm[i] > 0.0, ErrorCode::InvalidInput,
                "sieve openings must be positive");
        if (i > 0)
            require(openings_mm[i] < openings_mm[i - 1], ErrorCode::InvalidInput,
                    "sieve openings must be strictly decreasing (coarsest first)");
        require(std::isfinite(residues_g[i]) && residues_g[i] >= 0.0, ErrorCode::InvalidInput,
                "sieve residues must be non-negative");
    }
    require(std::isfinite(pan_g) && pan_g >= 0.0, ErrorCode::InvalidInput, "pan weight must be non-negative");
    require(total_weight() > 0.0, ErrorCode::InvalidInput, "total muck weight must be positive");
}

void ParticleDims::validate() const {
    require(std::isfinite(a) && std::isfinite(b) && std::isfinite(c), ErrorCode::InvalidInput,
            "particle dimensions must be finite");
    require(a >= b && b >= c && c > 0.0, ErrorCode::InvalidInput, "particle dimensions must satisfy a >= b >= c > 0");
}

std::string_view to_string(GeometryClass g) {
    switch (g) {
        case GeometryClass::Flat: return "flat";
        case GeometryClass::FlatElongated: return "flat_elongated";
        case GeometryClass::Elongated: return "elongated";
        case GeometryClass::Cubic: return "cubic";
    }
    return "unknown";
}

Percentile sieve_percentile(const SieveAnalysis& analysis, double q) {
    analysis.validate();
    require(std::isfinite(q) && q > 0.0 && q < 1.0, ErrorCode::InvalidInput, "percentile fraction must be in (0, 1)");

    const double w = analysis.total_weight();
    const std::size_t n = analysis.openings_mm.size();

    // Cumulative passing fraction at each opening, finest first.
    std::vector<double> passing(n);
    double finer = analysis.pan_g;
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t i = n - 1 - k;
        passing[k] = finer / w;
        finer += analysis.residues_g[i];
    }
    auto opening = [&](std::size_t k) { return analysis.openings_mm[n - 1 - k]; };

    if (passing[0] >= q) {
        if (passing[0] == q) return {opening(0), false};
        return {opening(0), true};
    }
    for (std::size_t k = 1; k < n; ++k) {
        if (passing[k] < q) continue;
        if (passing[k] == q) return {opening(k), false};
        const double lo = std::log(opening(k - 1));
        const double hi = std::log(opening(k));
        const double t = (q - passing[k - 1]) / (passing[k] - passing[k - 1]);
        return {std::exp(lo + t * (hi - lo)), false};
    }
    return {opening(n - 1), true};
}

AverageSize average_particle_size(const SieveAnalysis& analysis) {
    const auto d16 = sieve_percentile(analysis, 0.16);
    const auto d50 = sieve_percentile(analysis, 0.50);
    const auto d84 = sieve_percentile(analysis, 0.84);
    AverageSize out;
    out.d16 = d16.size_mm;
    out.d50 = d50.size_mm;
    out.d84 = d84.size_mm;
    out.d_avg = (d16.size_mm + d50.size_mm + d84.size_mm) / 3.0;
    out.clamped = d16.clamped || d50.clamped || d84.clamped;
    return out;
}

double coarseness_index(const SieveAnalysis& analysis) {
    analysis.validate();
    const double w = analysis.total_weight();
    double retained = 0.0;
    double ci = 0.0;
    for (double r : analysis.residues_g) {
        retained += r;
        ci += 100.0 * retained / w;
    }
    return ci;
}

GeometryClass classify_geometry(const ParticleDims& dims, double threshold) {
    dims.validate();
    const double width_to_length = dims.b / dims.a;
    const double thickness_to_width = dims.c / dims.b;
    const bool wide = width_to_length > threshold;
    const bool thick = thickness_to_width > threshold;
    if (wide && thick) return GeometryClass::Cubic;
    if (wide) return GeometryClass::Flat;
    if (thick) return GeometryClass::Elongated;
    return GeometryClass::FlatElongated;
}

MuckIndices muck_indices(const SieveAnalysis& analysis, const std::vector<ParticleDims>& particles) {
    MuckIndices out;
    out.d_avg = average_particle_size(analysis).d_avg;
    out.ci = coarseness_index(analysis);
    if (!particles.empty()) {
        std::array<std::size_t, 4> counts{};
        for (const auto& p : particles) ++counts[static_cast<std::size_t>(classify_geometry(p))];
        std::size_t best = 0;
        for (std::size_t i = 1; i < counts.size(); ++i)
            if (counts[i] > counts[best]) best = i;
        out.has_geometry = true;
        out.geometry_class = static_cast<GeometryClass>(best);
    }
    return out;
}

}  // namespace tbm
