#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "error.hpp"
#include "muck.hpp"

#include <cmath>
#include <random>

using namespace tbm;

namespace {

SieveAnalysis paper_stack(std::vector<double> residues, double pan) {
    return {{63, 37.5, 19, 9.5, 4.75, 2.36}, std::move(residues), pan};
}

// Fraction passing each opening, coarsest-first.
std::vector<double> passing(const SieveAnalysis& a) {
    std::vector<double> out;
    double retained = 0.0;
    for (double r : a.residues_g) {
        retained += r;
        out.push_back(1.0 - retained / a.total_weight());
    }
    return out;
}

}  // namespace

TEST_CASE("percentile on a knot") {
    // 50 g of 100 g pass the 9.5 mm sieve.
    const auto a = paper_stack({0, 10, 20, 20, 30, 10}, 10);
    const auto p = sieve_percentile(a, 0.5);
    CHECK(p.size_mm == doctest::Approx(9.5).epsilon(1e-15));
    CHECK_FALSE(p.clamped);
}

TEST_CASE("all weight in pan clamps to the finest opening") {
    const auto a = paper_stack({0, 0, 0, 0, 0, 0}, 250);
    for (double q : {0.16, 0.5, 0.84}) {
        const auto p = sieve_percentile(a, q);
        CHECK(p.size_mm == 2.36);
        CHECK(p.clamped);
    }
    CHECK(average_particle_size(a).clamped);
    CHECK(coarseness_index(a) == 0.0);
}

TEST_CASE("two-sieve log-linear interpolation") {
    // passing 70% at 19 mm, 30% at 4.75 mm
    const SieveAnalysis a{{19, 4.75}, {30, 40}, 30};
    const double expect = std::exp(std::log(4.75) + (0.5 - 0.3) / (0.7 - 0.3) * (std::log(19.0) - std::log(4.75)));
    CHECK(sieve_percentile(a, 0.5).size_mm == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("average particle size") {
    // D16 = 5, D50 = 12, D84 = 28, each on a knot.
    const SieveAnalysis a{{40, 28, 12, 5}, {0, 16, 34, 34}, 16};
    const auto d = average_particle_size(a);
    CHECK(d.d16 == doctest::Approx(5.0).epsilon(1e-14));
    CHECK(d.d50 == doctest::Approx(12.0).epsilon(1e-14));
    CHECK(d.d84 == doctest::Approx(28.0).epsilon(1e-14));
    CHECK(d.d_avg == doctest::Approx(15.0).epsilon(1e-14));

    // Uniform single-size muck: everything sits on the 9.5 mm sieve, so the
    // curve jumps from 0 to 1 between 9.5 and 19 mm; percentiles stay in that span.
    const auto single = paper_stack({0, 0, 0, 100, 0, 0}, 0);
    const auto ds = average_particle_size(single);
    CHECK(ds.d_avg >= 9.5);
    CHECK(ds.d_avg <= 19.0);
}

TEST_CASE("percentile matches dense-grid inversion on a lognormal profile") {
    const double mu = std::log(12.0), sigma = 0.8;
    auto cdf = [&](double d) { return 0.5 * std::erfc(-(std::log(d) - mu) / (sigma * std::sqrt(2.0))); };
    SieveAnalysis a;
    a.openings_mm = {63, 37.5, 19, 9.5, 4.75, 2.36};
    double above = 1.0;
    for (double o : a.openings_mm) {
        const double pass = cdf(o);
        a.residues_g.push_back(1000.0 * (above - pass));
        above = pass;
    }
    a.pan_g = 1000.0 * above;

    // Oracle: walk a dense log grid over the piecewise log-linear curve.
    const auto pass = passing(a);
    auto curve = [&](double logd) -> double {
        for (std::size_t i = 0; i + 1 < a.openings_mm.size(); ++i) {
            const double hi = std::log(a.openings_mm[i]), lo = std::log(a.openings_mm[i + 1]);
            if (logd <= hi && logd >= lo) return pass[i + 1] + (logd - lo) / (hi - lo) * (pass[i] - pass[i + 1]);
        }
        return NAN;
    };
    for (double q : {0.16, 0.5, 0.84}) {
        double best = NAN;
        const double lo = std::log(2.36), hi = std::log(63.0);
        for (int k = 0; k <= 2000000; ++k) {
            const double x = lo + (hi - lo) * k / 2000000.0;
            if (curve(x) >= q) {
                best = std::exp(x);
                break;
            }
        }
        CHECK(sieve_percentile(a, q).size_mm == doctest::Approx(best).epsilon(1e-5));
    }
}

TEST_CASE("percentile monotone in q") {
    const auto a = paper_stack({5, 15, 25, 20, 15, 10}, 10);
    double prev = 0.0;
    for (int k = 1; k < 100; ++k) {
        const double d = sieve_percentile(a, k / 100.0).size_mm;
        CHECK(d >= prev);
        prev = d;
    }
}

TEST_CASE("percentile input errors") {
    const auto zero = paper_stack({0, 0, 0, 0, 0, 0}, 0);
    try {
        sieve_percentile(zero, 0.5);
        FAIL("expected invalid input");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InvalidInput);
    }
    CHECK_THROWS_AS(coarseness_index(zero), Error);
    const SieveAnalysis unordered{{2.36, 4.75}, {1, 1}, 0};
    CHECK_THROWS_AS(sieve_percentile(unordered, 0.5), Error);
    const SieveAnalysis mismatch{{19, 9.5}, {1}, 0};
    CHECK_THROWS_AS(sieve_percentile(mismatch, 0.5), Error);
    const SieveAnalysis negative{{19, 9.5}, {1, -1}, 3};
    CHECK_THROWS_AS(sieve_percentile(negative, 0.5), Error);
}

TEST_CASE("coarseness index") {
    const SieveAnalysis three{{19, 9.5, 4.75}, {50, 30, 20}, 0};
    CHECK(coarseness_index(three) == doctest::Approx(230.0).epsilon(1e-14));

    const auto top = paper_stack({7, 0, 0, 0, 0, 0}, 0);
    CHECK(coarseness_index(top) == doctest::Approx(600.0).epsilon(1e-14));
}

TEST_CASE("coarseness index is scale invariant and increases under coarsening") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> w(0.0, 50.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> r(6);
        for (auto& v : r) v = w(rng);
        const auto a = paper_stack(r, w(rng));
        const double ci = coarseness_index(a);
        CHECK(ci >= 0.0);
        CHECK(ci <= 600.0);

        auto scaled = a;
        for (auto& v : scaled.residues_g) v *= 3.7;
        scaled.pan_g *= 3.7;
        CHECK(coarseness_index(scaled) == doctest::Approx(ci).epsilon(1e-12));

        // Move mass from sieve j+1 to sieve j (coarser).
        const std::size_t j = trial % 5;
        if (a.residues_g[j + 1] > 1e-9) {
            auto moved = a;
            const double m = moved.residues_g[j + 1] / 2;
            moved.residues_g[j + 1] -= m;
            moved.residues_g[j] += m;
            CHECK(coarseness_index(moved) > ci);
        }
    }
}

TEST_CASE("Zingg geometry classes") {
    CHECK(classify_geometry({10, 9, 8}) == GeometryClass::Cubic);
    CHECK(classify_geometry({10, 9, 3}) == GeometryClass::Flat);
    CHECK(classify_geometry({10, 5, 4}) == GeometryClass::Elongated);
    CHECK(classify_geometry({10, 5, 2}) == GeometryClass::FlatElongated);
    CHECK(classify_geometry({4, 4, 4}) == GeometryClass::Cubic);
    CHECK(to_string(GeometryClass::FlatElongated) == "flat_elongated");
    CHECK_THROWS_AS(classify_geometry({1, 2, 3}), Error);
    CHECK_THROWS_AS(classify_geometry({1, 1, 0}), Error);
}

TEST_CASE("geometry class is scale invariant") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    for (int i = 0; i < 500; ++i) {
        const double a = 10.0, b = a * u(rng), c = b * u(rng);
        for (double k : {0.01, 3.0, 250.0}) CHECK(classify_geometry({a * k, b * k, c * k}) == classify_geometry({a, b, c}));
    }
}

TEST_CASE("muck indices bundle") {
    const auto a = paper_stack({0, 10, 20, 20, 30, 10}, 10);
    const std::vector<ParticleDims> parts = {{10, 9, 8}, {10, 9, 3}, {10, 9, 2}, {10, 5, 4}};
    const auto m = muck_indices(a, parts);
    CHECK(m.has_geometry);
    CHECK(m.geometry_class == GeometryClass::Flat);
    CHECK(m.d_avg == doctest::Approx(average_particle_size(a).d_avg));
    CHECK(m.ci == doctest::Approx(coarseness_index(a)));
    CHECK_FALSE(muck_indices(a, {}).has_geometry);
}
