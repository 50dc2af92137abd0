#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace tbm {

inline constexpr std::size_t kFeatureCount = 9;
inline constexpr std::size_t kTargetCount = 4;

using FeatureVector = std::array<double, kFeatureCount>;  // p, rpm, ucs, rqd, cai, d_avg, ci, peak_acc, main_freq
using TargetVector = std::array<double, kTargetCount>;    // hf, th, tor, pb

inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "p", "rpm", "ucs", "rqd", "cai", "d_avg", "ci", "peak_acc", "main_freq"};
inline constexpr std::array<std::string_view, kTargetCount> kTargetNames = {"hf", "th", "tor", "pb"};

enum Feature : std::size_t { kP = 0, kRpm, kUcs, kRqd, kCai, kDAvg, kCi, kPeakAcc, kMainFreq };
enum Target : std::size_t { kHf = 0, kTh, kTor, kPb };

struct FieldSample {
    double p = 0.0;
    double rpm = 0.0;
    double ucs = 0.0;
    double rqd = 0.0;
    double cai = 0.0;
    double d_avg = 0.0;
    double ci = 0.0;
    double peak_acc = 0.0;
    double main_freq = 0.0;
    double th = 0.0;
    double tor = 0.0;
    double hf = 0.0;
    double pb = 0.0;
    bool is_outlier = false;  // generator bookkeeping only

    FeatureVector features() const { return {p, rpm, ucs, rqd, cai, d_avg, ci, peak_acc, main_freq}; }
    TargetVector targets() const { return {hf, th, tor, pb}; }
    void set_targets(const TargetVector& t) {
        hf = t[kHf];
        th = t[kTh];
        tor = t[kTor];
        pb = t[kPb];
    }
};

using Dataset = std::vector<FieldSample>;

// Shortest round-trip decimal representation.
std::string format_double(double v);

void write_dataset_csv(std::ostream& os, const Dataset& data);
Dataset read_dataset_csv(std::istream& is);

// Minimal CSV helpers shared by the file readers.
std::vector<std::string> split_csv_line(std::string_view line);
double parse_double(std::string_view field, std::string_view what);

}  // namespace tbm
