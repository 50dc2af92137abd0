#include "dataset.hpp"

#include "error.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace tbm {

namespace {

constexpr std::string_view kDatasetHeader = "p,rpm,ucs,rqd,cai,d_avg,ci,peak_acc,main_freq,th,tor,hf,pb";

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

}  // namespace

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> out;
    line = trim(line);
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        out.emplace_back(trim(line.substr(start, pos == std::string_view::npos ? line.npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

double parse_double(std::string_view field, std::string_view what) {
    field = trim(field);
    double v = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    if (!field.empty() && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || field.empty()) {
        std::ostringstream os;
        os << "cannot parse " << what << " value '" << field << "'";
        fail(ErrorCode::Parse, os.str());
    }
    return v;
}

void write_dataset_csv(std::ostream& os, const Dataset& data) {
    os << kDatasetHeader << '\n';
    for (const auto& s : data) {
        const auto f = s.features();
        const auto t = s.targets();
        for (double v : f) os << format_double(v) << ',';
        os << format_double(t[kTh]) << ',' << format_double(t[kTor]) << ',' << format_double(t[kHf]) << ','
           << format_double(t[kPb]) << '\n';
    }
}

Dataset read_dataset_csv(std::istream& is) {
    std::string line;
    require(static_cast<bool>(std::getline(is, line)), ErrorCode::Parse, "dataset CSV is empty");
    require(trim(line) == kDatasetHeader, ErrorCode::Parse,
            "dataset CSV header must be '" + std::string(kDatasetHeader) + "'");
    Dataset data;
    std::size_t row = 1;
    while (std::getline(is, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 13) {
            std::ostringstream os;
            os << "dataset CSV row " << row << " has " << fields.size() << " fields, expected 13";
            fail(ErrorCode::Parse, os.str());
        }
        std::array<double, 13> v{};
        for (std::size_t i = 0; i < 13; ++i) v[i] = parse_double(fields[i], "dataset");
        FieldSample s;
        s.p = v[0];
        s.rpm = v[1];
        s.ucs = v[2];
        s.rqd = v[3];
        s.cai = v[4];
        s.d_avg = v[5];
        s.ci = v[6];
        s.peak_acc = v[7];
        s.main_freq = v[8];
        s.th = v[9];
        s.tor = v[10];
        s.hf = v[11];
        s.pb = v[12];
        data.push_back(s);
    }
    return data;
}

}  // namespace tbm
