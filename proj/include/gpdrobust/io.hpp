#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "errors.hpp"
#include "estimators/registry.hpp"
#include "influence.hpp"

namespace gpdrobust {

struct LossSeries {
    std::vector<double> observations;
    std::string source;
    std::optional<std::string> column;
    std::size_t rejected_rows = 0; // NaN / infinite cells dropped
};

namespace detail {

inline std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

// One RFC-4180 record; quoted fields may contain commas and doubled quotes.
inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(trim(cur));
    return out;
}

inline std::optional<double> to_number(const std::string& s) {
    if (s.empty()) return std::nullopt;
    double v = 0.0;
    const char* b = s.data();
    if (*b == '+') ++b;
    auto r = std::from_chars(b, s.data() + s.size(), v);
    if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) {
        // from_chars rejects "nan"/"inf" spellings on some libraries
        if (s == "nan" || s == "NaN" || s == "NA") return std::numeric_limits<double>::quiet_NaN();
        return std::nullopt;
    }
    return v;
}

} // namespace detail

// Column by header name, or by zero-based index; the first column by default.
using ColumnSelector = std::variant<std::monostate, std::string, std::size_t>;

inline LossSeries read_csv_column(std::istream& is, const ColumnSelector& col = {}, const std::string& source = "<stream>") {
    std::string line;
    if (!std::getline(is, line)) throw io_error(source + ": empty file (header row required)");
    const auto header = detail::split_csv(line);
    std::size_t j = 0;
    LossSeries out;
    out.source = source;
    if (const auto* name = std::get_if<std::string>(&col)) {
        auto it = std::find(header.begin(), header.end(), *name);
        if (it == header.end()) throw io_error(source + ": no column named '" + *name + "'");
        j = static_cast<std::size_t>(it - header.begin());
    } else if (const auto* idx = std::get_if<std::size_t>(&col)) {
        if (*idx >= header.size()) throw io_error(source + ": column index out of range");
        j = *idx;
    }
    out.column = header[j];
    std::vector<std::string> bad;
    std::size_t row = 1;
    while (std::getline(is, line)) {
        ++row;
        if (detail::trim(line).empty()) continue;
        const auto f = detail::split_csv(line);
        if (j >= f.size()) {
            bad.push_back("row " + std::to_string(row) + ": missing field");
            continue;
        }
        const auto v = detail::to_number(f[j]);
        if (!v) {
            bad.push_back("row " + std::to_string(row) + ": not a number '" + f[j] + "'");
        } else if (!std::isfinite(*v)) {
            ++out.rejected_rows;
        } else {
            out.observations.push_back(*v);
        }
    }
    if (!bad.empty()) {
        std::string msg = source + ": " + std::to_string(bad.size()) + " bad row(s)";
        for (std::size_t i = 0; i < std::min<std::size_t>(bad.size(), 5); ++i) msg += "\n  " + bad[i];
        throw io_error(msg);
    }
    return out;
}

inline LossSeries read_csv_column(const std::string& path, const ColumnSelector& col = {}) {
    std::ifstream f(path);
    if (!f) throw io_error("cannot read " + path);
    return read_csv_column(f, col, path);
}

// Values strictly above u, shifted by u.
inline LossSeries exceedances(const LossSeries& s, double threshold) {
    LossSeries out = s;
    out.observations.clear();
    for (double v : s.observations)
        if (v > threshold) out.observations.push_back(v - threshold);
    if (out.observations.empty()) throw io_error("no observations above the threshold");
    return out;
}

inline LossSeries load_exceedances(const std::string& path, double threshold, const ColumnSelector& col = {}) {
    return exceedances(read_csv_column(path, col), threshold);
}

inline void write_csv_column(std::ostream& os, const LossSeries& s, const std::string& name = "x") {
    os << (s.column ? *s.column : name) << '\n';
    char buf[64];
    for (double v : s.observations) {
        auto r = std::to_chars(buf, buf + sizeof buf, v);
        os.write(buf, r.ptr - buf);
        os << '\n';
    }
}

// ---------------------------------------------------------------- fit report

struct CoordinateInterval {
    double lo = 0.0, hi = 0.0;
};

struct FitReport {
    EstimatorId estimator{};
    EstimateResult result;
    std::size_t n = 0;
    std::optional<double> radius;
    std::array<CoordinateInterval, 2> clt{};
    std::optional<std::array<CoordinateInterval, 2>> bias_aware;
    Mat2 as_var;
    std::optional<double> r0; // reported when RMXE was picked for an unknown radius
};

// 95% intervals from the estimator's IF at the estimate: half-width 1.96·sqrt(asVarᵢᵢ/n),
// and with a radius 1.96·sqrt((asVarᵢᵢ + r²·sup|ψᵢ|²)/n).
inline FitReport make_fit_report(EstimatorId e, const EstimateResult& r, std::size_t n, std::optional<double> radius,
                                 const EstimatorSuite& suite = {}) {
    FitReport rep;
    rep.estimator = e;
    rep.result = r;
    rep.n = n;
    rep.radius = radius;
    if (!r.ok) return rep;
    const InfluenceFunction psi = suite.influence(e, r.params, n);
    rep.as_var = as_var(psi, 1e-9);
    const double dn = static_cast<double>(n);
    const double th[2] = {r.params.xi, r.params.beta};
    for (int i = 0; i < 2; ++i) {
        const double h = 1.96 * std::sqrt(rep.as_var(i, i) / dn);
        rep.clt[i] = {th[i] - h, th[i] + h};
    }
    if (radius) {
        std::array<double, 2> sup{0.0, 0.0};
        if (!psi.bounded()) {
            sup = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
        } else {
            for (double x : detail::ges_grid(psi)) {
                const Vec2 v = psi(x);
                sup[0] = std::max(sup[0], std::abs(v[0]));
                sup[1] = std::max(sup[1], std::abs(v[1]));
            }
            if (psi.tail_limit()) {
                sup[0] = std::max(sup[0], std::abs((*psi.tail_limit())[0]));
                sup[1] = std::max(sup[1], std::abs((*psi.tail_limit())[1]));
            }
        }
        std::array<CoordinateInterval, 2> b{};
        for (int i = 0; i < 2; ++i) {
            const double h = 1.96 * std::sqrt((rep.as_var(i, i) + (*radius) * (*radius) * sup[i] * sup[i]) / dn);
            b[i] = {th[i] - h, th[i] + h};
        }
        rep.bias_aware = b;
    }
    if (e == EstimatorId::RMXE && !radius) rep.r0 = least_favorable_radius(r.params, default_radius_grid(20));
    return rep;
}

} // namespace gpdrobust
