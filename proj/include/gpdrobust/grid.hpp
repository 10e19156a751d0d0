#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "influence.hpp"
#include "lagrange.hpp"
#include "optimal.hpp"
#include "parallel.hpp"

namespace gpdrobust {

struct InterpolationGrid {
    IfKind kind = IfKind::OMSE; // MBRE, OMSE or RMXE
    std::optional<double> radius; // OMSE only
    std::vector<double> xi;
    std::vector<LagrangeTriple> triples; // solved at (ξᵢ, 1)
    std::vector<double> dropped;         // nodes where the solver failed
    int version = 1;

    bool operator==(const InterpolationGrid& o) const;
};

inline bool InterpolationGrid::operator==(const InterpolationGrid& o) const {
    return kind == o.kind && radius == o.radius && xi == o.xi && triples == o.triples;
}

inline std::vector<double> default_xi_grid(std::size_t n = 61, double lo = 0.01, double hi = 3.0) {
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) g[i] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / (n - 1.0);
    return g;
}

inline LagrangeTriple solve_triple(IfKind kind, double xi, std::optional<double> r, const SolverSettings& s = {}) {
    const GpdParams p{xi, 1.0, 0.0};
    switch (kind) {
    case IfKind::MBRE: return solve_mbre(p, s).triple;
    case IfKind::OMSE:
        if (!r) throw invalid_parameter("OMSE grid needs a radius");
        return solve_omse(p, *r, s).triple;
    case IfKind::RMXE: return solve_rmxe(p, s).triple;
    default: throw invalid_parameter("grid kind must be MBRE, OMSE or RMXE");
    }
}

inline InterpolationGrid build_grid(IfKind kind, std::vector<double> xi_grid, std::optional<double> r = std::nullopt,
                                    const SolverSettings& s = {}) {
    if (kind != IfKind::MBRE && kind != IfKind::OMSE && kind != IfKind::RMXE)
        throw invalid_parameter("grid kind must be MBRE, OMSE or RMXE");
    if (xi_grid.size() < 2) throw invalid_parameter("grid needs at least two nodes");
    for (std::size_t i = 0; i < xi_grid.size(); ++i) {
        if (!(2.0 * xi_grid[i] + 1.0 > 0.0)) throw regularity_error("grid node outside 2xi + 1 > 0");
        if (i > 0 && !(xi_grid[i] > xi_grid[i - 1])) throw invalid_parameter("grid must be strictly ascending");
    }
    if (kind == IfKind::OMSE && !(r && *r > 0.0)) throw invalid_parameter("OMSE grid needs a positive radius");
    std::vector<std::optional<LagrangeTriple>> solved(xi_grid.size());
    parallel_for(xi_grid.size(), [&](std::size_t i) {
        try {
            solved[i] = solve_triple(kind, xi_grid[i], r, s);
        } catch (const std::exception&) {
            solved[i].reset();
        }
    });
    InterpolationGrid g;
    g.kind = kind;
    if (kind == IfKind::OMSE) g.radius = r;
    for (std::size_t i = 0; i < xi_grid.size(); ++i) {
        if (solved[i] && std::isfinite(solved[i]->b)) {
            g.xi.push_back(xi_grid[i]);
            g.triples.push_back(*solved[i]);
        } else {
            g.dropped.push_back(xi_grid[i]);
        }
    }
    if (5 * g.dropped.size() > xi_grid.size() || g.xi.size() < 2)
        throw solver_error("grid build: too many node failures", 0, static_cast<double>(g.dropped.size()));
    return g;
}

namespace detail {

// Monotone piecewise cubic (Fritsch–Carlson slopes).
class Pchip {
public:
    Pchip(const std::vector<double>& x, const std::vector<double>& y) : x_(x), y_(y), d_(x.size()) {
        const std::size_t n = x.size();
        std::vector<double> h(n - 1), del(n - 1);
        for (std::size_t i = 0; i + 1 < n; ++i) {
            h[i] = x[i + 1] - x[i];
            del[i] = (y[i + 1] - y[i]) / h[i];
        }
        if (n == 2) {
            d_[0] = d_[1] = del[0];
            return;
        }
        for (std::size_t i = 1; i + 1 < n; ++i) {
            if (del[i - 1] * del[i] <= 0.0) {
                d_[i] = 0.0;
            } else {
                const double w1 = 2.0 * h[i] + h[i - 1], w2 = h[i] + 2.0 * h[i - 1];
                d_[i] = (w1 + w2) / (w1 / del[i - 1] + w2 / del[i]);
            }
        }
        d_[0] = end_slope(h[0], h[1], del[0], del[1]);
        d_[n - 1] = end_slope(h[n - 2], h[n - 3], del[n - 2], del[n - 3]);
    }

    double operator()(double t) const {
        const std::size_t n = x_.size();
        std::size_t i = static_cast<std::size_t>(std::upper_bound(x_.begin(), x_.end(), t) - x_.begin());
        i = std::clamp<std::size_t>(i, 1, n - 1) - 1;
        const double h = x_[i + 1] - x_[i];
        const double s = (t - x_[i]) / h;
        const double h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s), h10 = s * (1.0 - s) * (1.0 - s);
        const double h01 = s * s * (3.0 - 2.0 * s), h11 = s * s * (s - 1.0);
        return h00 * y_[i] + h10 * h * d_[i] + h01 * y_[i + 1] + h11 * h * d_[i + 1];
    }

private:
    static double end_slope(double h0, double h1, double d0, double d1) {
        double d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if (d * d0 <= 0.0) d = 0.0;
        else if (d0 * d1 <= 0.0 && std::abs(d) > 3.0 * std::abs(d0)) d = 3.0 * d0;
        return d;
    }

    std::vector<double> x_, y_, d_;
};

inline std::array<double, 7> flatten(const LagrangeTriple& t) {
    return {t.A(0, 0), t.A(0, 1), t.A(1, 0), t.A(1, 1), t.a[0], t.a[1], t.b};
}

} // namespace detail

// Componentwise monotone-cubic interpolation of the node triples at ξ (β = 1).
inline LagrangeTriple interpolate_triple(const InterpolationGrid& g, double xi) {
    if (g.xi.size() < 2) throw invalid_parameter("grid has fewer than two nodes");
    if (!(xi >= g.xi.front() && xi <= g.xi.back())) throw domain_error("xi outside the grid hull (no extrapolation)");
    std::array<double, 7> out{};
    std::vector<double> col(g.xi.size());
    for (std::size_t c = 0; c < 7; ++c) {
        for (std::size_t i = 0; i < g.xi.size(); ++i) col[i] = detail::flatten(g.triples[i])[c];
        out[c] = detail::Pchip(g.xi, col)(xi);
    }
    return {Mat2{out[0], out[1], out[2], out[3]}, {out[4], out[5]}, out[6]};
}

struct InterpolationSettings {
    bool fast = false; // skip re-centering/standardization
    double quad_tol = 1e-10;
};

// ψ at p from the grid. The default path re-centers with the interpolated
// weights: ψ♯ = A♯(Λ − z♯)w, which satisfies the side conditions exactly.
inline InfluenceFunction interpolate_if(const InterpolationGrid& g, const GpdParams& p,
                                        const InterpolationSettings& s = {}) {
    p.validate();
    if (p.mu != 0.0) throw invalid_parameter("influence functions assume mu = 0");
    const GpdParams p1{p.xi, 1.0, 0.0};
    const LagrangeTriple t = interpolate_triple(g, p.xi);
    const WeightedNorm nb{1.0};
    if (s.fast) return rescale_if(make_optimal_if(g.kind, p1, t, nb, g.radius), p.beta);

    const bool normalize = g.kind == IfKind::MBRE;
    const auto rule = normalize ? detail::WeightRule::Normalize : detail::WeightRule::Clip;
    // For MBRE the weight is b/n(Y); weighted_moments uses 1/n, and the factor b cancels in ψ♯.
    const auto m = detail::weighted_moments(t, rule, p1, nb, s.quad_tol);
    const Vec2 z = m.lw / m.w;
    const Mat2 As = inverse(m.llw - m.w * outer(z, z));
    auto weight = [t, nb, normalize](const Vec2& y) {
        const double n = nb(y);
        if (normalize) return 1.0 / n;
        return n > t.b ? t.b / n : 1.0;
    };
    auto eval = [p1, t, As, z, weight](double x) {
        const Vec2 l = scores(x, p1);
        return As * ((l - z) * weight(t.A * l - t.a));
    };
    const Vec2 d = detail::tail_direction(p1);
    const Vec2 tail = As * (d * ((normalize ? 1.0 : t.b) / nb(t.A * d)));
    IfMetadata meta;
    meta.triple = LagrangeTriple{As, As * z, t.b};
    meta.radius = g.radius;
    InfluenceFunction psi1(g.kind, p1, eval, true,
                           normalize ? std::vector<double>{} : detail::clip_crossings(t, p1, nb), tail, meta);
    return rescale_if(psi1, p.beta);
}

// ---------------------------------------------------------------- file format

inline std::string grid_kind_name(IfKind k) {
    switch (k) {
    case IfKind::MBRE: return "mbre";
    case IfKind::OMSE: return "omse";
    case IfKind::RMXE: return "rmxe";
    default: throw invalid_parameter("not a grid kind");
    }
}

inline IfKind parse_grid_kind(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (s == "mbre") return IfKind::MBRE;
    if (s == "omse") return IfKind::OMSE;
    if (s == "rmxe") return IfKind::RMXE;
    throw io_error("unknown grid kind '" + s + "'");
}

namespace detail {

inline std::string fmt_double(double v) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

inline double parse_double(const std::string& s) {
    double v = 0.0;
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) throw io_error("bad number '" + s + "' in grid file");
    return v;
}

} // namespace detail

// Header `gpdgrid v1 <kind> <r|->`, then `xi A11 A12 A21 A22 a1 a2 b` per node.
// Shortest round-trip formatting keeps the file bit-exact.
inline void write_grid(std::ostream& os, const InterpolationGrid& g) {
    os << "gpdgrid v" << g.version << ' ' << grid_kind_name(g.kind) << ' '
       << (g.radius ? detail::fmt_double(*g.radius) : std::string("-")) << '\n';
    for (std::size_t i = 0; i < g.xi.size(); ++i) {
        os << detail::fmt_double(g.xi[i]);
        for (double v : detail::flatten(g.triples[i])) os << ' ' << detail::fmt_double(v);
        os << '\n';
    }
}

inline InterpolationGrid read_grid(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw io_error("empty grid file");
    std::istringstream hs(line);
    std::string magic, ver, kind, rad;
    if (!(hs >> magic >> ver >> kind >> rad) || magic != "gpdgrid") throw io_error("not a grid file");
    if (ver != "v1") throw io_error("unsupported grid version " + ver);
    InterpolationGrid g;
    g.kind = parse_grid_kind(kind);
    if (rad != "-") g.radius = detail::parse_double(rad);
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::array<double, 8> v{};
        std::string tok;
        std::size_t k = 0;
        while (ls >> tok) {
            if (k == 8) throw io_error("too many fields on grid line " + std::to_string(lineno));
            v[k++] = detail::parse_double(tok);
        }
        if (k != 8) throw io_error("expected 8 fields on grid line " + std::to_string(lineno));
        if (!g.xi.empty() && !(v[0] > g.xi.back())) throw io_error("grid nodes not ascending");
        g.xi.push_back(v[0]);
        g.triples.push_back({Mat2{v[1], v[2], v[3], v[4]}, {v[5], v[6]}, v[7]});
    }
    if (g.xi.size() < 2) throw io_error("grid file has fewer than two nodes");
    return g;
}

inline void save_grid(const std::string& path, const InterpolationGrid& g) {
    std::ofstream f(path);
    if (!f) throw io_error("cannot write " + path);
    write_grid(f, g);
    if (!f) throw io_error("write failed for " + path);
}

inline InterpolationGrid load_grid(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw io_error("cannot read " + path);
    return read_grid(f);
}

} // namespace gpdrobust
