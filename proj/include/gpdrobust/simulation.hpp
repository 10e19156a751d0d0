#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "errors.hpp"
#include "estimators/registry.hpp"
#include "gpd.hpp"
#include "influence.hpp"
#include "optimal.hpp"
#include "parallel.hpp"

namespace gpdrobust {

// Seed for stream `stream` of replication `rep` (splitmix64 finalizer).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t rep, std::uint64_t stream = 0) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (rep + 1) + 0xD1B54A32D192ED03ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// ---------------------------------------------------------------- contamination

enum class CountRule { Round, Bernoulli };

struct Contaminant {
    enum class Type { PointMass, Uniform } type = Type::PointMass;
    double value = 1e10;
    double lo = 1.42, hi = 1.59;

    static Contaminant point(double v) { return {Type::PointMass, v, 0.0, 0.0}; }
    static Contaminant uniform(double a, double b) { return {Type::Uniform, 0.0, a, b}; }
};

struct ContaminationSpec {
    double radius = 0.5;
    CountRule rule = CountRule::Round;
    Contaminant point = Contaminant::point(1e10);
    Contaminant smallish = Contaminant::uniform(1.42, 1.59);

    // PE and MMed break down fastest under mass near 1.5·β; the rest under huge values.
    const Contaminant& for_estimator(EstimatorId e) const {
        return (e == EstimatorId::PE || e == EstimatorId::MMed) ? smallish : point;
    }
    std::size_t round_count(std::size_t n) const {
        return static_cast<std::size_t>(std::llround(radius * std::sqrt(static_cast<double>(n))));
    }
    void validate(std::size_t n) const {
        if (!(radius >= 0.0)) throw invalid_parameter("contamination radius must be non-negative");
        if (rule == CountRule::Round && round_count(n) >= n) throw invalid_parameter("contamination replaces every point");
        if (rule == CountRule::Bernoulli && radius / std::sqrt(static_cast<double>(n)) >= 1.0)
            throw invalid_parameter("contamination rate must be below 1");
    }
};

// Indices to replace: round(r√n) distinct positions, or each position with probability r/√n.
inline std::vector<std::size_t> contamination_positions(std::size_t n, const ContaminationSpec& spec, std::uint64_t seed) {
    spec.validate(n);
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> idx;
    if (spec.rule == CountRule::Bernoulli) {
        std::bernoulli_distribution coin(spec.radius / std::sqrt(static_cast<double>(n)));
        for (std::size_t i = 0; i < n; ++i)
            if (coin(rng)) idx.push_back(i);
        return idx;
    }
    const std::size_t m = spec.round_count(n);
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    for (std::size_t i = 0; i < m; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(all[i], all[pick(rng)]);
    }
    idx.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(m));
    std::sort(idx.begin(), idx.end());
    return idx;
}

inline std::vector<double> contaminate_at(std::span<const double> x, const std::vector<std::size_t>& idx,
                                          const Contaminant& c, std::uint64_t seed) {
    std::vector<double> out(x.begin(), x.end());
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(c.lo, c.hi);
    for (std::size_t i : idx) out[i] = c.type == Contaminant::Type::PointMass ? c.value : u(rng);
    return out;
}

inline std::vector<double> contaminate(std::span<const double> x, const ContaminationSpec& spec, EstimatorId e,
                                       std::uint64_t seed) {
    const auto idx = contamination_positions(x.size(), spec, derive_seed(seed, 0, 1));
    return contaminate_at(x, idx, spec.for_estimator(e), derive_seed(seed, 0, 2));
}

// ---------------------------------------------------------------- finite-sample study

// How the scale error enters: β̂ − β in the n_β norm, or log(β̂/β).
enum class ErrorScale { Weighted, Log };

struct SimConfig {
    std::size_t n = 40;
    std::size_t M = 2000;
    GpdParams truth{0.7, 1.0, 0.0};
    std::vector<EstimatorId> estimators{all_estimators.begin(), all_estimators.end()};
    ContaminationSpec contamination;
    std::uint64_t seed = 20240101;
    unsigned threads = 0; // 0: thread_count()
    ErrorScale error_scale = ErrorScale::Weighted;

    void validate() const {
        truth.validate();
        if (M < 2) throw invalid_parameter("need at least two replications");
        if (n < 5) throw invalid_parameter("sample size too small");
        contamination.validate(n);
    }
};

struct MeanCi {
    double mean = std::numeric_limits<double>::quiet_NaN();
    double ci = std::numeric_limits<double>::quiet_NaN(); // 95% half-width
};

struct EstimatorStats {
    EstimatorId id{};
    MeanCi bias;    // √n·n_β(mean error)
    MeanCi tr_var;  // n·trace of the empirical covariance (divisor m)
    MeanCi mse;     // n·mean n_β(error)²
    double eff = std::numeric_limits<double>::quiet_NaN();
    int rank = 0;
    double na_percent = 0.0;
    std::size_t n_ok = 0;
    double seconds = 0.0; // excludes the Hybr start for dependent estimators
    Vec2 mean_error;
};

struct SimReport {
    SimConfig config;
    std::vector<EstimatorStats> ideal, contaminated;
    double seconds = 0.0;

    const EstimatorStats& find(bool contam, EstimatorId e) const {
        for (const auto& s : contam ? contaminated : ideal)
            if (s.id == e) return s;
        throw invalid_parameter("estimator not in report");
    }
};

namespace detail {

struct Outcome {
    bool ok = false;
    Vec2 err;
    double seconds = 0.0;
};

inline EstimatorStats summarize(EstimatorId id, const std::vector<Outcome>& outs, const GpdParams& truth, std::size_t n) {
    EstimatorStats s;
    s.id = id;
    const WeightedNorm nb{truth.beta};
    std::vector<Vec2> e;
    for (const auto& o : outs) {
        s.seconds += o.seconds;
        if (o.ok) e.push_back(o.err);
    }
    s.n_ok = e.size();
    s.na_percent = 100.0 * static_cast<double>(outs.size() - e.size()) / static_cast<double>(outs.size());
    if (e.size() < 2) return s;
    const double m = static_cast<double>(e.size());
    const double sn = std::sqrt(static_cast<double>(n)), dn = static_cast<double>(n);
    Vec2 mean;
    for (const auto& v : e) mean += v;
    mean = mean / m;
    s.mean_error = mean;
    auto ci = [&](const std::vector<double>& y) {
        double mu = 0.0, ss = 0.0;
        for (double v : y) mu += v;
        mu /= m;
        for (double v : y) ss += (v - mu) * (v - mu);
        return MeanCi{mu, 1.96 * std::sqrt(ss / (m - 1.0) / m)};
    };
    std::vector<double> sq(e.size()), dev(e.size()), proj(e.size());
    const double bnorm = nb(mean);
    // gradient of n_β at the mean, for the delta-method interval of |bias|
    const Vec2 g = bnorm > 0.0 ? Vec2{mean[0] / bnorm, mean[1] / (truth.beta * truth.beta * bnorm)} : Vec2{0.0, 0.0};
    for (std::size_t i = 0; i < e.size(); ++i) {
        const double q = nb(e[i]);
        sq[i] = dn * q * q;
        const double d = nb(e[i] - mean);
        dev[i] = dn * d * d; // 1/m divisor, so MSE = |Bias|² + trVar exactly
        proj[i] = sn * (g[0] * e[i][0] + g[1] * e[i][1]);
    }
    s.mse = ci(sq);
    s.tr_var = ci(dev);
    s.bias = {sn * bnorm, ci(proj).ci};
    return s;
}

inline void rank_and_eff(std::vector<EstimatorStats>& v) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& s : v)
        if (std::isfinite(s.mse.mean)) best = std::min(best, s.mse.mean);
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    auto key = [&](std::size_t i) {
        return std::isfinite(v[i].mse.mean) ? v[i].mse.mean : std::numeric_limits<double>::infinity();
    };
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key(a) < key(b); });
    for (std::size_t r = 0; r < order.size(); ++r) {
        auto& s = v[order[r]];
        s.rank = static_cast<int>(r + 1);
        s.eff = std::isfinite(s.mse.mean) ? best / s.mse.mean : 0.0;
    }
}

} // namespace detail

// Every replication fits all estimators on an ideal sample and on its contaminated
// versions; results are stored by replication index so threading never changes output.
inline SimReport run_study(const SimConfig& cfg, const EstimatorSuite& suite) {
    cfg.validate();
    using clk = std::chrono::steady_clock;
    const auto t_start = clk::now();
    const std::size_t E = cfg.estimators.size();
    std::vector<std::vector<detail::Outcome>> ideal(E, std::vector<detail::Outcome>(cfg.M));
    std::vector<std::vector<detail::Outcome>> contam(E, std::vector<detail::Outcome>(cfg.M));

    const bool log_scale = cfg.error_scale == ErrorScale::Log;
    auto error_of = [&](const GpdParams& p) {
        return Vec2{p.xi - cfg.truth.xi, log_scale ? std::log(p.beta / cfg.truth.beta) : p.beta - cfg.truth.beta};
    };

    auto run_one = [&](std::span<const double> x, std::vector<std::vector<detail::Outcome>>& out, std::size_t rep,
                       const std::optional<EstimateResult>& hy) {
        for (std::size_t k = 0; k < E; ++k) {
            const EstimatorId e = cfg.estimators[k];
            const auto t0 = clk::now();
            const EstimateResult r = suite.fit(e, x, hy);
            detail::Outcome o;
            o.seconds = std::chrono::duration<double>(clk::now() - t0).count();
            o.ok = r.ok;
            if (r.ok) o.err = error_of(r.params);
            out[k][rep] = o;
        }
    };

    parallel_for(cfg.M, [&](std::size_t rep) {
        const auto x = sample(cfg.n, cfg.truth, derive_seed(cfg.seed, rep, 0));
        const auto idx = contamination_positions(cfg.n, cfg.contamination, derive_seed(cfg.seed, rep, 1));
        const auto xp = contaminate_at(x, idx, cfg.contamination.point, derive_seed(cfg.seed, rep, 2));
        const auto xu = contaminate_at(x, idx, cfg.contamination.smallish, derive_seed(cfg.seed, rep, 3));
        // The Hybr start is shared by dependent estimators; its time is not charged to them.
        const std::optional<EstimateResult> h_ideal = suite.start(x);
        const std::optional<EstimateResult> h_point = suite.start(xp);
        run_one(x, ideal, rep, h_ideal);
        for (std::size_t k = 0; k < E; ++k) {
            const EstimatorId e = cfg.estimators[k];
            const auto& c = cfg.contamination.for_estimator(e);
            const auto& xc = c.type == Contaminant::Type::Uniform ? xu : xp;
            const auto t0 = clk::now();
            const EstimateResult r =
                suite.fit(e, xc, c.type == Contaminant::Type::Uniform ? std::optional<EstimateResult>{} : h_point);
            detail::Outcome o;
            o.seconds = std::chrono::duration<double>(clk::now() - t0).count();
            o.ok = r.ok;
            if (r.ok) o.err = error_of(r.params);
            contam[k][rep] = o;
        }
    }, cfg.threads ? cfg.threads : thread_count());

    SimReport rep;
    rep.config = cfg;
    // log(β̂/β) is already scale free
    GpdParams norm_at = cfg.truth;
    if (log_scale) norm_at.beta = 1.0;
    for (std::size_t k = 0; k < E; ++k) {
        rep.ideal.push_back(detail::summarize(cfg.estimators[k], ideal[k], norm_at, cfg.n));
        rep.contaminated.push_back(detail::summarize(cfg.estimators[k], contam[k], norm_at, cfg.n));
    }
    detail::rank_and_eff(rep.ideal);
    detail::rank_and_eff(rep.contaminated);
    rep.seconds = std::chrono::duration<double>(clk::now() - t_start).count();
    return rep;
}

// ---------------------------------------------------------------- breakdown

struct BreakdownPoint {
    std::size_t m = 0;
    double median_bias = 0.0; // over samples; failures count as infinite
    double max_bias = 0.0;
    double failure_rate = 0.0;
    // median of n(θ̂(V) − θ̂(V'))/n(θ̂(V) − θ): how far the estimate follows the contaminating value
    double median_sensitivity = 0.0;
};

struct BreakdownCurve {
    EstimatorId estimator{};
    std::size_t n = 0;
    double value = 1e10;
    std::vector<BreakdownPoint> points;
    std::optional<std::size_t> knee;          // first m whose estimate follows the value
    std::optional<std::size_t> knee_relative; // first m with median bias > factor × level at the first m

    static std::optional<double> fraction(std::optional<std::size_t> m, std::size_t n) {
        if (!m) return std::nullopt;
        return static_cast<double>(*m) / static_cast<double>(n);
    }
    std::optional<double> knee_fraction() const { return fraction(knee, n); }
};

// First m whose median bias exceeds factor × the level at the first m.
inline std::optional<std::size_t> detect_knee_relative(const std::vector<BreakdownPoint>& pts, double factor = 10.0) {
    if (pts.empty()) return std::nullopt;
    const double base = pts.front().median_bias;
    for (const auto& p : pts)
        if (p.median_bias > factor * base) return p.m;
    return std::nullopt;
}

// First m where moving the contaminating value moves the estimate by more than
// `level` times its bias. A bounded, unbroken estimator ignores where far-out mass sits.
inline std::optional<std::size_t> detect_knee(const std::vector<BreakdownPoint>& pts, double level = 0.5) {
    for (const auto& p : pts)
        if (p.median_sensitivity > level) return p.m;
    return std::nullopt;
}

struct BreakdownConfig {
    std::size_t n = 1000;
    std::size_t M = 100;
    GpdParams truth{0.7, 1.0, 0.0};
    double value = 1e10;
    double probe_value = 1e20;
    std::uint64_t seed = 7;
    double knee_factor = 10.0;
    double sensitivity_level = 0.5;
    unsigned threads = 0;
};

// Replaces m observations by `value` (and by `probe_value`) for each m in m_values.
// The estimators are symmetric in the sample, so the first m positions are used.
inline BreakdownCurve breakdown_sweep(EstimatorId e, const std::vector<std::size_t>& m_values,
                                      const BreakdownConfig& cfg, const EstimatorSuite& suite = {}) {
    if (m_values.empty()) throw invalid_parameter("no m values");
    for (std::size_t i = 0; i < m_values.size(); ++i) {
        if (m_values[i] >= cfg.n) throw invalid_parameter("m must be below n");
        if (i > 0 && m_values[i] <= m_values[i - 1]) throw invalid_parameter("m values must ascend");
    }
    std::vector<std::vector<double>> base(cfg.M);
    for (std::size_t j = 0; j < cfg.M; ++j) base[j] = sample(cfg.n, cfg.truth, derive_seed(cfg.seed, j, 0));
    const WeightedNorm nb{cfg.truth.beta};
    BreakdownCurve out;
    out.estimator = e;
    out.n = cfg.n;
    out.value = cfg.value;
    out.points.resize(m_values.size());
    std::vector<double> bias(m_values.size() * cfg.M), sens(m_values.size() * cfg.M);
    constexpr double inf = std::numeric_limits<double>::infinity();
    parallel_for(m_values.size() * cfg.M, [&](std::size_t k) {
        const std::size_t i = k / cfg.M, j = k % cfg.M;
        std::vector<double> x = base[j];
        const auto mid = x.begin() + static_cast<std::ptrdiff_t>(m_values[i]);
        std::fill(x.begin(), mid, cfg.value);
        const EstimateResult r = suite.fit(e, x);
        std::fill(x.begin(), mid, cfg.probe_value);
        const EstimateResult q = suite.fit(e, x);
        bias[k] = r.ok ? nb(Vec2{r.params.xi - cfg.truth.xi, r.params.beta - cfg.truth.beta}) : inf;
        if (!r.ok || !q.ok) {
            sens[k] = inf;
        } else {
            const double d = nb(Vec2{r.params.xi - q.params.xi, r.params.beta - q.params.beta});
            sens[k] = d == 0.0 ? 0.0 : d / bias[k];
        }
    }, cfg.threads ? cfg.threads : thread_count());
    for (std::size_t i = 0; i < m_values.size(); ++i) {
        const auto lo = static_cast<std::ptrdiff_t>(i * cfg.M), hi = static_cast<std::ptrdiff_t>((i + 1) * cfg.M);
        std::vector<double> b(bias.begin() + lo, bias.begin() + hi), sv(sens.begin() + lo, sens.begin() + hi);
        BreakdownPoint p;
        p.m = m_values[i];
        p.failure_rate = static_cast<double>(std::count_if(b.begin(), b.end(), [](double v) { return !std::isfinite(v); })) /
                         static_cast<double>(b.size());
        p.max_bias = *std::max_element(b.begin(), b.end());
        std::sort(b.begin(), b.end());
        std::sort(sv.begin(), sv.end());
        p.median_bias = median_sorted(b);
        p.median_sensitivity = median_sorted(sv);
        out.points[i] = p;
    }
    out.knee = detect_knee(out.points, cfg.sensitivity_level);
    out.knee_relative = detect_knee_relative(out.points, cfg.knee_factor);
    return out;
}

inline std::vector<std::size_t> m_range(std::size_t lo, std::size_t hi, std::size_t step = 1) {
    std::vector<std::size_t> v;
    for (std::size_t m = lo; m <= hi; m += step) v.push_back(m);
    return v;
}

// Coarse sweep over 1..m_max, then every m between the last point before the knee
// and the knee itself. Points from both passes are merged.
inline BreakdownCurve locate_knee(EstimatorId e, std::size_t m_max, std::size_t coarse_step, const BreakdownConfig& cfg,
                                  const EstimatorSuite& suite = {}) {
    std::vector<std::size_t> coarse{1};
    for (std::size_t m = coarse_step; m <= m_max; m += coarse_step) if (m > 1) coarse.push_back(m);
    BreakdownCurve c = breakdown_sweep(e, coarse, cfg, suite);
    if (!c.knee || *c.knee == 1) return c;
    std::size_t prev = 1;
    for (const auto& p : c.points) if (p.m < *c.knee) prev = p.m;
    if (*c.knee - prev <= 1) return c;
    const BreakdownCurve fine = breakdown_sweep(e, m_range(prev + 1, *c.knee - 1), cfg, suite);
    std::vector<BreakdownPoint> all = c.points;
    all.insert(all.end(), fine.points.begin(), fine.points.end());
    std::sort(all.begin(), all.end(), [](const BreakdownPoint& a, const BreakdownPoint& b) { return a.m < b.m; });
    c.points = all;
    c.knee = detect_knee(c.points, cfg.sensitivity_level);
    c.knee_relative = detect_knee_relative(c.points, cfg.knee_factor);
    return c;
}

// ---------------------------------------------------------------- efficiency sweep

struct EfficiencyRow {
    double xi = 0.0;
    EstimatorId estimator{};
    bool ok = false;
    double eff_id = std::numeric_limits<double>::quiet_NaN();
    double eff_re = std::numeric_limits<double>::quiet_NaN();
    double eff_ru = std::numeric_limits<double>::quiet_NaN();
    std::string error;
};

struct EfficiencySweepConfig {
    std::vector<double> xi;
    double radius = 0.5;
    std::vector<double> r_grid = default_radius_grid();
    std::vector<EstimatorId> estimators{EstimatorId::MLE, EstimatorId::MBRE, EstimatorId::OMSE, EstimatorId::RMXE,
                                        EstimatorId::PE,  EstimatorId::MMed, EstimatorId::MedkMAD, EstimatorId::SMLE,
                                        EstimatorId::MDE};
    std::size_t smle_n = 1000;
    unsigned threads = 0;
};

// Asymptotic efficiencies at (ξ, 1) per node; one-step estimators use direct solves.
inline std::vector<EfficiencyRow> efficiency_sweep(const EfficiencySweepConfig& cfg, const EstimatorSuite& base = {}) {
    EstimatorSuite suite = base;
    suite.mbre_grid.reset();
    suite.omse_grid.reset();
    suite.rmxe_grid.reset();
    suite.omse_radius = cfg.radius;
    const std::size_t E = cfg.estimators.size();
    std::vector<EfficiencyRow> rows(cfg.xi.size() * E);
    parallel_for(cfg.xi.size(), [&](std::size_t i) {
        const GpdParams p{cfg.xi[i], 1.0, 0.0};
        std::optional<EfficiencyReference> ref;
        std::string ref_err;
        try {
            ref = make_efficiency_reference(p);
        } catch (const std::exception& ex) {
            ref_err = ex.what();
        }
        for (std::size_t k = 0; k < E; ++k) {
            EfficiencyRow& row = rows[i * E + k];
            row.xi = cfg.xi[i];
            row.estimator = cfg.estimators[k];
            if (!ref) {
                row.error = ref_err;
                continue;
            }
            try {
                const auto psi = suite.influence(cfg.estimators[k], p, cfg.smle_n);
                const auto e = efficiencies(psi, cfg.radius, cfg.r_grid, *ref);
                row.eff_id = e.eff_id;
                row.eff_re = e.eff_re;
                row.eff_ru = e.eff_ru;
                row.ok = std::isfinite(e.eff_re) && e.skipped_radii.empty();
                if (!e.skipped_radii.empty()) row.error = "solver failed at some radii";
            } catch (const std::exception& ex) {
                row.error = ex.what();
            }
        }
    }, cfg.threads ? cfg.threads : thread_count());
    return rows;
}

} // namespace gpdrobust
