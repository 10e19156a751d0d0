// gpdrobust command line: fit, solve, grid, simulate, breakdown, efficiency, generate.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gpdrobust.hpp"

using namespace gpdrobust;
using json = nlohmann::ordered_json;

namespace {

// 4 significant digits for tables
std::string g4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}
// lossless for CSV
std::string full(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string name(EstimatorId e) { return std::string(to_string(e)); }

json to_json(const Mat2& m) { return json::array({json::array({m(0, 0), m(0, 1)}), json::array({m(1, 0), m(1, 1)})}); }
json to_json(const LagrangeTriple& t) {
    return {{"A", to_json(t.A)}, {"a", json::array({t.a[0], t.a[1]})}, {"b", t.b}};
}
json num_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

const std::vector<EstimatorId> all_mode_set{EstimatorId::MLE,  EstimatorId::MBRE,    EstimatorId::OMSE,
                                            EstimatorId::RMXE, EstimatorId::PE,      EstimatorId::MMed,
                                            EstimatorId::MedkMAD, EstimatorId::Hybr, EstimatorId::SMLE,
                                            EstimatorId::MDE};

std::vector<EstimatorId> parse_estimators(const std::vector<std::string>& names) {
    std::vector<EstimatorId> out;
    for (const auto& n : names) {
        if (n == "all") return all_mode_set;
        out.push_back(parse_estimator(n));
    }
    return out;
}

void attach_grid(EstimatorSuite& suite, const std::string& path) {
    auto g = std::make_shared<InterpolationGrid>(load_grid(path));
    switch (g->kind) {
    case IfKind::MBRE: suite.mbre_grid = g; break;
    case IfKind::OMSE:
        suite.omse_grid = g;
        if (g->radius) suite.omse_radius = *g->radius;
        break;
    case IfKind::RMXE: suite.rmxe_grid = g; break;
    default: throw io_error(path + ": unsupported grid kind");
    }
}

// ---------------------------------------------------------------- fit

struct FitOptions {
    std::string path;
    double threshold = 0.0;
    std::string column;
    std::vector<std::string> estimators;
    std::optional<double> radius;
    std::vector<std::string> grids;
    std::vector<double> contaminate; // m, value
    bool json_out = false;
};

int cmd_fit(const FitOptions& o) {
    ColumnSelector col;
    if (!o.column.empty()) {
        if (std::all_of(o.column.begin(), o.column.end(), [](unsigned char c) { return std::isdigit(c); }))
            col = static_cast<std::size_t>(std::stoul(o.column));
        else
            col = o.column;
    }
    LossSeries s = load_exceedances(o.path, o.threshold, col);
    if (!o.contaminate.empty()) {
        if (o.contaminate.size() != 2 || o.contaminate[0] < 0) throw invalid_parameter("--contaminate takes M VALUE");
        const auto m = static_cast<std::size_t>(o.contaminate[0]);
        if (m >= s.observations.size()) throw invalid_parameter("--contaminate: m must be below n");
        std::fill(s.observations.begin(), s.observations.begin() + static_cast<std::ptrdiff_t>(m), o.contaminate[1]);
    }
    EstimatorSuite suite;
    if (o.radius) suite.omse_radius = *o.radius;
    for (const auto& g : o.grids) attach_grid(suite, g);

    std::vector<EstimatorId> ids = parse_estimators(o.estimators);
    if (ids.empty()) ids = {o.radius ? EstimatorId::OMSE : EstimatorId::RMXE};

    const std::size_t n = s.observations.size();
    bool all_ok = true;
    json out = {{"source", s.source},
                {"column", s.column ? json(*s.column) : json(nullptr)},
                {"threshold", o.threshold},
                {"n", n},
                {"rejected_rows", s.rejected_rows},
                {"radius", o.radius ? json(*o.radius) : json(nullptr)},
                {"fits", json::array()}};
    if (!o.json_out) {
        std::printf("%s: n = %zu exceedances over %s", s.source.c_str(), n, g4(o.threshold).c_str());
        if (s.rejected_rows) std::printf(" (%zu non-finite rows dropped)", s.rejected_rows);
        std::printf("\n%-8s %9s %9s  %-21s %-21s\n", "estimator", "xi", "beta", "xi 95% CI", "beta 95% CI");
    }
    for (EstimatorId e : ids) {
        const EstimateResult r = suite.fit(e, s.observations);
        FitReport rep;
        std::string err;
        try {
            rep = make_fit_report(e, r, n, o.radius, suite);
        } catch (const std::exception& ex) {
            err = ex.what();
        }
        const bool ok = r.ok && err.empty();
        all_ok = all_ok && ok;
        json f = {{"estimator", name(e)}, {"ok", ok}};
        if (!r.ok) f["error"] = r.failure_reason ? std::string(to_string(*r.failure_reason)) : "failed";
        else if (!err.empty()) f["error"] = err;
        if (r.ok) {
            f["xi"] = r.params.xi;
            f["beta"] = r.params.beta;
        }
        if (ok) {
            f["as_var"] = to_json(rep.as_var);
            f["clt"] = {{"xi", {rep.clt[0].lo, rep.clt[0].hi}}, {"beta", {rep.clt[1].lo, rep.clt[1].hi}}};
            if (rep.bias_aware)
                f["bias_aware"] = {{"xi", {num_or_null((*rep.bias_aware)[0].lo), num_or_null((*rep.bias_aware)[0].hi)}},
                                   {"beta", {num_or_null((*rep.bias_aware)[1].lo), num_or_null((*rep.bias_aware)[1].hi)}}};
            if (rep.r0) f["r0"] = *rep.r0;
        }
        out["fits"].push_back(f);
        if (o.json_out) continue;
        if (!ok) {
            std::printf("%-8s failed: %s\n", name(e).c_str(), f["error"].get<std::string>().c_str());
            continue;
        }
        auto iv = [](const CoordinateInterval& c) { return "[" + g4(c.lo) + ", " + g4(c.hi) + "]"; };
        std::printf("%-8s %9s %9s  %-21s %-21s\n", name(e).c_str(), g4(r.params.xi).c_str(), g4(r.params.beta).c_str(),
                    iv(rep.clt[0]).c_str(), iv(rep.clt[1]).c_str());
        if (rep.bias_aware)
            std::printf("%-8s %9s %9s  %-21s %-21s  bias-aware, r = %s\n", "", "", "", iv((*rep.bias_aware)[0]).c_str(),
                        iv((*rep.bias_aware)[1]).c_str(), g4(*o.radius).c_str());
        if (rep.r0) std::printf("%-8s least favorable radius r0 = %s\n", "", g4(*rep.r0).c_str());
    }
    if (o.json_out) std::cout << out.dump(2) << '\n';
    return all_ok ? 0 : 1;
}

// ---------------------------------------------------------------- solve

struct SolveOptions {
    std::string kind = "omse";
    double xi = 0.7, beta = 1.0;
    std::optional<double> r, b, eff;
    std::string grid;
    bool json_out = false;
};

int cmd_solve(const SolveOptions& o) {
    const GpdParams p{o.xi, o.beta, 0.0};
    p.validate();
    std::string kind = o.kind;
    std::transform(kind.begin(), kind.end(), kind.begin(), [](unsigned char c) { return std::tolower(c); });
    LagrangeTriple t;
    std::optional<InfluenceFunction> psi;
    std::optional<double> radius = o.r;
    if (!o.grid.empty()) {
        const InterpolationGrid g = load_grid(o.grid);
        kind = grid_kind_name(g.kind);
        radius = g.radius;
        t = rescale_triple(interpolate_triple(g, o.xi), o.beta);
        psi = interpolate_if(g, p);
    } else {
        auto solve = [&]() -> OptimalSolution {
            if (kind == "mbre") return solve_mbre(p);
            if (kind == "omse") {
                if (!o.r) throw invalid_parameter("solve --kind omse needs --r");
                return solve_omse(p, *o.r);
            }
            if (kind == "rmxe") return solve_rmxe(p);
            if (kind == "obre") {
                if (o.b) return solve_obre(p, *o.b);
                if (o.eff) return tune_obre_efficiency(p, *o.eff);
                throw invalid_parameter("solve --kind obre needs --b or --eff");
            }
            throw invalid_parameter("unknown kind '" + o.kind + "' (mbre, omse, rmxe, obre)");
        };
        const OptimalSolution s = solve();
        t = s.triple;
        psi = s.psi;
        if (s.radius) radius = s.radius;
    }
    const double r_eval = radius.value_or(0.5);
    const RiskSummary rs = risk_summary(*psi, r_eval);
    if (o.json_out) {
        json out = {{"kind", kind}, {"xi", o.xi}, {"beta", o.beta}, {"radius", radius ? json(*radius) : json(nullptr)},
                    {"triple", to_json(t)}, {"as_var", to_json(rs.as_var)}, {"trace", rs.trace},
                    {"ges", rs.ges}, {"as_mse", rs.as_mse}, {"as_mse_radius", r_eval}};
        std::cout << out.dump(2) << '\n';
        return 0;
    }
    std::printf("%s at xi = %s, beta = %s%s\n", kind.c_str(), g4(o.xi).c_str(), g4(o.beta).c_str(),
                radius ? (", r = " + g4(*radius)).c_str() : "");
    std::printf("A = [[%s, %s], [%s, %s]]\n", g4(t.A(0, 0)).c_str(), g4(t.A(0, 1)).c_str(), g4(t.A(1, 0)).c_str(),
                g4(t.A(1, 1)).c_str());
    std::printf("a = (%s, %s)\n", g4(t.a[0]).c_str(), g4(t.a[1]).c_str());
    std::printf("b = %s\n", g4(t.b).c_str());
    std::printf("tr asVar = %s, GES = %s, asMSE(r = %s) = %s\n", g4(rs.trace).c_str(), g4(rs.ges).c_str(),
                g4(r_eval).c_str(), g4(rs.as_mse).c_str());
    return 0;
}

// ---------------------------------------------------------------- grid

struct GridOptions {
    std::string kind = "omse";
    std::optional<double> r;
    double xi_min = 0.01, xi_max = 3.0;
    std::size_t nodes = 61;
    bool start_range = false;
    std::string out, in;
    bool json_out = false;
};

int cmd_grid_build(const GridOptions& o) {
    const std::vector<double> xs = o.start_range ? start_range_xi_grid() : default_xi_grid(o.nodes, o.xi_min, o.xi_max);
    const InterpolationGrid g = build_grid(parse_grid_kind(o.kind), xs, o.r);
    save_grid(o.out, g);
    std::fprintf(stderr, "%s grid: %zu nodes written to %s", grid_kind_name(g.kind).c_str(), g.xi.size(), o.out.c_str());
    if (!g.dropped.empty()) std::fprintf(stderr, " (%zu dropped)", g.dropped.size());
    std::fprintf(stderr, "\n");
    return 0;
}

int cmd_grid_inspect(const GridOptions& o) {
    const InterpolationGrid g = load_grid(o.in);
    if (o.json_out) {
        json out = {{"kind", grid_kind_name(g.kind)}, {"radius", g.radius ? json(*g.radius) : json(nullptr)},
                    {"version", g.version}, {"nodes", json::array()}};
        for (std::size_t i = 0; i < g.xi.size(); ++i) out["nodes"].push_back({{"xi", g.xi[i]}, {"triple", to_json(g.triples[i])}});
        std::cout << out.dump(2) << '\n';
        return 0;
    }
    std::printf("kind %s", grid_kind_name(g.kind).c_str());
    if (g.radius) std::printf(", r = %s", g4(*g.radius).c_str());
    std::printf(", %zu nodes on [%s, %s]\n", g.xi.size(), g4(g.xi.front()).c_str(), g4(g.xi.back()).c_str());
    std::printf("%8s %9s %9s %9s %9s %9s %9s\n", "xi", "A11", "A12", "A22", "a1", "a2", "b");
    for (std::size_t i = 0; i < g.xi.size(); ++i) {
        const auto& t = g.triples[i];
        std::printf("%8s %9s %9s %9s %9s %9s %9s\n", g4(g.xi[i]).c_str(), g4(t.A(0, 0)).c_str(), g4(t.A(0, 1)).c_str(),
                    g4(t.A(1, 1)).c_str(), g4(t.a[0]).c_str(), g4(t.a[1]).c_str(), g4(t.b).c_str());
    }
    return 0;
}

// ---------------------------------------------------------------- simulate

// Config keys: n, M, xi, beta, estimators, radius, rule ("round" | "bernoulli"),
// error_scale ("weighted" | "log"), seed, threads, omse_radius, xi_bracket ([lo, hi]
// for the MMed/MedkMAD root search), grids (list of grid files), build_grids (bool).
SimConfig sim_config_from(const json& j, EstimatorSuite& suite) {
    SimConfig c;
    c.n = j.value("n", c.n);
    c.M = j.value("M", c.M);
    c.truth.xi = j.value("xi", c.truth.xi);
    c.truth.beta = j.value("beta", c.truth.beta);
    if (j.contains("estimators")) c.estimators = parse_estimators(j["estimators"].get<std::vector<std::string>>());
    c.contamination.radius = j.value("radius", c.contamination.radius);
    const std::string rule = j.value("rule", std::string("round"));
    if (rule == "round") c.contamination.rule = CountRule::Round;
    else if (rule == "bernoulli") c.contamination.rule = CountRule::Bernoulli;
    else throw invalid_parameter("rule must be 'round' or 'bernoulli'");
    const std::string scale = j.value("error_scale", std::string("weighted"));
    if (scale == "weighted") c.error_scale = ErrorScale::Weighted;
    else if (scale == "log") c.error_scale = ErrorScale::Log;
    else throw invalid_parameter("error_scale must be 'weighted' or 'log'");
    c.seed = j.value("seed", c.seed);
    c.threads = j.value("threads", c.threads);
    suite.omse_radius = j.value("omse_radius", suite.omse_radius);
    if (j.contains("xi_bracket")) {
        const auto b = j["xi_bracket"].get<std::vector<double>>();
        if (b.size() != 2 || !(b[0] > -0.5 && b[0] < b[1])) throw invalid_parameter("xi_bracket must be [lo, hi] with -0.5 < lo < hi");
        suite.hybr_cfg.bracket = {b[0], b[1]};
    }
    if (j.contains("grids"))
        for (const auto& g : j["grids"]) attach_grid(suite, g.get<std::string>());
    if (j.value("build_grids", false)) {
        const auto nodes = start_range_xi_grid();
        if (!suite.mbre_grid) suite.mbre_grid = std::make_shared<InterpolationGrid>(build_grid(IfKind::MBRE, nodes));
        if (!suite.omse_grid)
            suite.omse_grid = std::make_shared<InterpolationGrid>(build_grid(IfKind::OMSE, nodes, suite.omse_radius));
        if (!suite.rmxe_grid) suite.rmxe_grid = std::make_shared<InterpolationGrid>(build_grid(IfKind::RMXE, nodes));
    }
    return c;
}

int cmd_simulate(const std::string& config, bool json_out, bool table) {
    std::ifstream f(config);
    if (!f) throw io_error("cannot read " + config);
    json j;
    try {
        j = json::parse(f);
    } catch (const json::exception& ex) {
        throw io_error(config + ": " + ex.what());
    }
    EstimatorSuite suite;
    const SimConfig cfg = sim_config_from(j, suite);
    const SimReport rep = run_study(cfg, suite);
    if (json_out) {
        json out = {{"n", cfg.n}, {"M", cfg.M}, {"seconds", rep.seconds}, {"rows", json::array()}};
        for (int c = 0; c < 2; ++c)
            for (const auto& s : c ? rep.contaminated : rep.ideal)
                out["rows"].push_back({{"situation", c ? "contaminated" : "ideal"},
                                       {"estimator", name(s.id)},
                                       {"bias", num_or_null(s.bias.mean)},
                                       {"bias_ci", num_or_null(s.bias.ci)},
                                       {"tr_var", num_or_null(s.tr_var.mean)},
                                       {"tr_var_ci", num_or_null(s.tr_var.ci)},
                                       {"mse", num_or_null(s.mse.mean)},
                                       {"mse_ci", num_or_null(s.mse.ci)},
                                       {"eff", num_or_null(s.eff)},
                                       {"rank", s.rank},
                                       {"na_percent", s.na_percent},
                                       {"seconds", s.seconds}});
        std::cout << out.dump(2) << '\n';
    } else if (table) {
        for (int c = 0; c < 2; ++c) {
            std::printf("%s situation (n = %zu, M = %zu)\n", c ? "contaminated" : "ideal", cfg.n, cfg.M);
            std::printf("%-8s %9s %8s %9s %8s %9s %8s %6s %4s %6s %8s\n", "estimator", "|Bias|", "±", "trVar", "±",
                        "MSE", "±", c ? "eff.re" : "eff.id", "rank", "NA%", "time(s)");
            for (const auto& s : c ? rep.contaminated : rep.ideal)
                std::printf("%-8s %9s %8s %9s %8s %9s %8s %6s %4d %6s %8s\n", name(s.id).c_str(), g4(s.bias.mean).c_str(),
                            g4(s.bias.ci).c_str(), g4(s.tr_var.mean).c_str(), g4(s.tr_var.ci).c_str(),
                            g4(s.mse.mean).c_str(), g4(s.mse.ci).c_str(), g4(s.eff).c_str(), s.rank,
                            g4(s.na_percent).c_str(), g4(s.seconds).c_str());
        }
    } else {
        std::printf("situation,estimator,bias,bias_ci,tr_var,tr_var_ci,mse,mse_ci,eff,rank,na_percent,seconds\n");
        for (int c = 0; c < 2; ++c)
            for (const auto& s : c ? rep.contaminated : rep.ideal)
                std::printf("%s,%s,%s,%s,%s,%s,%s,%s,%s,%d,%s,%s\n", c ? "contaminated" : "ideal", name(s.id).c_str(),
                            full(s.bias.mean).c_str(), full(s.bias.ci).c_str(), full(s.tr_var.mean).c_str(),
                            full(s.tr_var.ci).c_str(), full(s.mse.mean).c_str(), full(s.mse.ci).c_str(),
                            full(s.eff).c_str(), s.rank, full(s.na_percent).c_str(), full(s.seconds).c_str());
    }
    return 0;
}

// ---------------------------------------------------------------- breakdown / efficiency

struct BreakdownOptions {
    std::string estimator = "MDE";
    BreakdownConfig cfg;
    std::size_t m_max = 400, step = 10;
    bool refine = true;
};

int cmd_breakdown(const BreakdownOptions& o) {
    const EstimatorId e = parse_estimator(o.estimator);
    if (o.m_max >= o.cfg.n) throw invalid_parameter("--m-max must be below --n");
    BreakdownCurve c;
    if (o.refine) {
        c = locate_knee(e, o.m_max, o.step, o.cfg);
    } else {
        std::vector<std::size_t> ms{1};
        for (std::size_t m = o.step; m <= o.m_max; m += o.step)
            if (m > 1) ms.push_back(m);
        c = breakdown_sweep(e, ms, o.cfg);
    }
    std::printf("m,fraction,median_bias,max_bias,failure_rate,median_sensitivity\n");
    for (const auto& p : c.points)
        std::printf("%zu,%s,%s,%s,%s,%s\n", p.m, full(static_cast<double>(p.m) / static_cast<double>(c.n)).c_str(),
                    full(p.median_bias).c_str(), full(p.max_bias).c_str(), full(p.failure_rate).c_str(),
                    full(p.median_sensitivity).c_str());
    std::fprintf(stderr, "%s: knee %s", name(e).c_str(), c.knee ? std::to_string(*c.knee).c_str() : "none");
    if (c.knee) std::fprintf(stderr, " (fraction %s)", g4(*c.knee_fraction()).c_str());
    std::fprintf(stderr, "; median-bias x%s rule: %s\n", g4(o.cfg.knee_factor).c_str(),
                 c.knee_relative ? std::to_string(*c.knee_relative).c_str() : "none");
    return 0;
}

struct EfficiencyOptions {
    double xi_min = 0.0, xi_max = 2.0;
    std::size_t nodes = 11;
    double radius = 0.5;
    std::vector<std::string> estimators;
};

int cmd_efficiency(const EfficiencyOptions& o) {
    if (o.nodes < 1) throw invalid_parameter("--nodes must be positive");
    EfficiencySweepConfig cfg;
    for (std::size_t i = 0; i < o.nodes; ++i)
        cfg.xi.push_back(o.nodes == 1 ? o.xi_min
                                      : o.xi_min + (o.xi_max - o.xi_min) * static_cast<double>(i) / static_cast<double>(o.nodes - 1));
    cfg.radius = o.radius;
    if (!o.estimators.empty()) cfg.estimators = parse_estimators(o.estimators);
    const auto rows = efficiency_sweep(cfg);
    std::printf("xi,estimator,ok,eff_id,eff_re,eff_ru,error\n");
    for (const auto& r : rows)
        std::printf("%s,%s,%d,%s,%s,%s,\"%s\"\n", full(r.xi).c_str(), name(r.estimator).c_str(), r.ok ? 1 : 0,
                    full(r.eff_id).c_str(), full(r.eff_re).c_str(), full(r.eff_ru).c_str(), r.error.c_str());
    return 0;
}

// ---------------------------------------------------------------- generate

struct GenerateOptions {
    std::size_t n = 1000;
    double xi = 0.7, beta = 1.0, threshold = 0.0;
    std::uint64_t seed = 1;
    std::string out;
};

int cmd_generate(const GenerateOptions& o) {
    LossSeries s;
    s.observations = sample(o.n, {o.xi, o.beta, 0.0}, o.seed);
    for (auto& v : s.observations) v += o.threshold;
    if (o.out.empty()) {
        write_csv_column(std::cout, s, "loss");
    } else {
        std::ofstream f(o.out);
        if (!f) throw io_error("cannot write " + o.out);
        write_csv_column(f, s, "loss");
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Robust estimation for the generalized Pareto distribution"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "gpdrobust 1.0");
    int rc = 0;

    FitOptions fit;
    auto* f = app.add_subcommand("fit", "Fit estimators to the exceedances of a CSV column");
    f->add_option("file", fit.path, "CSV file with a header row")->required()->check(CLI::ExistingFile);
    f->add_option("-u,--threshold", fit.threshold, "Threshold; values above it are shifted by it");
    f->add_option("-c,--column", fit.column, "Column name or zero-based index (default: first)");
    f->add_option("-e,--estimator", fit.estimators,
                  "Estimator(s), or 'all'. Default: RMXE, or OMSE when --radius is given");
    f->add_option("-r,--radius", fit.radius, "Contamination radius; adds bias-aware intervals")->check(CLI::NonNegativeNumber);
    f->add_option("--grid", fit.grids, "Interpolation grid file(s) for the one-step estimators");
    f->add_option("--contaminate", fit.contaminate, "Replace the first M exceedances by VALUE")->expected(2);
    f->add_flag("--json", fit.json_out, "JSON output");
    f->callback([&] { rc = cmd_fit(fit); });

    SolveOptions sol;
    auto* s = app.add_subcommand("solve", "Solve for the Lagrange multipliers of an optimal IF");
    s->add_option("-k,--kind", sol.kind, "mbre, omse, rmxe or obre");
    s->add_option("--xi", sol.xi, "Shape");
    s->add_option("--beta", sol.beta, "Scale")->check(CLI::PositiveNumber);
    s->add_option("--r", sol.r, "Radius (OMSE)")->check(CLI::PositiveNumber);
    s->add_option("--b", sol.b, "Clip (OBRE)")->check(CLI::PositiveNumber);
    s->add_option("--eff", sol.eff, "Target ideal efficiency (OBRE)");
    s->add_option("--grid", sol.grid, "Interpolate from a grid file instead of solving")->check(CLI::ExistingFile);
    s->add_flag("--json", sol.json_out, "JSON output");
    s->callback([&] { rc = cmd_solve(sol); });

    GridOptions gr;
    auto* g = app.add_subcommand("grid", "Build or inspect interpolation grids");
    g->require_subcommand(1);
    auto* gb = g->add_subcommand("build", "Solve on a grid of shapes and write the grid file");
    gb->add_option("-k,--kind", gr.kind, "mbre, omse or rmxe");
    gb->add_option("--r", gr.r, "Radius (OMSE)")->check(CLI::PositiveNumber);
    gb->add_option("--xi-min", gr.xi_min, "Smallest shape node");
    gb->add_option("--xi-max", gr.xi_max, "Largest shape node");
    gb->add_option("--nodes", gr.nodes, "Number of equally spaced nodes")->check(CLI::PositiveNumber);
    gb->add_flag("--start-range", gr.start_range, "Use the node set covering every starting estimate");
    gb->add_option("-o,--out", gr.out, "Output file")->required();
    gb->callback([&] { rc = cmd_grid_build(gr); });
    auto* gi = g->add_subcommand("inspect", "Print a grid file");
    gi->add_option("file", gr.in, "Grid file")->required()->check(CLI::ExistingFile);
    gi->add_flag("--json", gr.json_out, "JSON output");
    gi->callback([&] { rc = cmd_grid_inspect(gr); });

    std::string sim_config;
    bool sim_json = false, sim_table = false;
    auto* sm = app.add_subcommand("simulate", "Run a finite-sample study from a JSON config; CSV to stdout");
    sm->add_option("-f,--config", sim_config, "JSON config file")->required()->check(CLI::ExistingFile);
    sm->add_flag("--json", sim_json, "JSON output");
    sm->add_flag("--table", sim_table, "Human-readable tables");
    sm->callback([&] { rc = cmd_simulate(sim_config, sim_json, sim_table); });

    BreakdownOptions bd;
    auto* b = app.add_subcommand("breakdown", "Contamination sweep; CSV to stdout, knee to stderr");
    b->add_option("-e,--estimator", bd.estimator, "Estimator");
    b->add_option("--n", bd.cfg.n, "Sample size")->check(CLI::PositiveNumber);
    b->add_option("--M", bd.cfg.M, "Samples per m")->check(CLI::PositiveNumber);
    b->add_option("--m-max", bd.m_max, "Largest m");
    b->add_option("--step", bd.step, "Spacing of m")->check(CLI::PositiveNumber);
    b->add_option("--value", bd.cfg.value, "Contaminating value");
    b->add_option("--seed", bd.cfg.seed, "Seed");
    b->add_flag("!--no-refine", bd.refine, "Skip the unit-step pass before the knee");
    b->callback([&] { rc = cmd_breakdown(bd); });

    EfficiencyOptions ef;
    auto* e = app.add_subcommand("efficiency", "Asymptotic efficiencies over a shape range; CSV to stdout");
    e->add_option("--xi-min", ef.xi_min, "First node");
    e->add_option("--xi-max", ef.xi_max, "Last node");
    e->add_option("--nodes", ef.nodes, "Number of nodes");
    e->add_option("-r,--radius", ef.radius, "Radius for eff.re")->check(CLI::PositiveNumber);
    e->add_option("-e,--estimator", ef.estimators, "Estimators (default: all with an IF)");
    e->callback([&] { rc = cmd_efficiency(ef); });

    GenerateOptions gen;
    auto* gn = app.add_subcommand("generate", "Write a synthetic GPD loss file");
    gn->add_option("--n", gen.n, "Number of values")->check(CLI::PositiveNumber);
    gn->add_option("--xi", gen.xi, "Shape");
    gn->add_option("--beta", gen.beta, "Scale")->check(CLI::PositiveNumber);
    gn->add_option("-u,--threshold", gen.threshold, "Added to every value");
    gn->add_option("--seed", gen.seed, "Seed");
    gn->add_option("-o,--out", gen.out, "Output file (default: stdout)");
    gn->callback([&] { rc = cmd_generate(gen); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& ex) {
        return app.exit(ex);
    } catch (const std::exception& ex) {
        std::fprintf(stderr, "error: %s\n", ex.what());
        return 1;
    }
    return rc;
}
