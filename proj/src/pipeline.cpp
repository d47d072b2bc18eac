#include "ahg/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "ahg/norms.hpp"
#include "json.hpp"

namespace ahg {

using ordered_json = nlohmann::ordered_json;

std::string RunConfig::to_json_text() const {
    ordered_json j;
    j["seed_family"] = seed_family;
    j["seed_amp_metric"] = seed_amp_metric;
    j["seed_amp_mu"] = seed_amp_mu;
    j["seed_grid_n"] = seed_grid_n;
    j["epsilon"] = epsilon;
    j["epsilons"] = epsilons;
    j["grid_n"] = grid_n;
    j["b_request"] = b_request;
    j["r_in"] = r_in;
    j["r_out"] = r_out;
    j["symmetric"] = symmetric;
    j["y_band"] = y_band;
    j["tol_linear"] = tol_linear;
    j["tol_picard"] = tol_picard;
    j["out_dir"] = out_dir;
    j["dump_fields"] = dump_fields;
    return j.dump(2);
}

RunConfig RunConfig::from_json_text(const std::string& text) {
    ordered_json j = ordered_json::parse(text);
    RunConfig c;
    auto get = [&](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("seed_family", c.seed_family);
    get("seed_amp_metric", c.seed_amp_metric);
    get("seed_amp_mu", c.seed_amp_mu);
    get("seed_grid_n", c.seed_grid_n);
    get("epsilon", c.epsilon);
    get("epsilons", c.epsilons);
    get("grid_n", c.grid_n);
    get("b_request", c.b_request);
    get("r_in", c.r_in);
    get("r_out", c.r_out);
    get("symmetric", c.symmetric);
    get("y_band", c.y_band);
    get("tol_linear", c.tol_linear);
    get("tol_picard", c.tol_picard);
    get("out_dir", c.out_dir);
    get("dump_fields", c.dump_fields);
    return c;
}

RunConfig RunConfig::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config file not found: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json_text(text);
}

void RunConfig::validate() const {
    if (seed_family != "exact-hyperbolic" && seed_family != "ac-numeric")
        throw std::invalid_argument("unknown seed_family: " + seed_family);
    splice_config(epsilon).validate();
}

SpliceConfig RunConfig::splice_config(double eps) const {
    SpliceConfig sc;
    sc.epsilon = eps;
    sc.b_request = b_request;
    sc.r_in = r_in;
    sc.r_out = r_out;
    sc.grid_n = grid_n;
    sc.symmetric = symmetric;
    sc.y_band = y_band;
    return sc;
}

SolverOptions RunConfig::solver_options() const {
    SolverOptions o;
    o.tol_linear = tol_linear;
    return o;
}

RateFit fit_rate(const std::vector<std::pair<double, double>>& pairs) {
    if (pairs.size() < 3) throw std::invalid_argument("fit_rate: need at least 3 pairs");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::vector<std::pair<double, double>> logs;
    for (auto& [e, v] : pairs) {
        if (!(e > 0) || !(v > 0))
            throw std::invalid_argument("fit_rate: values must be positive");
        logs.emplace_back(std::log(e), std::log(v));
    }
    for (auto& [x, y] : logs) {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    double n = double(logs.size());
    RateFit f;
    f.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    f.intercept = (sy - f.slope * sx) / n;
    double ss = 0;
    for (auto& [x, y] : logs) {
        double r = y - (f.slope * x + f.intercept);
        ss += r * r;
    }
    f.residual = std::sqrt(ss / n);
    return f;
}

SeedData build_seed(const RunConfig& cfg) {
    if (cfg.seed_family == "exact-hyperbolic") return exact_hyperbolic_seed();
    AcSeedOptions opt;
    opt.grid_n = cfg.seed_grid_n;
    opt.solver = cfg.solver_options();
    opt.tol_picard = cfg.tol_picard;
    return ac_seed_data(default_ac_spec(cfg.seed_amp_metric, cfg.seed_amp_mu), opt);
}

namespace {

ScalarField curvature_from_jets(const Splice& splice, const ChartGrid& g) {
    double step = 1e-3;
    if (splice.seeds().family == SeedFamily::AcNumeric)
        step = std::clamp(splice.seeds().jet_step / (2 * splice.config().epsilon), 1e-3, 0.08);
    auto hcall = [&splice](const Vec3& q) { return splice.compactified_metric_at(q); };
    ScalarField R(g);
    for (int i = 0; i < g.n_y; ++i)
        for (int j = 0; j < g.n_x1; ++j)
            for (int k = 0; k < g.n_x2; ++k) {
                std::size_t n = g.index(i, j, k);
                if (!g.active(n)) continue;
                Vec3 p = g.point(i, j, k);
                // keep the differencing stencil inside the evaluable region
                double r = radius(p);
                double lim = std::min({0.45 * p[0], r - splice.config().epsilon * 0.999,
                                       1.0 / splice.config().epsilon - r});
                double st = std::clamp(lim, 1e-4, step);
                MetricJet jet = metric_jet(hcall, p, st);
                R[n] = scalar_curvature_ah(jet, p[0]);
            }
    return R;
}

template <typename Fn>
double sup_over_band(const ChartGrid& g, double lo, double hi, double eps, Fn&& fn) {
    double best = 0;
    for (int i = 0; i < g.n_y; ++i)
        for (int j = 0; j < g.n_x1; ++j)
            for (int k = 0; k < g.n_x2; ++k) {
                std::size_t n = g.index(i, j, k);
                if (!g.active(n)) continue;
                Vec3 p = g.point(i, j, k);
                double t = eps * radius(p);  // |theta_1| of the chart-1 image
                if (t < lo || t > hi) continue;
                best = std::max(best, fn(n, p));
            }
    return best;
}

void dump_run_fields(const RunConfig& cfg, double eps, const Splice::Fields& f,
                     const ScalarField& psi, const SymTensorField& nu) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    char tag[32];
    std::snprintf(tag, sizeof tag, "eps_%.6g", eps);
    std::string base = cfg.out_dir + "/" + tag;
    dump_field_csv(base + "_metric.csv", static_cast<const FieldT<6>&>(f.g),
                   {"g00", "g01", "g02", "g11", "g12", "g22"});
    dump_field_csv(base + "_rho.csv", static_cast<const FieldT<1>&>(f.rho), {"rho"});
    dump_field_csv(base + "_mu.csv", static_cast<const FieldT<6>&>(f.mu),
                   {"mu00", "mu01", "mu02", "mu11", "mu12", "mu22"});
    dump_field_csv(base + "_psi.csv", static_cast<const FieldT<1>&>(psi), {"psi"});
    dump_field_csv(base + "_nu.csv", static_cast<const FieldT<6>&>(nu),
                   {"nu00", "nu01", "nu02", "nu11", "nu12", "nu22"});
}

}  // namespace

RunRecord run_glue_pipeline(const RunConfig& cfg, const SeedData& seed, double eps) {
    RunRecord rec;
    rec.epsilon = eps;
    std::string stage = "splice";
    try {
        Splice splice(cfg.splice_config(eps), seed);
        rec.b = splice.b();
        auto fields = splice.build_fields();
        const ChartGrid& grid = fields->grid;

        rec.div_mu_norm_001 = splice.divergence_weighted_norm();
        SupportReport sup = splice.support_report(*fields);
        rec.support_disjoint = sup.support_disjoint;
        rec.support_threshold = sup.support_threshold_epsilon;
        rec.spd_margin = sup.min_spd_margin;
        DefiningFunctionReport dfr = splice.defining_function_estimate_check(*fields);
        rec.defnfnc_C = dfr.C;

        stage = "operators";
        SymTensorField hbar(grid);
        for (std::size_t n = 0; n < grid.size(); ++n)
            for (int c = 0; c < 6; ++c)
                hbar.at(c, n) = fields->k.at(c, n) + (c == 0 || c == 3 || c == 5 ? 1.0 : 0.0);
        OperatorContext ctx = OperatorContext::from_compactified(grid, hbar);
        ctx.cache_christoffels();
        ScalarField R = curvature_from_jets(splice, grid);

        SuperharmonicityReport harm = superharmonicity_check(ctx, fields->rho);
        rec.max_laplacian_rho = harm.max_value;

        stage = "york";
        BoundaryPolicy policy;
        policy.reflection_symmetry = cfg.symmetric;
        SolverOptions opt = cfg.solver_options();
        YorkResult york = york_project(ctx, fields->mu, policy, opt);
        rec.york_iterations = york.diagnostics.iterations;
        rec.york_residual = york.diagnostics.final_relative_residual;
        rec.york_inverse_norm = york.diagnostics.inverse_norm_estimate;
        rec.york_monotone = york.diagnostics.residuals_monotone();

        // weighted divergence of nu on equation rows only
        OneFormField divnu_eq(grid);
        for (std::size_t n = 0; n < grid.size(); ++n)
            if (york.roles[n] == NodeRole::Unknown)
                for (int a = 0; a < 3; ++a) divnu_eq.at(a, n) = york.div_nu.at(a, n);
        rec.york_div_weighted = weighted_grid_norm(divnu_eq, fields->rho, 1.0, 0);
        ScalarField trnu = divergence_and_trace(ctx, york.nu).second;
        rec.nu_trace_sup = sup_norm(trnu, false);

        SymTensorField DX(grid);
        for (std::size_t n = 0; n < grid.size(); ++n)
            for (int c = 0; c < 6; ++c) DX.at(c, n) = york.nu.at(c, n) - fields->mu.at(c, n);
        rec.nu_minus_mu_C0_1 = weighted_grid_norm(DX, fields->rho, 1.0, 0);
        rec.nu_minus_mu_C1_1 = weighted_grid_norm(DX, fields->rho, 1.0, 1);

        stage = "lichnerowicz";
        LichnerowiczTerms terms{R, tensor_norm_squared(ctx, york.nu)};
        for (std::size_t n = 0; n < grid.size(); ++n)
            if (grid.active(n)) {
                double l1 = -(terms.R[n] + 6.0 - terms.nu_sq[n]) / 8.0;
                rec.lich_at_one_sup = std::max(rec.lich_at_one_sup, std::abs(l1));
                rec.f_minus_nusq_minus_3_sup = std::max(
                    rec.f_minus_nusq_minus_3_sup, std::abs((terms.R[n] + 6.0) / 8.0));
            }
        LichnerowiczSolveResult lich =
            lichnerowicz_solve(ctx, terms, policy, opt, cfg.tol_picard);
        rec.min_f = lich.trace.min_f;
        rec.picard_steps = lich.trace.steps;
        rec.contraction = lich.trace.contraction;
        rec.lich_final_residual = lich.trace.final_operator_residual;
        rec.lich_inverse_norm =
            lich.trace.linear.empty() ? 0 : lich.trace.linear.front().inverse_norm_estimate;

        ScalarField eta(grid);
        for (std::size_t n = 0; n < grid.size(); ++n) eta[n] = lich.psi[n] - 1.0;
        rec.psi_minus_one_sup = sup_norm(static_cast<const FieldT<1>&>(eta), false);
        rec.psi_minus_one_C2 = weighted_grid_norm(eta, fields->rho, 0.0, 2);

        stage = "recompose";
        MetricField g_out(grid);
        SymTensorField K_out(grid);
        for (std::size_t n = 0; n < grid.size(); ++n) {
            if (!grid.active(n)) continue;
            double ps = lich.psi[n];
            double ps4 = ps * ps * ps * ps;
            SymMat3 ge = fields->g.tensor_at(n) * ps4;
            g_out.set_tensor(n, ge);
            K_out.set_tensor(n, ge + york.nu.tensor_at(n) * (1.0 / (ps * ps)));
        }
        OperatorContext ctx_out(grid, g_out, Weighting::Compactified);
        ctx_out.cache_christoffels();
        ConstraintResiduals cres = constraint_residuals(ctx_out, K_out);
        ScalarField trK = divergence_and_trace(ctx_out, K_out).second;
        auto roles = classify_nodes(grid, false);
        for (std::size_t n = 0; n < grid.size(); ++n) {
            if (roles[n] != NodeRole::Unknown) continue;
            for (int a = 0; a < 3; ++a)
                rec.momentum_residual =
                    std::max(rec.momentum_residual, std::abs(cres.momentum.at(a, n)));
            rec.hamiltonian_residual =
                std::max(rec.hamiltonian_residual, std::abs(cres.hamiltonian[n]));
            rec.tr_K_dev = std::max(rec.tr_K_dev, std::abs(trK[n] - 3.0));
        }

        stage = "floor";
        {
            // the seed's own discretization floor on the same grid: pure
            // chart-1 pullback, no blending, no cutoff
            MetricField g_seed(grid);
            SymTensorField K_seed(grid);
            for (int i = 0; i < grid.n_y; ++i)
                for (int j = 0; j < grid.n_x1; ++j)
                    for (int k = 0; k < grid.n_x2; ++k) {
                        std::size_t n = grid.index(i, j, k);
                        if (!grid.active(n)) continue;
                        Vec3 p = grid.point(i, j, k);
                        Vec3 bg{eps * p[0], eps * p[1], eps * p[2]};
                        SymMat3 hb = SymMat3::identity() + seed.charts[0].metric_error(bg);
                        SymMat3 gs = hb * (1.0 / (p[0] * p[0]));
                        g_seed.set_tensor(n, gs);
                        SymMat3 mb = seed.charts[0].mu_bar(bg);
                        K_seed.set_tensor(n, gs + mb * (eps / p[0]));
                    }
            OperatorContext ctx_seed(grid, g_seed, Weighting::Compactified);
            ctx_seed.cache_christoffels();
            ConstraintResiduals fres = constraint_residuals(ctx_seed, K_seed);
            for (std::size_t n = 0; n < grid.size(); ++n) {
                if (roles[n] != NodeRole::Unknown) continue;
                for (int a = 0; a < 3; ++a)
                    rec.floor_momentum =
                        std::max(rec.floor_momentum, std::abs(fres.momentum.at(a, n)));
                rec.floor_hamiltonian =
                    std::max(rec.floor_hamiltonian, std::abs(fres.hamiltonian[n]));
            }
        }

        stage = "exterior";
        rec.exterior_dev_g = sup_over_band(grid, 0.85, 0.95, eps, [&](std::size_t n, const Vec3& p) {
            Vec3 bg{eps * p[0], eps * p[1], eps * p[2]};
            SymMat3 hseed = SymMat3::identity() + seed.charts[0].metric_error(bg);
            SymMat3 hout = g_out.tensor_at(n) * (p[0] * p[0]);
            double worst = 0;
            for (int c = 0; c < 6; ++c) worst = std::max(worst, std::abs(hout.v[c] - hseed.v[c]));
            return worst;
        });
        rec.exterior_dev_K = sup_over_band(grid, 0.85, 0.95, eps, [&](std::size_t n, const Vec3& p) {
            Vec3 bg{eps * p[0], eps * p[1], eps * p[2]};
            SymMat3 hseed = SymMat3::identity() + seed.charts[0].metric_error(bg);
            SymMat3 Kseed = hseed + seed.charts[0].mu_bar(bg) * (eps * p[0]);
            SymMat3 Kout = K_out.tensor_at(n) * (p[0] * p[0]);
            double worst = 0;
            for (int c = 0; c < 6; ++c) worst = std::max(worst, std::abs(Kout.v[c] - Kseed.v[c]));
            return worst;
        });

        if (cfg.dump_fields) dump_run_fields(cfg, eps, *fields, lich.psi, york.nu);
        rec.converged = true;
    } catch (const std::exception& ex) {
        rec.error = ex.what();
        rec.failed_stage = stage;
        rec.converged = false;
    }
    return rec;
}

namespace {

ordered_json record_to_json(const RunRecord& r) {
    ordered_json j;
    j["epsilon"] = r.epsilon;
    j["b"] = r.b;
    j["converged"] = r.converged;
    if (!r.converged) {
        j["error"] = r.error;
        j["failed_stage"] = r.failed_stage;
    }
    j["div_mu_norm_001"] = r.div_mu_norm_001;
    j["nu_minus_mu_C0_1"] = r.nu_minus_mu_C0_1;
    j["nu_minus_mu_C1_1"] = r.nu_minus_mu_C1_1;
    j["lich_at_one_sup"] = r.lich_at_one_sup;
    j["psi_minus_one_sup"] = r.psi_minus_one_sup;
    j["psi_minus_one_C2"] = r.psi_minus_one_C2;
    j["min_f"] = r.min_f;
    j["max_laplacian_rho"] = r.max_laplacian_rho;
    j["defnfnc_C"] = r.defnfnc_C;
    j["york_div_weighted"] = r.york_div_weighted;
    j["nu_trace_sup"] = r.nu_trace_sup;
    j["momentum_residual"] = r.momentum_residual;
    j["hamiltonian_residual"] = r.hamiltonian_residual;
    j["floor_momentum"] = r.floor_momentum;
    j["floor_hamiltonian"] = r.floor_hamiltonian;
    j["exterior_dev_g"] = r.exterior_dev_g;
    j["exterior_dev_K"] = r.exterior_dev_K;
    j["tr_K_dev"] = r.tr_K_dev;
    j["spd_margin"] = r.spd_margin;
    j["support_disjoint"] = r.support_disjoint;
    j["support_threshold"] = r.support_threshold;
    j["f_minus_nusq_minus_3_sup"] = r.f_minus_nusq_minus_3_sup;
    j["york_iterations"] = r.york_iterations;
    j["york_residual"] = r.york_residual;
    j["york_inverse_norm"] = r.york_inverse_norm;
    j["york_monotone"] = r.york_monotone;
    j["picard_steps"] = r.picard_steps;
    j["contraction"] = r.contraction;
    j["lich_final_residual"] = r.lich_final_residual;
    j["lich_inverse_norm"] = r.lich_inverse_norm;
    return j;
}

}  // namespace

std::string GlueReport::to_json_text() const {
    ordered_json j;
    j["schema"] = schema;
    j["calibration"] = calibration;
    j["config"] = ordered_json::parse(config.to_json_text());
    j["profile_b"] = profile_b;
    j["partial"] = partial;
    j["exterior_monotone_g"] = exterior_monotone_g;
    j["exterior_monotone_K"] = exterior_monotone_K;
    j["contraction_monotone"] = contraction_monotone;
    j["inverse_norm_spread_york"] = inverse_norm_spread_york;
    j["inverse_norm_spread_lich"] = inverse_norm_spread_lich;
    j["runs"] = ordered_json::array();
    for (const auto& r : runs) j["runs"].push_back(record_to_json(r));
    j["rates"] = ordered_json::array();
    for (const auto& r : rates) {
        ordered_json row;
        row["name"] = r.name;
        row["slope"] = r.fit.slope;
        row["intercept"] = r.fit.intercept;
        row["fit_residual"] = r.fit.residual;
        row["calibration_C"] = r.calibration_C;
        row["bound_ok"] = r.bound_ok;
        j["rates"].push_back(row);
    }
    return j.dump(2);
}

void GlueReport::write(const std::string& out_dir) const {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    {
        std::ofstream out(out_dir + "/report.json");
        out << to_json_text() << '\n';
    }
    std::ofstream rc(out_dir + "/rates.csv");
    rc << "name,slope,intercept,fit_residual,calibration_C,bound_ok\n";
    char buf[220];
    for (const auto& r : rates) {
        std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g,%.17g,%.17g,%d\n", r.name.c_str(),
                      r.fit.slope, r.fit.intercept, r.fit.residual, r.calibration_C,
                      int(r.bound_ok));
        rc << buf;
    }
}

GlueReport run_single(const RunConfig& cfg) {
    cfg.validate();
    GlueReport rep;
    rep.config = cfg;
    SeedData seed = build_seed(cfg);
    RunRecord rec = run_glue_pipeline(cfg, seed, cfg.epsilon);
    rep.profile_b = rec.b;
    rep.runs.push_back(std::move(rec));
    return rep;
}

GlueReport epsilon_sweep(const RunConfig& cfg) {
    if (cfg.epsilons.size() < 4)
        throw std::invalid_argument("epsilon_sweep: need at least 4 epsilon values");
    std::vector<double> eps = cfg.epsilons;
    std::sort(eps.begin(), eps.end(), std::greater<>());
    for (std::size_t i = 2; i < eps.size(); ++i) {
        double q1 = eps[i - 1] / eps[i - 2], q2 = eps[i] / eps[i - 1];
        if (std::abs(q1 - q2) > 0.2 * q1)
            throw std::invalid_argument("epsilon_sweep: epsilon list must be near-geometric");
    }
    GlueReport rep;
    rep.config = cfg;
    SeedData seed = build_seed(cfg);
    for (double e : eps) rep.runs.push_back(run_glue_pipeline(cfg, seed, e));
    for (auto& r : rep.runs)
        if (r.converged) rep.profile_b = r.b;

    std::vector<const RunRecord*> ok;
    for (auto& r : rep.runs)
        if (r.converged) ok.push_back(&r);
    rep.partial = ok.size() < 4;

    auto add_rate = [&](const std::string& name, auto getter) {
        std::vector<std::pair<double, double>> pairs;
        for (auto* r : ok) {
            double v = getter(*r);
            if (v > 0) pairs.emplace_back(r->epsilon, v);
        }
        if (pairs.size() < 3) return;
        RateRow row;
        row.name = name;
        row.fit = fit_rate(pairs);
        double emax = pairs.front().first, vmax = pairs.front().second;
        for (auto& [e, v] : pairs)
            if (e > emax) {
                emax = e;
                vmax = v;
            }
        row.calibration_C = vmax / std::sqrt(emax);
        row.bound_ok = true;
        for (auto& [e, v] : pairs)
            if (v > 1.2 * row.calibration_C * std::sqrt(e)) row.bound_ok = false;
        rep.rates.push_back(std::move(row));
    };
    add_rate("div_mu_norm_001", [](const RunRecord& r) { return r.div_mu_norm_001; });
    add_rate("nu_minus_mu_C1_1", [](const RunRecord& r) { return r.nu_minus_mu_C1_1; });
    add_rate("lich_at_one_sup", [](const RunRecord& r) { return r.lich_at_one_sup; });
    add_rate("psi_minus_one_sup", [](const RunRecord& r) { return r.psi_minus_one_sup; });

    auto monotone = [&](auto getter) {
        for (std::size_t i = 1; i < ok.size(); ++i)
            if (getter(*ok[i]) > getter(*ok[i - 1]) * (1 + 1e-12)) return false;
        return ok.size() >= 2;
    };
    rep.exterior_monotone_g = monotone([](const RunRecord& r) { return r.exterior_dev_g; });
    rep.exterior_monotone_K = monotone([](const RunRecord& r) { return r.exterior_dev_K; });
    rep.contraction_monotone = monotone([](const RunRecord& r) {
        return r.contraction.empty() ? 0.0 : r.contraction.front();
    });
    auto spread = [&](auto getter) {
        double lo = std::numeric_limits<double>::infinity(), hi = 0;
        for (auto* r : ok) {
            double v = getter(*r);
            if (v <= 0) continue;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        return lo < hi ? hi / lo : 1.0;
    };
    rep.inverse_norm_spread_york = spread([](const RunRecord& r) { return r.york_inverse_norm; });
    rep.inverse_norm_spread_lich = spread([](const RunRecord& r) { return r.lich_inverse_norm; });
    return rep;
}

}  // namespace ahg
