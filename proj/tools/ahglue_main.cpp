#include <cstdio>
#include <filesystem>
#include <string>

#include "CLI11.hpp"
#include "ahg/pipeline.hpp"
#include "ahg/profiles.hpp"

namespace {

void print_run(const ahg::RunRecord& r) {
    std::printf("epsilon %.6g  (b = %.4g)\n", r.epsilon, r.b);
    if (!r.converged) {
        std::printf("  FAILED at stage %s: %s\n", r.failed_stage.c_str(), r.error.c_str());
        return;
    }
    std::printf("  |div mu|_{0,0,1}      %.6e\n", r.div_mu_norm_001);
    std::printf("  |nu - mu|_{C1_1}      %.6e\n", r.nu_minus_mu_C1_1);
    std::printf("  |L(1)|_sup            %.6e\n", r.lich_at_one_sup);
    std::printf("  |psi - 1|_sup         %.6e   (C2 %.6e)\n", r.psi_minus_one_sup,
                r.psi_minus_one_C2);
    std::printf("  min f                 %.6f\n", r.min_f);
    std::printf("  max Lap rho           %.6e\n", r.max_laplacian_rho);
    std::printf("  defnfnc C             %.6f\n", r.defnfnc_C);
    std::printf("  div nu (weighted)     %.6e   trace %.3e\n", r.york_div_weighted,
                r.nu_trace_sup);
    std::printf("  residuals mom/ham     %.3e / %.3e  (floors %.3e / %.3e)\n",
                r.momentum_residual, r.hamiltonian_residual, r.floor_momentum,
                r.floor_hamiltonian);
    std::printf("  Tr K - 3              %.3e\n", r.tr_K_dev);
    std::printf("  exterior dev g/K      %.3e / %.3e\n", r.exterior_dev_g, r.exterior_dev_K);
    std::printf("  york iters %d (res %.2e)  picard steps %d (res %.2e)\n", r.york_iterations,
                r.york_residual, r.picard_steps, r.lich_final_residual);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"CMC asymptotically hyperbolic gluing laboratory"};

    std::string config_path, out_dir, seed_family, dump_profiles_dir;
    double epsilon = -1, tol_linear = -1, tol_picard = -1;
    int grid_n = -1;
    bool sweep = false, check = false;

    app.add_option("--config", config_path, "JSON config file");
    app.add_option("--epsilon", epsilon, "neck parameter for a single run");
    app.add_flag("--sweep", sweep, "run the configured epsilon sweep");
    app.add_option("--grid-n", grid_n, "cells across the neck box");
    app.add_option("--seed-family", seed_family, "exact-hyperbolic | ac-numeric");
    app.add_option("--out-dir", out_dir, "output directory for reports and CSV dumps");
    app.add_option("--tol-linear", tol_linear, "relative residual for linear solves");
    app.add_option("--tol-picard", tol_picard, "sup-norm tolerance for the Picard iteration");
    app.add_flag("--check", check, "exit 4 if a sqrt(eps) bound check fails (sweep mode)");
    app.add_option("--dump-profiles", dump_profiles_dir,
                   "write phi/F/chi/sigma samples as CSV into this directory and exit");

    CLI11_PARSE(app, argc, argv);

    ahg::RunConfig cfg;
    try {
        if (!config_path.empty()) cfg = ahg::RunConfig::from_json_file(config_path);
        if (epsilon > 0) cfg.epsilon = epsilon;
        if (grid_n > 0) cfg.grid_n = grid_n;
        if (!seed_family.empty()) cfg.seed_family = seed_family;
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (tol_linear > 0) cfg.tol_linear = tol_linear;
        if (tol_picard > 0) cfg.tol_picard = tol_picard;
        cfg.validate();
    } catch (const std::exception& ex) {
        std::fprintf(stderr, "config error: %s\n", ex.what());
        return 2;
    }

    try {
        if (!dump_profiles_dir.empty()) {
            namespace fs = std::filesystem;
            fs::create_directories(dump_profiles_dir);
            ahg::dump_profile_csv(dump_profiles_dir + "/phi.csv", ahg::build_phi(), 1e-3, 1e3,
                                  2001, true);
            ahg::dump_profile_csv(dump_profiles_dir + "/F.csv", ahg::build_F(cfg.b_request),
                                  1e-3, 1e3, 2001, true);
            ahg::dump_profile_csv(dump_profiles_dir + "/chi.csv", ahg::build_chi(), 1e-3, 10,
                                  2001, false);
            ahg::dump_profile_csv(dump_profiles_dir + "/sigma.csv",
                                  ahg::build_concave_rescale(1.0), 1e-3, 2, 2001, false);
            return 0;
        }

        ahg::GlueReport rep = sweep ? ahg::epsilon_sweep(cfg) : ahg::run_single(cfg);
        rep.write(cfg.out_dir);
        for (const auto& r : rep.runs) print_run(r);
        if (sweep) {
            std::printf("\nrates (calibrated at largest epsilon, slack 1.2):\n");
            for (const auto& r : rep.rates)
                std::printf("  %-22s slope %.3f  C %.4e  bound %s\n", r.name.c_str(),
                            r.fit.slope, r.calibration_C, r.bound_ok ? "OK" : "VIOLATED");
        }
        bool solver_failed = false;
        for (const auto& r : rep.runs) solver_failed |= !r.converged;
        if (solver_failed) return 3;
        if (check && sweep) {
            for (const auto& r : rep.rates)
                if (!r.bound_ok) return 4;
            if (rep.partial) return 4;
        }
    } catch (const ahg::SolverError& ex) {
        std::fprintf(stderr, "solver failure: %s\n", ex.what());
        return 3;
    } catch (const std::exception& ex) {
        std::fprintf(stderr, "error: %s\n", ex.what());
        return 2;
    }
    return 0;
}
