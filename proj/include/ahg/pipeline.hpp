#pragma once
#include <string>
#include <vector>

#include "ahg/solve.hpp"

namespace ahg {

// Flat configuration for the gluing pipeline; round-trips through JSON, and
// the CLI overrides individual fields.
struct RunConfig {
    std::string seed_family = "exact-hyperbolic";  // or "ac-numeric"
    double seed_amp_metric = 0.02;
    double seed_amp_mu = 0.05;
    int seed_grid_n = 32;
    double epsilon = 0.2;
    std::vector<double> epsilons = {0.4, 0.283, 0.2, 0.141, 0.1};
    int grid_n = 48;
    double b_request = 4.0;
    double r_in = -1;
    double r_out = -1;
    bool symmetric = false;
    double y_band = 1.0;
    double tol_linear = 1e-10;
    double tol_picard = 1e-10;
    std::string out_dir = "out";
    bool dump_fields = false;

    std::string to_json_text() const;
    static RunConfig from_json_text(const std::string& text);
    static RunConfig from_json_file(const std::string& path);
    void validate() const;

    SpliceConfig splice_config(double eps) const;
    SolverOptions solver_options() const;
};

// Everything measured for one epsilon.
struct RunRecord {
    double epsilon = 0;
    double b = 0;
    bool converged = false;
    std::string error;
    std::string failed_stage;

    // measured norms
    double div_mu_norm_001 = 0;
    double nu_minus_mu_C0_1 = 0;
    double nu_minus_mu_C1_1 = 0;
    double lich_at_one_sup = 0;
    double psi_minus_one_sup = 0;
    double psi_minus_one_C2 = 0;
    double min_f = 0;
    double max_laplacian_rho = 0;
    double defnfnc_C = 0;
    double york_div_weighted = 0;
    double nu_trace_sup = 0;
    double momentum_residual = 0;
    double hamiltonian_residual = 0;
    double floor_momentum = 0;
    double floor_hamiltonian = 0;
    double exterior_dev_g = 0;
    double exterior_dev_K = 0;
    double tr_K_dev = 0;
    double spd_margin = 0;
    bool support_disjoint = false;
    double support_threshold = 0;
    double f_minus_nusq_minus_3_sup = 0;

    // solver diagnostics
    int york_iterations = 0;
    double york_residual = 0;
    double york_inverse_norm = 0;
    bool york_monotone = false;
    int picard_steps = 0;
    std::vector<double> contraction;
    double lich_final_residual = 0;
    double lich_inverse_norm = 0;
};

struct RateFit {
    double slope = 0;
    double intercept = 0;
    double residual = 0;
};
// ordinary least squares of log(norm) against log(eps)
RateFit fit_rate(const std::vector<std::pair<double, double>>& pairs);

struct RateRow {
    std::string name;
    RateFit fit;
    double calibration_C = 0;  // norm(eps_max)/sqrt(eps_max)
    bool bound_ok = false;     // norm(eps) <= 1.2 C sqrt(eps) for all eps
};

struct GlueReport {
    std::string schema = "glue_report_v1";
    std::string calibration =
        "sqrt(eps) bounds are upper-bound checks with the constant calibrated at the largest "
        "sweep epsilon and slack factor 1.2; integer-order Moebius-scaled norms stand in for "
        "Holder norms";
    RunConfig config;
    double profile_b = 0;
    std::vector<RunRecord> runs;
    std::vector<RateRow> rates;
    bool partial = false;  // fewer than 4 converged sweep entries
    bool exterior_monotone_g = false;
    bool exterior_monotone_K = false;
    bool contraction_monotone = false;
    double inverse_norm_spread_york = 0;  // max/min across sweep
    double inverse_norm_spread_lich = 0;

    std::string to_json_text() const;
    void write(const std::string& out_dir) const;  // report.json + rates.csv
};

SeedData build_seed(const RunConfig& cfg);

// seed -> splice -> york -> lichnerowicz -> recompose -> residuals
RunRecord run_glue_pipeline(const RunConfig& cfg, const SeedData& seed, double eps);
GlueReport run_single(const RunConfig& cfg);
GlueReport epsilon_sweep(const RunConfig& cfg);

}  // namespace ahg
