#pragma once
#include <array>
#include <functional>
#include <memory>
#include <optional>

#include "ahg/grid.hpp"
#include "ahg/halfspace.hpp"
#include "ahg/profiles.hpp"

namespace ahg {

// One boundary chart of a seed data set, in background coordinates
// (rho, theta1, theta2) on the unit half-ball:
//   g    = rho^-2 (delta + m),   m = metric_error (m00,m0j = O(rho^2),
//                                    mjk = O(rho + |theta|^2))
//   mu   = rho^-1 mu_bar,        mu_bar trace-free w.r.t. (delta + m)
struct SeedChart {
    std::function<SymMat3(const Vec3&)> metric_error;
    std::function<SymMat3(const Vec3&)> mu_bar;
};

enum class SeedFamily { ExactHyperbolic, AcNumeric };

struct SeedData {
    std::array<SeedChart, 2> charts;
    SeedFamily family = SeedFamily::ExactHyperbolic;
    double jet_step = 1e-3;  // step for differencing the callables
    // constraint residuals of the seed itself, measured by its factory
    double momentum_floor = 0;
    double hamiltonian_floor = 0;

    bool identical_charts = true;  // both charts carry the same data
};

// Exact model seed: m = 0, mu = 0 in both charts.
SeedData exact_hyperbolic_seed();

struct SeedInvariantReport {
    double m00_over_rho2;      // sup |m_00| / rho^2 over samples
    double m0j_over_rho2;      // sup |m_0j| / rho^2
    double mjk_over_scale;     // sup |m_jk| / (rho + |theta|^2)
    double max_trace_residual; // sup |tr_{delta+m} mu_bar|
};
SeedInvariantReport verify_seed_invariants(const SeedData& seed, int samples = 500,
                                           unsigned rng_seed = 7);

struct SpliceConfig {
    double epsilon = 0.2;
    double b_request = 4.0;  // enlarged by the F constructor as needed
    double r_in = -1;        // <0: max(epsilon, 0.05)
    double r_out = -1;       // <0: min(1/epsilon, 20)
    int grid_n = 48;         // cells across [-r_out, r_out]
    bool symmetric = false;  // restrict to r >= 1 with reflection closure
    double y_band = 1.0;     // near-boundary band for the defining-function check

    double r_in_eff() const { return r_in > 0 ? r_in : std::max(epsilon, 0.05); }
    double r_out_eff() const { return r_out > 0 ? r_out : std::min(1.0 / epsilon, 20.0); }
    void validate() const;
};

struct DefiningFunctionReport {
    double C;            // smallest C with | |d rho|^2/rho^2 - 1 | <= (C/eps) rho on the band
    double max_mismatch; // sup over the band of the raw mismatch
    double y_band;
};

struct SupportReport {
    // empirical thresholds of the construction: largest sweep epsilon at which
    // the data cutoff support stays inside the un-blended region, and the
    // minimum SPD margin of the spliced metric
    double support_threshold_epsilon;
    bool support_disjoint;
    double min_spd_margin;
};

// The spliced family (M_eps, g_eps, rho_eps, mu_eps) on the neck chart.
// Construction is a pure function of (config, seeds); every *_at evaluator is
// closed-form in the seed callables, and the grid fields are its samples.
class Splice {
  public:
    Splice(const SpliceConfig& config, const SeedData& seeds);

    const SpliceConfig& config() const { return cfg_; }
    const SeedData& seeds() const { return seeds_; }
    const SmoothProfile& phi() const { return phi_; }
    const SmoothProfile& F() const { return F_; }
    const SmoothProfile& chi() const { return chi_; }
    double b() const { return F_.param; }

    // neck grid over {r_in <= r <= r_out, y >= 2h}, nodes outside masked
    ChartGrid build_neck_domain() const;

    // pointwise evaluators in neck coordinates (y, x1, x2)
    SymMat3 compactified_metric_at(const Vec3& p) const;      // delta + k_ab
    SymMat3 metric_at(const Vec3& p) const;                   // y^-2 (delta + k)
    double xi_at(const Vec3& p) const { return p[0] * F_.value(radius(p)); }
    double rho_at(const Vec3& p) const { return cfg_.epsilon * xi_at(p); }
    SymMat3 mu_at(const Vec3& p) const;
    // Divergence of the spliced mu as a neck one-form, evaluated without the
    // generic grid stencil: the cutoff-gradient contraction in closed form
    // plus chi times the seed divergence from small-step jets (the latter
    // vanishes to solver tolerance for divergence-free seeds).
    Vec3 divergence_oracle_at(const Vec3& p) const;
    // (div_g mu)_b of one seed chart at a background point, via jets
    Vec3 seed_divergence_bg(int chart, const Vec3& bg) const;

    // grid field builders (sample the evaluators; metric checked SPD)
    struct Fields {
        ChartGrid grid;
        MetricField g;
        SymTensorField k;
        ScalarField rho;
        SymTensorField mu;
    };
    std::shared_ptr<Fields> build_fields() const;

    OneFormField divergence_oracle_field(const ChartGrid& grid) const;

    // sup over the cutoff transition shell (sampled in background
    // coordinates, both charts, independent of neck truncation) of
    // rho_eps^-1 |div mu|_g: the weighted C^0_1 estimator of the divergence.
    double divergence_weighted_norm(int n_samples = 48) const;

    DefiningFunctionReport defining_function_estimate_check(const Fields& f) const;
    SupportReport support_report(const Fields& f) const;

    // superharmonicity margin of the proof's closed form:
    // -1 + (y^2/r^2)(3 r F' + r^2 F'')/F, evaluated at p
    double laplace_rho_margin_at(const Vec3& p) const;

  private:
    SpliceConfig cfg_;
    SeedData seeds_;
    SmoothProfile phi_, F_, chi_;

    // background points seen through the two charts
    Vec3 bg1(const Vec3& p) const;
    Vec3 bg2(const Vec3& p) const;
    double chi1_arg(const Vec3& p) const;
    Vec3 oracle_bg(int chart, const Vec3& bg) const;  // background one-form
};

}  // namespace ahg
