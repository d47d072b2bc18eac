#pragma once
#include <memory>
#include <vector>

#include "ahg/operators.hpp"
#include "ahg/splice.hpp"

namespace ahg {

enum class LinearOperatorKind { VectorLaplacian, LinearizedLichnerowicz };

// Boundary-condition policy for the discretized solves.
//  - ideal boundary (y = y_min rows): Dirichlet zero; justified by the decay
//    rates of the corrected quantities (the vector correction falls off like
//    rho^2, the conformal perturbation like rho).
//  - outer edges and mask boundaries: Dirichlet from seed data (zero for the
//    correction fields).
//  - optional reflection closure across r = 1 for inversion-symmetric data.
struct BoundaryPolicy {
    bool reflection_symmetry = false;
    ScalarField const* dirichlet_scalar = nullptr;   // closure values; zero if null
    VectorField const* dirichlet_vector = nullptr;
};

struct SolverOptions {
    double tol_linear = 1e-10;
    int max_iterations = 20000;
    int gmres_restart = 40;
    std::size_t direct_fallback_max_unknowns = 36000;
    bool prefer_direct = false;
};

struct SolveDiagnostics {
    int iterations = 0;
    double final_relative_residual = 0;
    bool converged = false;
    bool used_direct = false;
    double inverse_norm_estimate = 0;  // sup|u| / sup|rhs|
    std::vector<double> residual_history;
    bool residuals_monotone() const;
};

class SolverError : public std::runtime_error {
  public:
    SolverError(const std::string& what, SolveDiagnostics d)
        : std::runtime_error(what), diagnostics(std::move(d)) {}
    SolveDiagnostics diagnostics;
};

// Node roles in the discrete system.
enum class NodeRole : std::uint8_t { Unknown = 0, Dirichlet = 1, Inactive = 2, Ghost = 3 };
std::vector<NodeRole> classify_nodes(const ChartGrid& grid, bool reflection);

// Solve P u = rhs (scalar, P = Delta_g - f) to the requested relative
// residual; the result satisfies the boundary policy exactly at closure nodes.
ScalarField assemble_and_solve(OperatorContext& ctx, const ScalarField& f,
                               const ScalarField& rhs, const BoundaryPolicy& policy,
                               const SolverOptions& opt, SolveDiagnostics* diag = nullptr);

// Solve L_g X = rhs (vector Laplacian).
VectorField assemble_and_solve(OperatorContext& ctx, const VectorField& rhs,
                               const BoundaryPolicy& policy, const SolverOptions& opt,
                               SolveDiagnostics* diag = nullptr);

// York projection: X solves L_g X = (div_g mu)^sharp, nu = mu + D_g X.
// div_nu is the same discrete divergence applied to nu; on equation rows it
// equals the linear residual by construction.
struct YorkResult {
    VectorField X;
    SymTensorField nu;
    OneFormField div_nu;
    std::vector<NodeRole> roles;
    SolveDiagnostics diagnostics;
};
YorkResult york_project(OperatorContext& ctx, const SymTensorField& mu,
                        const BoundaryPolicy& policy, const SolverOptions& opt);

// Quadratic error of the Lichnerowicz operator around u = 1:
// Q(eta) = |nu|^2 ((1+eta)^-7 - 1 + 7 eta)/8 - 3((1+eta)^5 - 1 - 5 eta)/4.
double quadratic_remainder(double nu_sq, double eta);
ScalarField quadratic_remainder(const ScalarField& nu_sq, const ScalarField& eta);

// Picard iteration for the Lichnerowicz equation: eta_{n+1} =
// -P^{-1}(L(1) + Q(eta_n)) from eta_0 = 0, stopping when the sup-norm update
// falls below tol_picard. Requires min f > 0 on active nodes.
struct PicardTrace {
    std::vector<double> update_sup;        // ||eta_{n+1} - eta_n||_inf per step
    std::vector<double> contraction;       // ratios of successive updates
    std::vector<double> iterate_sup;       // ||eta_n||_inf
    std::vector<SolveDiagnostics> linear;  // one per linear solve
    int steps = 0;
    bool converged = false;
    double final_operator_residual = 0;  // sup over interior equation rows of L(psi)
    double min_f = 0;
};
struct LichnerowiczSolveResult {
    ScalarField psi;
    PicardTrace trace;
};
LichnerowiczSolveResult lichnerowicz_solve(OperatorContext& ctx, const LichnerowiczTerms& terms,
                                           const BoundaryPolicy& policy, const SolverOptions& opt,
                                           double tol_picard = 1e-10, int max_steps = 40);

// ---- Andersson-Chruciel-type seed factory ----
//
// Conformal data on the background chart: a closed-form conformally compact
// metric perturbation and a closed-form trace-free seed tensor; the factory
// York-projects, solves the Lichnerowicz problem with psi -> 1 at the ideal
// boundary, and packages (g, mu) = (psi^4 lambda, psi^-2 nu) as seed charts.
struct AcSeedSpec {
    std::function<SymMat3(const Vec3&)> lambda_error;  // m^lambda_ab, O(rho^2)
    std::function<SymMat3(const Vec3&)> mu_bar_raw;    // trace-corrected internally
};
AcSeedSpec default_ac_spec(double amp_metric = 0.02, double amp_mu = 0.05);

struct AcSeedOptions {
    int grid_n = 32;           // cells across the background chart box
    SolverOptions solver;
    double tol_picard = 1e-10;
};

SeedData ac_seed_data(const AcSeedSpec& spec, const AcSeedOptions& opt);
SeedData ac_seed_data(const AcSeedSpec& spec1, const AcSeedSpec& spec2, const AcSeedOptions& opt);

}  // namespace ahg
