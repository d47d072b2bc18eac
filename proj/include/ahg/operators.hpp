#pragma once
#include <optional>

#include "ahg/grid.hpp"

namespace ahg {

// How a discrete metric degenerates at the ideal boundary.
//   Plain:        g itself is the smooth data; differences act on raw components.
//   Compactified: g = y^-2 hbar with hbar smooth up to y = 0. All geometry is
//                 computed from finite differences of hbar plus the exact
//                 conformal correction, and tensor fields are differenced
//                 through their y^rank-rescaled components. This keeps second
//                 order accuracy uniformly down to the y_min rows.
enum class Weighting { Plain, Compactified };

class OperatorContext {
  public:
    OperatorContext(const ChartGrid& grid, const MetricField& g, Weighting w);
    static OperatorContext from_compactified(const ChartGrid& grid, const SymTensorField& hbar);

    const ChartGrid& grid() const { return *grid_; }
    Weighting weighting() const { return weighting_; }

    SymMat3 metric(std::size_t n) const;
    SymMat3 metric_inverse(std::size_t n) const;
    const SymTensorField& compactified() const { return hbar_; }

    // Christoffel symbols of g at a node: Gamma[a][bc-sym-index]
    using Christoffel = std::array<std::array<double, 6>, 3>;
    Christoffel christoffel(int i, int j, int k) const;
    bool try_christoffel(int i, int j, int k, Christoffel& out) const;

    // Precompute Christoffels once; repeated operator applications (solver
    // inner loops) then read the cache instead of re-differencing the metric.
    void cache_christoffels();

    // derivative of a field component through the covariance rescale;
    // false when no stencil fits inside the active set
    bool partial(const FieldT<1>& u, int c, int i, int j, int k, int axis, double& out) const;
    bool partial(const FieldT<3>& u, int c, int i, int j, int k, int axis, double& out) const;
    bool partial(const FieldT<6>& u, int c, int i, int j, int k, int axis, double& out) const;

    double y_of_row(int i) const { return grid_->y_of(i); }
    double conformal_factor(int i) const {
        return weighting_ == Weighting::Compactified ? grid_->y_of(i) : 1.0;
    }

    // max over sampled nodes of |nabla_g g| (metric compatibility residual)
    double metric_compatibility_residual() const;

  private:
    const ChartGrid* grid_;
    Weighting weighting_;
    SymTensorField hbar_;
    SymTensorField hbar_inv_;
    std::vector<double> gamma_cache_;        // 18 * size when cached
    std::vector<std::uint8_t> gamma_valid_;  // per node

    template <int NC>
    bool partial_impl(const FieldT<NC>& u, int c, int i, int j, int k, int axis,
                      double& out) const;
    friend struct OperatorKernels;
};

struct CurvatureResult {
    ScalarField scalar;          // R(g)
    double max_abs_error = 0.0;  // filled by tests, not here
};

// Scalar curvature of the context metric, second-order stencils.
ScalarField curvature(const OperatorContext& ctx);

// (div_g S)_b = g^{ac} nabla_a S_cb  and  Tr_g S = g^{ab} S_ab
std::pair<OneFormField, ScalarField> divergence_and_trace(const OperatorContext& ctx,
                                                          const SymTensorField& S);

// (D_g X)_cd = 1/2 (nabla_c X_d + nabla_d X_c) - 1/3 (div_g X) g_cd
SymTensorField conformal_killing_apply(const OperatorContext& ctx, const VectorField& X);

// L_g X = -(div_g (D_g X))^sharp, assembled compositionally so that the York
// identity div(mu + D X) = div mu - (L X)^flat holds at the discrete level.
VectorField vector_laplacian_apply(const OperatorContext& ctx, const VectorField& X);

// Laplace-Beltrami of a scalar.
ScalarField laplace_beltrami(const OperatorContext& ctx, const ScalarField& u);

// d of a scalar (one-form).
OneFormField differential(const OperatorContext& ctx, const ScalarField& u);

// pointwise |S|^2_g with all indices raised by g
ScalarField tensor_norm_squared(const OperatorContext& ctx, const SymTensorField& S);

// momentum = div_g K - d Tr_g K ; hamiltonian = R(g) - |K|^2_g + (Tr_g K)^2
struct ConstraintResiduals {
    OneFormField momentum;
    ScalarField hamiltonian;
};
ConstraintResiduals constraint_residuals(const OperatorContext& ctx, const SymTensorField& K);
ConstraintResiduals constraint_residuals(const OperatorContext& ctx, const SymTensorField& K,
                                         const ScalarField& R);

// Lichnerowicz operator for tau = 3 CMC conformal data, plus the coefficient
// f = (R + 7 |nu|^2 + 30)/8 of its linearization at u = 1.
struct LichnerowiczTerms {
    ScalarField R;
    ScalarField nu_sq;
};
struct LichnerowiczResult {
    ScalarField value;  // Delta u - R u/8 + |nu|^2 u^-7 /8 - 3 u^5 /4
    ScalarField f;
};
LichnerowiczResult lichnerowicz_apply(const OperatorContext& ctx, const LichnerowiczTerms& t,
                                      const ScalarField& u);
LichnerowiczResult lichnerowicz_apply(const OperatorContext& ctx, const SymTensorField& nu,
                                      const ScalarField& u);

// P u = Delta_g u - f u
ScalarField linearized_lichnerowicz_apply(const OperatorContext& ctx, const ScalarField& f,
                                          const ScalarField& u);

// nodewise Delta_g rho plus its maximum over active nodes
struct SuperharmonicityReport {
    ScalarField laplacian;
    double max_value;
};
SuperharmonicityReport superharmonicity_check(const OperatorContext& ctx, const ScalarField& rho);

// ---- pointwise curvature from metric jets (independent of any grid) ----
//
// A jet of the compactified metric hbar at a point, assembled by differencing
// a callable at a small step; used where solve-grid stencils would be too
// coarse for the measured quantity.
struct MetricJet {
    SymMat3 h;
    std::array<SymMat3, 3> dh;
    std::array<std::array<SymMat3, 3>, 3> d2h;  // symmetric in the two slots
};
MetricJet metric_jet(const std::function<SymMat3(const Vec3&)>& hbar, const Vec3& p, double step);

// R of g = phi^-2 hbar at the jet point; phi = y (pass y=1, phi_grad={0,0,0}
// for the unweighted metric hbar itself).
double scalar_curvature_ah(const MetricJet& jet, double y);
double scalar_curvature_plain(const MetricJet& jet);

// Delta_g u at the jet point from a scalar jet (value ignored).
struct ScalarJet {
    double value;
    Vec3 grad;
    SymMat3 hess;
};
double laplacian_ah(const MetricJet& jet, const ScalarJet& u, double y);
ScalarJet scalar_jet(const std::function<double(const Vec3&)>& f, const Vec3& p, double step);

// (div_g S)_b at the jet point for g = y^-2 hbar and S = y^-1 Sbar, given the
// value and first derivatives of the rescaled components Sbar.
Vec3 divergence_ah(const MetricJet& jet, const SymMat3& Sbar,
                   const std::array<SymMat3, 3>& dSbar, double y);

}  // namespace ahg
