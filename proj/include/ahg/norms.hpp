#pragma once
#include "ahg/grid.hpp"

namespace ahg {

// Discrete weighted C^k estimator: sup over active nodes of
//   rho^-delta * ( |u|_intrinsic + [order>=1] |Du|_intrinsic + [order>=2] |D^2 u| ),
// where intrinsic magnitudes are Euclidean component norms rescaled by the
// Moebius-chart factor y^rank, and each difference carries one extra power
// of the local y. Differences act on the rescaled components y^rank * u, so
// fields with the natural boundary growth of their covariance class are
// differenced through smooth data.
//
// order: 0, 1 or 2. Holder seminorms are not estimated.
double weighted_grid_norm(const FieldT<1>& u, const ScalarField& rho, double delta, int order);
double weighted_grid_norm(const FieldT<3>& u, const ScalarField& rho, double delta, int order);
double weighted_grid_norm(const FieldT<6>& u, const ScalarField& rho, double delta, int order);

// Same estimator restricted to nodes passing a predicate on the position.
double weighted_grid_norm_where(const FieldT<1>& u, const ScalarField& rho, double delta,
                                int order, const std::function<bool(const Vec3&)>& keep);
double weighted_grid_norm_where(const FieldT<3>& u, const ScalarField& rho, double delta,
                                int order, const std::function<bool(const Vec3&)>& keep);
double weighted_grid_norm_where(const FieldT<6>& u, const ScalarField& rho, double delta,
                                int order, const std::function<bool(const Vec3&)>& keep);

// sup over active nodes of |u| (all components), optionally interior-only.
template <int NC>
double sup_norm(const FieldT<NC>& u, bool interior_only = false);

}  // namespace ahg
