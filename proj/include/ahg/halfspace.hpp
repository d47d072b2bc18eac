#pragma once
#include <functional>

#include "ahg/grid.hpp"

namespace ahg {

// Upper half-space model of hyperbolic 3-space: coordinates (y, x1, x2),
// y > 0, metric g_ab = y^-2 delta_ab, r = |(y,x1,x2)|.

inline double radius(const Vec3& p) { return norm(p); }

// g_ab = y^-2 delta_ab and its inverse y^2 delta^ab; y <= 0 is a domain error.
SymMat3 hyperbolic_metric_at(const Vec3& p);
SymMat3 hyperbolic_metric_inverse_at(const Vec3& p);

// Model defining function rho(y,x) = 2y / (|x|^2 + (y+1)^2) -- the half-space
// form of (1-|x|^2)/2 on the unit ball -- with its exact coordinate gradient.
struct ValueGrad {
    double value;
    Vec3 grad;
};
ValueGrad model_defining_function(const Vec3& p);

// Inversion in the unit hemisphere: I(y,x) = (y,x)/r^2, an involutive
// isometry of the model. Exposes the exact differential J = Q/r^2 and the
// reflection matrix Q^ac = (r^2 delta^ac - 2 x^a x^c)/r^2 (its own inverse).
Vec3 inversion(const Vec3& p);
Mat3 inversion_jacobian(const Vec3& p);
Mat3 reflection_q(const Vec3& p);

// Differentiable chart map with exact Jacobian, for pullbacks.
struct ChartMap {
    std::function<Vec3(const Vec3&)> value;
    std::function<Mat3(const Vec3&)> jacobian;

    static ChartMap identity();
    static ChartMap inversion_map();
    // dilation-translation (y,x) -> (s y, s x + c), the neck scaling maps
    static ChartMap scaling(double s, double c1 = 0, double c2 = 0);
};

// Moebius parametrization (y,x) -> (a y, a x + b): affine, Jacobian a*Id,
// pulls the model metric back to itself exactly.
struct MobiusMap {
    Vec3 center{1, 0, 0};  // image of the chart basepoint (1,0,0)
    double scale() const { return center[0]; }
    Vec3 apply(const Vec3& p) const {
        double a = scale();
        return {a * p[0], a * p[1] + center[1], a * p[2] + center[2]};
    }
    Mat3 jacobian() const {
        Mat3 J = Mat3::identity();
        for (int i = 0; i < 9; i += 4) J.v[i] = scale();
        return J;
    }
};
MobiusMap mobius_parametrization(const Vec3& center_x, double scale);

// (map^* g)_ab = d_a map^c d_b map^d g_cd(map(p)), analytic metric version.
SymMat3 pullback_metric(const ChartMap& map, const std::function<SymMat3(const Vec3&)>& metric,
                        const Vec3& p);

// Grid-field version: the metric at map(p) is tricubically interpolated;
// throws out_of_range if the target leaves the field's grid.
SymMat3 pullback_metric(const ChartMap& map, const SymTensorField& metric, const Vec3& p);

// covariant pullback of a one-form value: (map^* w)_a = J^c_a w_c
Vec3 pullback_oneform(const Mat3& J, const Vec3& w);

}  // namespace ahg
