#pragma once
#include <functional>
#include <string>
#include <vector>

#include "ahg/common.hpp"

namespace ahg {

// A C^2 profile on (0,inf) with closed-form value and first two derivatives.
struct SmoothProfile {
    std::function<double(double)> value;
    std::function<double(double)> d1;
    std::function<double(double)> d2;
    std::string name;
    // parameter record (b for the defining-function interpolant, etc.)
    double param = 0;

    double operator()(double r) const { return value(r); }
};

// Quintic smoothstep s: [0,1]->[0,1], s'(0)=s'(1)=s''(0)=s''(1)=0.
double smoothstep5(double t);
double smoothstep5_d1(double t);
double smoothstep5_d2(double t);

// Metric-blend cutoff phi: nondecreasing, phi=0 on (0,1/2], phi=1 on [2,inf),
// phi(r) + phi(1/r) = 1. Built as 1/2 - phi0(r) + phi0(1/r) from a base bump.
SmoothProfile build_phi();

// Defining-function interpolant F: F(1/r) = r^2 F(r), F=1 for r>=b,
// F=1/r^2 for r<=1/b, |3rF'+r^2F''|/F <= 1/2. The constructor measures
// C = sup|3 r psi0' + r^2 psi0''| for its base bump and enlarges b until
// (2/b)^2 <= 1/(2C); pass b_request >= 2.
SmoothProfile build_F(double b_request);

// Data cutoff chi: 0 on (0,2], 1 on [3,inf), smooth in between.
SmoothProfile build_chi();

// chi_eps in background coordinates (rho, theta1, theta2): the half-ellipsoid
// cutoff chi(rho^2/(2 eps^2) + |theta|^2/eps) inside the unit half-ball
// chart, identically 1 outside it. The normal semi-axis is scaled so the
// level-2 ellipsoid inscribes the 2eps coordinate ball: the cutoff then
// vanishes on the whole region where the spliced metric is blended.
double chi_eps(const SmoothProfile& chi, double eps, const Vec3& bg_point);
double chi_eps_argument(double eps, const Vec3& bg_point);

// Concave defining-function rescale: sigma(x)=x for x<=delta/2,
// sigma=3 delta/4 for x>=delta, sigma'>=0, sigma''<=0.
SmoothProfile build_concave_rescale(double delta_threshold);
std::vector<double> concave_rescale(const std::vector<double>& rho_values,
                                    double delta_threshold);

// CSV dump of a profile on a sample, for plotting.
void dump_profile_csv(const std::string& path, const SmoothProfile& p, double r_min,
                      double r_max, int n, bool log_spaced);

}  // namespace ahg
