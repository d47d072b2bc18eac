#include "ahg/profiles.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

namespace ahg {

double smoothstep5(double t) {
    if (t <= 0) return 0;
    if (t >= 1) return 1;
    return t * t * t * (10 + t * (-15 + 6 * t));
}
double smoothstep5_d1(double t) {
    if (t <= 0 || t >= 1) return 0;
    return 30 * t * t * (t - 1) * (t - 1);
}
double smoothstep5_d2(double t) {
    if (t <= 0 || t >= 1) return 0;
    return 60 * t * (2 * t - 1) * (t - 1);
}

namespace {

// base bump phi0: 1/2 for r<=1/2, decreasing to 0 at r=2, C^2 quintic ramp
inline double phi0(double r) {
    return 0.5 * (1.0 - smoothstep5((r - 0.5) / 1.5));
}
inline double phi0_d1(double r) {
    return -0.5 * smoothstep5_d1((r - 0.5) / 1.5) / 1.5;
}
inline double phi0_d2(double r) {
    return -0.5 * smoothstep5_d2((r - 0.5) / 1.5) / (1.5 * 1.5);
}

// base bump psi0 for F: 1 for r<=1, quintic ramp down, 0 for r>=2
inline double psi0(double r) { return 1.0 - smoothstep5(r - 1.0); }
inline double psi0_d1(double r) { return -smoothstep5_d1(r - 1.0); }
inline double psi0_d2(double r) { return -smoothstep5_d2(r - 1.0); }

}  // namespace

SmoothProfile build_phi() {
    SmoothProfile p;
    p.name = "phi";
    p.value = [](double r) {
        if (r <= 0) throw std::domain_error("phi: r must be positive");
        return 0.5 - phi0(r) + phi0(1.0 / r);
    };
    p.d1 = [](double r) {
        return -phi0_d1(r) - phi0_d1(1.0 / r) / (r * r);
    };
    p.d2 = [](double r) {
        return -phi0_d2(r) + phi0_d2(1.0 / r) / (r * r * r * r) +
               2.0 * phi0_d1(1.0 / r) / (r * r * r);
    };
    return p;
}

SmoothProfile build_F(double b_request) {
    if (b_request < 2.0) throw std::invalid_argument("build_F: b must be >= 2");
    // C = sup |3 r psi0'(r) + r^2 psi0''(r)|, attained in [1,2]
    double C = 0;
    const int N = 200001;
    for (int i = 0; i < N; ++i) {
        double r = 1.0 + i / double(N - 1);
        C = std::max(C, std::abs(3 * r * psi0_d1(r) + r * r * psi0_d2(r)));
    }
    double b = std::max(b_request, std::sqrt(8.0 * C));

    auto psi = [b](double r) { return psi0(b * r); };
    auto psi_d1 = [b](double r) { return b * psi0_d1(b * r); };
    auto psi_d2 = [b](double r) { return b * b * psi0_d2(b * r); };

    SmoothProfile p;
    p.name = "F";
    p.param = b;
    p.value = [psi](double r) {
        if (r <= 0) throw std::domain_error("F: r must be positive");
        double ir = 1.0 / r;
        return 1.0 + ir * ir - psi(r) - ir * ir * psi(ir);
    };
    p.d1 = [psi, psi_d1](double r) {
        double ir = 1.0 / r;
        return -2 * ir * ir * ir - psi_d1(r) + 2 * ir * ir * ir * psi(ir) +
               ir * ir * ir * ir * psi_d1(ir);
    };
    p.d2 = [psi, psi_d1, psi_d2](double r) {
        double ir = 1.0 / r;
        double ir4 = ir * ir * ir * ir;
        return 6 * ir4 - psi_d2(r) - 6 * ir4 * psi(ir) - 6 * ir4 * ir * psi_d1(ir) -
               ir4 * ir * ir * psi_d2(ir);
    };
    return p;
}

SmoothProfile build_chi() {
    SmoothProfile p;
    p.name = "chi";
    p.value = [](double t) { return smoothstep5(t - 2.0); };
    p.d1 = [](double t) { return smoothstep5_d1(t - 2.0); };
    p.d2 = [](double t) { return smoothstep5_d2(t - 2.0); };
    return p;
}

double chi_eps_argument(double eps, const Vec3& p) {
    if (!(eps > 0)) throw std::invalid_argument("chi_eps: eps must be positive");
    double rho = p[0];
    return rho * rho / (2 * eps * eps) + (p[1] * p[1] + p[2] * p[2]) / eps;
}

double chi_eps(const SmoothProfile& chi, double eps, const Vec3& p) {
    double r2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
    if (r2 >= 1.0) return 1.0;  // outside the half-ball chart
    return chi.value(chi_eps_argument(eps, p));
}

SmoothProfile build_concave_rescale(double delta) {
    if (!(delta > 0)) throw std::invalid_argument("concave_rescale: delta must be positive");
    // on [delta/2, delta]: sigma = delta/2 (1 + q(t)), t in [0,1],
    // q(t) = t - t^3 + t^4/2: q(0)=0,q'(0)=1,q''(0)=0, q(1)=1/2,q'(1)=q''(1)=0,
    // q'' = 6t(t-1) <= 0, q' = (1-t)^2(1+2t) >= 0.
    SmoothProfile p;
    p.name = "sigma";
    p.param = delta;
    p.value = [delta](double x) {
        if (x <= delta / 2) return x;
        if (x >= delta) return 0.75 * delta;
        double t = (x - delta / 2) / (delta / 2);
        double q = t * (1 + t * t * (-1 + 0.5 * t));
        return 0.5 * delta * (1 + q);
    };
    p.d1 = [delta](double x) {
        if (x <= delta / 2) return 1.0;
        if (x >= delta) return 0.0;
        double t = (x - delta / 2) / (delta / 2);
        return (1 - t) * (1 - t) * (1 + 2 * t);
    };
    p.d2 = [delta](double x) {
        if (x <= delta / 2 || x >= delta) return 0.0;
        double t = (x - delta / 2) / (delta / 2);
        return 6 * t * (t - 1) * (2 / delta);
    };
    return p;
}

std::vector<double> concave_rescale(const std::vector<double>& rho, double delta) {
    SmoothProfile s = build_concave_rescale(delta);
    std::vector<double> out(rho.size());
    for (std::size_t i = 0; i < rho.size(); ++i) out[i] = s.value(rho[i]);
    return out;
}

void dump_profile_csv(const std::string& path, const SmoothProfile& p, double r_min,
                      double r_max, int n, bool log_spaced) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "r,value,d1,d2\n";
    char buf[140];
    for (int i = 0; i < n; ++i) {
        double t = n == 1 ? 0.0 : i / double(n - 1);
        double r = log_spaced ? r_min * std::pow(r_max / r_min, t) : r_min + t * (r_max - r_min);
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", r, p.value(r), p.d1(r),
                      p.d2(r));
        out << buf;
    }
}

}  // namespace ahg
