#include "ahg/norms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ahg/fd.hpp"

namespace ahg {

namespace {

template <int NC>
double weighted_norm_impl(const FieldT<NC>& u, const ScalarField& rho, double delta, int order,
                          const std::function<bool(const Vec3&)>* keep) {
    const ChartGrid& g = *u.grid;
    if (!rho.grid->same_layout(g))
        throw std::invalid_argument("weighted_grid_norm: mismatched grids");
    if (order < 0 || order > 2)
        throw std::invalid_argument("weighted_grid_norm: order must be 0, 1 or 2");
    const int r = u.rank();
    const std::size_t sz = g.size();

    // rescaled components v = y^r u: the Moebius-chart representative
    std::vector<std::vector<double>> v(NC, std::vector<double>(sz, 0.0));
    for (int i = 0; i < g.n_y; ++i) {
        double yr = std::pow(g.y_of(i), r);
        for (int j = 0; j < g.n_x1; ++j)
            for (int k = 0; k < g.n_x2; ++k) {
                std::size_t n = g.index(i, j, k);
                for (int c = 0; c < NC; ++c) v[c][n] = u.at(c, n) * yr;
            }
    }

    double best = 0;
    for (int i = 0; i < g.n_y; ++i)
        for (int j = 0; j < g.n_x1; ++j)
            for (int k = 0; k < g.n_x2; ++k) {
                std::size_t n = g.index(i, j, k);
                if (!g.active(n)) continue;
                Vec3 p = g.point(i, j, k);
                if (keep && !(*keep)(p)) continue;
                double y = p[0];
                if (!(rho[n] > 0))
                    throw std::domain_error("weighted_grid_norm: weight must be positive");
                double w = std::pow(rho[n], -delta);

                double mag2 = 0;
                for (int c = 0; c < NC; ++c) mag2 += v[c][n] * v[c][n];
                double total = std::sqrt(mag2);

                fd::Axis ax[3] = {fd::axis(g, 0, i, j, k), fd::axis(g, 1, i, j, k),
                                  fd::axis(g, 2, i, j, k)};
                if (order >= 1) {
                    double d2sum = 0;
                    for (int c = 0; c < NC; ++c)
                        for (int a = 0; a < 3; ++a) {
                            double dv;
                            if (!fd::d1(g, v[c].data(), n, ax[a], g.h, dv)) continue;
                            // y^{r+1} du = y dv - r delta_{a0} v
                            double t = y * dv - (a == 0 ? r * v[c][n] : 0.0);
                            d2sum += t * t;
                        }
                    total += std::sqrt(d2sum);
                }
                if (order >= 2) {
                    double dd = 0;
                    for (int c = 0; c < NC; ++c) {
                        double dv[3] = {0, 0, 0};
                        bool have[3];
                        for (int a = 0; a < 3; ++a)
                            have[a] = fd::d1(g, v[c].data(), n, ax[a], g.h, dv[a]);
                        for (int a = 0; a < 3; ++a)
                            for (int b = a; b < 3; ++b) {
                                double d2v;
                                if (a == b) {
                                    if (!fd::d2(g, v[c].data(), n, ax[a], g.h, d2v)) continue;
                                } else if (!fd::dcross(g, v[c].data(), n, ax[a], ax[b], g.h,
                                                       d2v)) {
                                    continue;
                                }
                                // y^{r+2} d2u = y^2 d2v - r y (d_{a0} dv_b + d_{b0} dv_a)
                                //               + r(r+1) d_{a0} d_{b0} v
                                double t = y * y * d2v;
                                if (a == 0 && have[b]) t -= r * y * dv[b];
                                if (b == 0 && have[a]) t -= r * y * dv[a];
                                if (a == 0 && b == 0) t += r * (r + 1) * v[c][n];
                                dd += (a == b ? 1.0 : 2.0) * t * t;
                            }
                    }
                    total += std::sqrt(dd);
                }
                best = std::max(best, w * total);
            }
    return best;
}

}  // namespace

double weighted_grid_norm(const FieldT<1>& u, const ScalarField& rho, double delta, int order) {
    return weighted_norm_impl<1>(u, rho, delta, order, nullptr);
}
double weighted_grid_norm(const FieldT<3>& u, const ScalarField& rho, double delta, int order) {
    return weighted_norm_impl<3>(u, rho, delta, order, nullptr);
}
double weighted_grid_norm(const FieldT<6>& u, const ScalarField& rho, double delta, int order) {
    return weighted_norm_impl<6>(u, rho, delta, order, nullptr);
}
double weighted_grid_norm_where(const FieldT<1>& u, const ScalarField& rho, double delta,
                                int order, const std::function<bool(const Vec3&)>& keep) {
    return weighted_norm_impl<1>(u, rho, delta, order, &keep);
}
double weighted_grid_norm_where(const FieldT<3>& u, const ScalarField& rho, double delta,
                                int order, const std::function<bool(const Vec3&)>& keep) {
    return weighted_norm_impl<3>(u, rho, delta, order, &keep);
}
double weighted_grid_norm_where(const FieldT<6>& u, const ScalarField& rho, double delta,
                                int order, const std::function<bool(const Vec3&)>& keep) {
    return weighted_norm_impl<6>(u, rho, delta, order, &keep);
}

template <int NC>
double sup_norm(const FieldT<NC>& u, bool interior_only) {
    const ChartGrid& g = *u.grid;
    double best = 0;
    for (int i = 0; i < g.n_y; ++i)
        for (int j = 0; j < g.n_x1; ++j)
            for (int k = 0; k < g.n_x2; ++k) {
                if (interior_only && !g.interior(i, j, k)) continue;
                std::size_t n = g.index(i, j, k);
                if (!g.active(n)) continue;
                for (int c = 0; c < NC; ++c) best = std::max(best, std::abs(u.at(c, n)));
            }
    return best;
}

template double sup_norm<1>(const FieldT<1>&, bool);
template double sup_norm<3>(const FieldT<3>&, bool);
template double sup_norm<6>(const FieldT<6>&, bool);

}  // namespace ahg
