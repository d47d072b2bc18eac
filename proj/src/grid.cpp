#include "ahg/grid.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace ahg {

double SymMat3::min_eigenvalue() const {
    // eigenvalues of a symmetric 3x3 via the trigonometric method
    const SymMat3& A = *this;
    double q = (A(0, 0) + A(1, 1) + A(2, 2)) / 3.0;
    double p2 = 0.0;
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
            double e = A(a, b) - (a == b ? q : 0.0);
            p2 += e * e;
        }
    double p = std::sqrt(p2 / 6.0);
    if (p < 1e-300) return q;
    // B = (A - q I)/p, r = det(B)/2 in [-1,1]
    SymMat3 B;
    for (int a = 0; a < 3; ++a)
        for (int b = a; b < 3; ++b) B.at(a, b) = (A(a, b) - (a == b ? q : 0.0)) / p;
    double r = B.det() / 2.0;
    r = std::clamp(r, -1.0, 1.0);
    double phi = std::acos(r) / 3.0;
    // smallest eigenvalue
    return q + 2.0 * p * std::cos(phi + 2.0 * M_PI / 3.0);
}

SymMat3 congruence(const Mat3& J, const SymMat3& S) {
    SymMat3 r;
    for (int a = 0; a < 3; ++a)
        for (int b = a; b < 3; ++b) {
            double s = 0;
            for (int c = 0; c < 3; ++c)
                for (int d = 0; d < 3; ++d) s += J(c, a) * J(d, b) * S(c, d);
            r.at(a, b) = s;
        }
    return r;
}

ChartGrid::ChartGrid(double y_min_, double x1_0_, double x2_0_, double h_, int ny, int nx1,
                     int nx2)
    : y_min(y_min_), x1_0(x1_0_), x2_0(x2_0_), h(h_), n_y(ny), n_x1(nx1), n_x2(nx2) {
    if (!(y_min > 0)) throw std::invalid_argument("ChartGrid: y_min must be positive");
    if (!(h > 0)) throw std::invalid_argument("ChartGrid: spacing must be positive");
    if (y_min + 1e-12 * h < 2 * h)
        throw std::invalid_argument("ChartGrid: y_min must be at least 2h");
    if (n_y < 4 || n_x1 < 4 || n_x2 < 4)
        throw std::invalid_argument("ChartGrid: all counts must be >= 4");
}

void ChartGrid::set_mask(std::function<bool(const Vec3&)> keep) {
    mask.assign(size(), 1);
    for (int i = 0; i < n_y; ++i)
        for (int j = 0; j < n_x1; ++j)
            for (int k = 0; k < n_x2; ++k)
                if (!keep(point(i, j, k))) mask[index(i, j, k)] = 0;
}

std::size_t ChartGrid::active_count() const {
    if (mask.empty()) return size();
    std::size_t c = 0;
    for (auto m : mask) c += m;
    return c;
}

void MetricField::require_spd(const std::string& what) const {
    for (std::size_t n = 0; n < grid->size(); ++n) {
        if (!grid->active(n)) continue;
        if (!(tensor_at(n).min_eigenvalue() > 0.0))
            throw std::domain_error(what + ": metric not positive definite at node " +
                                    std::to_string(n));
    }
}

double MetricField::min_spd_margin() const {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < grid->size(); ++n) {
        if (!grid->active(n)) continue;
        m = std::min(m, tensor_at(n).min_eigenvalue());
    }
    return m;
}

void dump_csv(const std::string& path, const ChartGrid& grid,
              const std::vector<std::pair<std::string, const std::vector<double>*>>& columns) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "y,x1,x2";
    for (auto& c : columns) out << ',' << c.first;
    out << '\n';
    char buf[32];
    for (int i = 0; i < grid.n_y; ++i)
        for (int j = 0; j < grid.n_x1; ++j)
            for (int k = 0; k < grid.n_x2; ++k) {
                std::size_t n = grid.index(i, j, k);
                if (!grid.active(n)) continue;
                Vec3 p = grid.point(i, j, k);
                std::snprintf(buf, sizeof buf, "%.17g", p[0]);
                out << buf;
                for (int d = 1; d < 3; ++d) {
                    std::snprintf(buf, sizeof buf, ",%.17g", p[d]);
                    out << buf;
                }
                for (auto& c : columns) {
                    std::snprintf(buf, sizeof buf, ",%.17g", (*c.second)[n]);
                    out << buf;
                }
                out << '\n';
            }
}

template <int NC>
void dump_field_csv(const std::string& path, const FieldT<NC>& f,
                    const std::vector<std::string>& names) {
    std::vector<std::vector<double>> comps(NC);
    std::vector<std::pair<std::string, const std::vector<double>*>> cols;
    for (int c = 0; c < NC; ++c) {
        comps[c].assign(f.data.begin() + c * f.grid->size(),
                        f.data.begin() + (c + 1) * f.grid->size());
        cols.emplace_back(names.at(c), &comps[c]);
    }
    dump_csv(path, *f.grid, cols);
}

template void dump_field_csv<1>(const std::string&, const FieldT<1>&,
                                const std::vector<std::string>&);
template void dump_field_csv<3>(const std::string&, const FieldT<3>&,
                                const std::vector<std::string>&);
template void dump_field_csv<6>(const std::string&, const FieldT<6>&,
                                const std::vector<std::string>&);

namespace {
// 4-point Lagrange weights at fractional position u in [0,1] between nodes 1,2
inline void cubic_weights(double u, double w[4]) {
    w[0] = -u * (u - 1) * (u - 2) / 6.0;
    w[1] = (u + 1) * (u - 1) * (u - 2) / 2.0;
    w[2] = -(u + 1) * u * (u - 2) / 2.0;
    w[3] = (u + 1) * u * (u - 1) / 6.0;
}

inline void axis_stencil(double t0, double h, int n, double q, int& base, double w[4]) {
    double s = (q - t0) / h;
    int cell = int(std::floor(s));
    cell = std::clamp(cell, 0, n - 2);
    base = std::clamp(cell - 1, 0, n - 4);
    double u = s - (base + 1);
    cubic_weights(u, w);
}
}  // namespace

double interpolate_tricubic(const ChartGrid& g, const std::vector<double>& comp, const Vec3& p) {
    if (g.n_y < 4 || g.n_x1 < 4 || g.n_x2 < 4)
        throw std::invalid_argument("tricubic: grid too small");
    const double tol = 1e-9 * g.h;
    if (p[0] < g.y_min - tol || p[0] > g.y_max() + tol || p[1] < g.x1_0 - tol ||
        p[1] > g.x1_0 + (g.n_x1 - 1) * g.h + tol || p[2] < g.x2_0 - tol ||
        p[2] > g.x2_0 + (g.n_x2 - 1) * g.h + tol)
        throw std::out_of_range("tricubic: target point outside grid");
    int bi, bj, bk;
    double wi[4], wj[4], wk[4];
    axis_stencil(g.y_min, g.h, g.n_y, p[0], bi, wi);
    axis_stencil(g.x1_0, g.h, g.n_x1, p[1], bj, wj);
    axis_stencil(g.x2_0, g.h, g.n_x2, p[2], bk, wk);
    double s = 0;
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
            for (int c = 0; c < 4; ++c)
                s += wi[a] * wj[b] * wk[c] * comp[g.index(bi + a, bj + b, bk + c)];
    return s;
}

}  // namespace ahg
