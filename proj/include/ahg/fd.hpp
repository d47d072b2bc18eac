#pragma once
#include "ahg/grid.hpp"

// Second-order finite-difference stencils on (possibly masked) uniform grids.
// Centered where both neighbors are active, one-sided second-order closures
// at grid edges and mask boundaries.

namespace ahg::fd {

struct Axis {
    std::ptrdiff_t stride;
    int pos;
    int count;
};

inline Axis axis(const ChartGrid& g, int a, int i, int j, int k) {
    switch (a) {
        case 0: return {std::ptrdiff_t(g.n_x1) * g.n_x2, i, g.n_y};
        case 1: return {g.n_x2, j, g.n_x1};
        default: return {1, k, g.n_x2};
    }
}

// one-axis stencil: offsets in units of stride, weights in units of 1/h^order
struct Pattern {
    int n = 0;
    int off[4];
    double w[4];
};

inline bool active_off(const ChartGrid& g, std::size_t node, const Axis& ax, int off) {
    int p = ax.pos + off;
    if (p < 0 || p >= ax.count) return false;
    return g.active(node + off * ax.stride);
}

inline bool d1_pattern(const ChartGrid& g, std::size_t node, const Axis& ax, Pattern& p) {
    if (active_off(g, node, ax, 1) && active_off(g, node, ax, -1)) {
        p = {2, {-1, 1}, {-0.5, 0.5}};
        return true;
    }
    if (active_off(g, node, ax, 1) && active_off(g, node, ax, 2)) {
        p = {3, {0, 1, 2}, {-1.5, 2.0, -0.5}};
        return true;
    }
    if (active_off(g, node, ax, -1) && active_off(g, node, ax, -2)) {
        p = {3, {0, -1, -2}, {1.5, -2.0, 0.5}};
        return true;
    }
    return false;
}

inline bool d2_pattern(const ChartGrid& g, std::size_t node, const Axis& ax, Pattern& p) {
    if (active_off(g, node, ax, 1) && active_off(g, node, ax, -1)) {
        p = {3, {-1, 0, 1}, {1.0, -2.0, 1.0}};
        return true;
    }
    if (active_off(g, node, ax, 1) && active_off(g, node, ax, 2) && active_off(g, node, ax, 3)) {
        p = {4, {0, 1, 2, 3}, {2.0, -5.0, 4.0, -1.0}};
        return true;
    }
    if (active_off(g, node, ax, -1) && active_off(g, node, ax, -2) &&
        active_off(g, node, ax, -3)) {
        p = {4, {0, -1, -2, -3}, {2.0, -5.0, 4.0, -1.0}};
        return true;
    }
    return false;
}

inline double apply_pattern(const double* comp, std::size_t node, const Axis& ax,
                            const Pattern& p, double hpow) {
    double s = 0;
    for (int i = 0; i < p.n; ++i) s += p.w[i] * comp[node + p.off[i] * ax.stride];
    return s / hpow;
}

inline bool d1(const ChartGrid& g, const double* comp, std::size_t node, const Axis& ax,
               double h, double& out) {
    Pattern p;
    if (!d1_pattern(g, node, ax, p)) return false;
    out = apply_pattern(comp, node, ax, p, h);
    return true;
}

inline bool d2(const ChartGrid& g, const double* comp, std::size_t node, const Axis& ax,
               double h, double& out) {
    Pattern p;
    if (!d2_pattern(g, node, ax, p)) return false;
    out = apply_pattern(comp, node, ax, p, h * h);
    return true;
}

// cross derivative: nested first-derivative patterns (each mask-aware)
inline bool dcross(const ChartGrid& g, const double* comp, std::size_t node, const Axis& axa,
                   const Axis& axb, double h, double& out) {
    Pattern pa;
    if (!d1_pattern(g, node, axa, pa)) return false;
    double s = 0;
    for (int i = 0; i < pa.n; ++i) {
        std::size_t m = node + pa.off[i] * axa.stride;
        Axis axb_m = axb;  // position along b unchanged by a-shift
        Pattern pb;
        if (!d1_pattern(g, m, axb_m, pb)) return false;
        s += pa.w[i] * apply_pattern(comp, m, axb_m, pb, h);
    }
    out = s / h;
    return true;
}

}  // namespace ahg::fd
