#include "ahg/operators.hpp"

#include <cmath>

#include "ahg/fd.hpp"

namespace ahg {

namespace {

template <typename F>
void for_active(const ChartGrid& g, F&& body) {
    for (int i = 0; i < g.n_y; ++i)
        for (int j = 0; j < g.n_x1; ++j)
            for (int k = 0; k < g.n_x2; ++k) {
                std::size_t n = g.index(i, j, k);
                if (!g.active(n)) continue;
                body(i, j, k, n);
            }
}

// Gamma of a smooth metric field at one node from finite differences.
// dh[a] = partial_a hbar (all six sym components); false if some stencil
// is unavailable.
bool christoffel_bar_at(const ChartGrid& g, const SymTensorField& hbar,
                        const SymTensorField& hinv, int i, int j, int k, std::size_t n,
                        OperatorContext::Christoffel& out) {
    const std::size_t sz = g.size();
    double dh[3][6];
    for (int a = 0; a < 3; ++a) {
        fd::Axis ax = fd::axis(g, a, i, j, k);
        for (int c = 0; c < 6; ++c) {
            const double* comp = hbar.data.data() + std::size_t(c) * sz;
            if (!fd::d1(g, comp, n, ax, g.h, dh[a][c])) return false;
        }
    }
    SymMat3 hi = hinv.tensor_at(n);
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
            for (int c = b; c < 3; ++c) {
                double s = 0;
                for (int d = 0; d < 3; ++d)
                    s += hi(a, d) * (dh[b][SymMat3::idx(d, c)] + dh[c][SymMat3::idx(d, b)] -
                                     dh[d][SymMat3::idx(b, c)]);
                out[a][SymMat3::idx(b, c)] = 0.5 * s;
            }
    return true;
}

// conformal correction for g = phi^-2 hbar with phi = y:
// Gamma(g)^a_bc = Gamma(hbar)^a_bc - (d^a_b w_c + d^a_c w_b - hbar_bc hbar^{ad} w_d),
// w = dy/y
void apply_conformal_correction(OperatorContext::Christoffel& G, const SymMat3& h,
                                const SymMat3& hi, double y) {
    double w0 = 1.0 / y;
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
            for (int c = b; c < 3; ++c) {
                double corr = 0;
                if (a == b && c == 0) corr += w0;
                if (a == c && b == 0) corr += w0;
                corr -= h(b, c) * hi(a, 0) * w0;
                G[a][SymMat3::idx(b, c)] -= corr;
            }
}

}  // namespace

OperatorContext::OperatorContext(const ChartGrid& grid, const MetricField& g, Weighting w)
    : grid_(&grid), weighting_(w), hbar_(grid), hbar_inv_(grid) {
    if (!g.grid->same_layout(grid))
        throw std::invalid_argument("OperatorContext: metric grid mismatch");
    for_active(grid, [&](int i, int, int, std::size_t n) {
        double y = grid.y_of(i);
        double s = (w == Weighting::Compactified) ? y * y : 1.0;
        SymMat3 m = g.tensor_at(n) * s;
        if (!(m.min_eigenvalue() > 0))
            throw std::domain_error("OperatorContext: metric not SPD at node " +
                                    std::to_string(n));
        hbar_.set_tensor(n, m);
        hbar_inv_.set_tensor(n, m.inverse());
    });
}

OperatorContext OperatorContext::from_compactified(const ChartGrid& grid,
                                                   const SymTensorField& hbar) {
    MetricField g(grid);
    for_active(grid, [&](int i, int, int, std::size_t n) {
        double y = grid.y_of(i);
        g.set_tensor(n, hbar.tensor_at(n) * (1.0 / (y * y)));
    });
    return OperatorContext(grid, g, Weighting::Compactified);
}

SymMat3 OperatorContext::metric(std::size_t n) const {
    int i = int(n / (std::size_t(grid_->n_x1) * grid_->n_x2));
    double s = weighting_ == Weighting::Compactified ? 1.0 / (grid_->y_of(i) * grid_->y_of(i))
                                                     : 1.0;
    return hbar_.tensor_at(n) * s;
}

SymMat3 OperatorContext::metric_inverse(std::size_t n) const {
    int i = int(n / (std::size_t(grid_->n_x1) * grid_->n_x2));
    double s = weighting_ == Weighting::Compactified ? grid_->y_of(i) * grid_->y_of(i) : 1.0;
    return hbar_inv_.tensor_at(n) * s;
}

bool OperatorContext::try_christoffel(int i, int j, int k, Christoffel& G) const {
    std::size_t n = grid_->index(i, j, k);
    if (!gamma_cache_.empty()) {
        if (!gamma_valid_[n]) return false;
        const std::size_t sz = grid_->size();
        for (int a = 0; a < 3; ++a)
            for (int c = 0; c < 6; ++c) G[a][c] = gamma_cache_[(std::size_t(a) * 6 + c) * sz + n];
        return true;
    }
    if (!christoffel_bar_at(*grid_, hbar_, hbar_inv_, i, j, k, n, G)) return false;
    if (weighting_ == Weighting::Compactified)
        apply_conformal_correction(G, hbar_.tensor_at(n), hbar_inv_.tensor_at(n),
                                   grid_->y_of(i));
    return true;
}

OperatorContext::Christoffel OperatorContext::christoffel(int i, int j, int k) const {
    Christoffel G{};
    if (!try_christoffel(i, j, k, G))
        throw std::runtime_error("christoffel: no stencil at node " +
                                 std::to_string(grid_->index(i, j, k)));
    return G;
}

void OperatorContext::cache_christoffels() {
    if (!gamma_cache_.empty()) return;
    const ChartGrid& g = *grid_;
    const std::size_t sz = g.size();
    gamma_cache_.assign(18 * sz, 0.0);
    gamma_valid_.assign(sz, 0);
    for_active(g, [&](int i, int j, int k, std::size_t n) {
        Christoffel G{};
        if (!christoffel_bar_at(g, hbar_, hbar_inv_, i, j, k, n, G)) return;
        if (weighting_ == Weighting::Compactified)
            apply_conformal_correction(G, hbar_.tensor_at(n), hbar_inv_.tensor_at(n), g.y_of(i));
        gamma_valid_[n] = 1;
        for (int a = 0; a < 3; ++a)
            for (int c = 0; c < 6; ++c) gamma_cache_[(std::size_t(a) * 6 + c) * sz + n] = G[a][c];
    });
}

template <int NC>
bool OperatorContext::partial_impl(const FieldT<NC>& u, int c, int i, int j, int k, int axis,
                                   double& out) const {
    const ChartGrid& g = *grid_;
    std::size_t n = g.index(i, j, k);
    fd::Axis ax = fd::axis(g, axis, i, j, k);
    int r = weighting_ == Weighting::Compactified ? u.rank() : 0;
    const double* comp = u.data.data() + std::size_t(c) * g.size();
    if (r == 0) return fd::d1(g, comp, n, ax, g.h, out);

    // difference the rescaled component v = y^r u
    fd::Pattern p;
    if (!fd::d1_pattern(g, n, ax, p)) return false;
    double y = g.y_of(i);
    double yr = std::pow(y, r);
    double dv = 0;
    for (int t = 0; t < p.n; ++t) {
        std::size_t m = n + p.off[t] * ax.stride;
        double ym = axis == 0 ? g.y_of(i + p.off[t]) : y;
        dv += p.w[t] * comp[m] * std::pow(ym, r);
    }
    dv /= g.h;
    double v = comp[n] * yr;
    out = (dv - (axis == 0 ? r * v / y : 0.0)) / yr;
    return true;
}

bool OperatorContext::partial(const FieldT<1>& u, int c, int i, int j, int k, int axis,
                              double& out) const {
    return partial_impl<1>(u, c, i, j, k, axis, out);
}
bool OperatorContext::partial(const FieldT<3>& u, int c, int i, int j, int k, int axis,
                              double& out) const {
    return partial_impl<3>(u, c, i, j, k, axis, out);
}
bool OperatorContext::partial(const FieldT<6>& u, int c, int i, int j, int k, int axis,
                              double& out) const {
    return partial_impl<6>(u, c, i, j, k, axis, out);
}

double OperatorContext::metric_compatibility_residual() const {
    const ChartGrid& g = *grid_;
    MetricField gm(g);
    for_active(g, [&](int, int, int, std::size_t n) { gm.set_tensor(n, metric(n)); });
    double worst = 0;
    for_active(g, [&](int i, int j, int k, std::size_t) {
        if (!g.interior(i, j, k, 1)) return;
        Christoffel G;
        if (!try_christoffel(i, j, k, G)) return;
        std::size_t n = g.index(i, j, k);
        SymMat3 gv = gm.tensor_at(n);
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
                for (int c = b; c < 3; ++c) {
                    double dg;
                    if (!partial(gm, SymMat3::idx(b, c), i, j, k, a, dg)) continue;
                    double s = dg;
                    for (int d = 0; d < 3; ++d) {
                        s -= G[d][SymMat3::idx(a, b)] * gv(d, c);
                        s -= G[d][SymMat3::idx(a, c)] * gv(b, d);
                    }
                    worst = std::max(worst, std::abs(s));
                }
    });
    return worst;
}

ScalarField curvature(const OperatorContext& ctx) {
    const ChartGrid& g = ctx.grid();
    const std::size_t sz = g.size();
    const SymTensorField& hbar = ctx.compactified();

    // Gamma(hbar) as a transient 18-component field, then Ricci by differencing it
    std::vector<double> gam(18 * sz, 0.0);
    std::vector<std::uint8_t> have(sz, 0);
    SymTensorField hinv(g);
    for_active(g, [&](int, int, int, std::size_t n) {
        hinv.set_tensor(n, hbar.tensor_at(n).inverse());
    });
    for_active(g, [&](int i, int j, int k, std::size_t n) {
        OperatorContext::Christoffel G;
        if (!christoffel_bar_at(g, hbar, hinv, i, j, k, n, G)) return;
        have[n] = 1;
        for (int a = 0; a < 3; ++a)
            for (int c = 0; c < 6; ++c) gam[(std::size_t(a) * 6 + c) * sz + n] = G[a][c];
    });

    ScalarField R(g);
    for_active(g, [&](int i, int j, int k, std::size_t n) {
        if (!have[n]) return;
        // dGamma[e][a][bc]
        double dG[3][3][6];
        for (int e = 0; e < 3; ++e) {
            fd::Axis ax = fd::axis(g, e, i, j, k);
            for (int a = 0; a < 3; ++a)
                for (int c = 0; c < 6; ++c) {
                    const double* comp = gam.data() + (std::size_t(a) * 6 + c) * sz;
                    if (!fd::d1(g, comp, n, ax, g.h, dG[e][a][c])) return;
                }
        }
        auto G = [&](int a, int b, int c) { return gam[(std::size_t(a) * 6 + SymMat3::idx(b, c)) * sz + n]; };
        auto dGam = [&](int e, int a, int b, int c) { return dG[e][a][SymMat3::idx(b, c)]; };
        SymMat3 hi = hinv.tensor_at(n);
        double Rbar = 0;
        for (int b = 0; b < 3; ++b)
            for (int d = 0; d < 3; ++d) {
                double ric = 0;
                for (int a = 0; a < 3; ++a) {
                    ric += dGam(a, a, b, d) - dGam(d, a, a, b);
                    for (int e = 0; e < 3; ++e)
                        ric += G(a, a, e) * G(e, b, d) - G(a, d, e) * G(e, a, b);
                }
                Rbar += hi(b, d) * ric;
            }
        if (ctx.weighting() == Weighting::Compactified) {
            double y = g.y_of(i);
            SymMat3 hiN = hi;
            double lap_y = 0;  // Delta_hbar y = -hbar^{ab} Gamma^0_ab
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b) lap_y -= hiN(a, b) * G(0, a, b);
            R[n] = y * y * Rbar + 4 * y * lap_y - 6 * hiN(0, 0);
        } else {
            R[n] = Rbar;
        }
    });
    return R;
}

std::pair<OneFormField, ScalarField> divergence_and_trace(const OperatorContext& ctx,
                                                          const SymTensorField& S) {
    const ChartGrid& g = ctx.grid();
    if (!S.grid->same_layout(g)) throw std::invalid_argument("divergence_and_trace: grid mismatch");
    OneFormField div(g);
    ScalarField tr(g);
    for_active(g, [&](int i, int j, int k, std::size_t n) {
        SymMat3 gi = ctx.metric_inverse(n);
        SymMat3 Sv = S.tensor_at(n);
        double t = 0;
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) t += gi(a, b) * Sv(a, b);
        tr[n] = t;

        OperatorContext::Christoffel G;
        if (!ctx.try_christoffel(i, j, k, G)) return;
        double dS[3][6];
        for (int a = 0; a < 3; ++a)
            for (int c = 0; c < 6; ++c)
                if (!ctx.partial(S, c, i, j, k, a, dS[a][c])) return;
        for (int b = 0; b < 3; ++b) {
            double s = 0;
            for (int a = 0; a < 3; ++a)
                for (int c = 0; c < 3; ++c) {
                    double term = dS[a][SymMat3::idx(c, b)];
                    for (int d = 0; d < 3; ++d) {
                        term -= G[d][SymMat3::idx(a, c)] * Sv(d, b);
                        term -= G[d][SymMat3::idx(a, b)] * Sv(c, d);
                    }
                    s += gi(a, c) * term;
                }
            div.at(b, n) = s;
        }
    });
    return {std::move(div), std::move(tr)};
}

SymTensorField conformal_killing_apply(const OperatorContext& ctx, const VectorField& X) {
    const ChartGrid& g = ctx.grid();
    if (!X.grid->same_layout(g)) throw std::invalid_argument("conformal_killing: grid mismatch");
    SymTensorField D(g);
    for_active(g, [&](int i, int j, int k, std::size_t n) {
        OperatorContext::Christoffel G;
        if (!ctx.try_christoffel(i, j, k, G)) return;
        double dX[3][3];  // dX[c][e] = partial_c X^e
        for (int c = 0; c < 3; ++c)
            for (int e = 0; e < 3; ++e)
                if (!ctx.partial(X, e, i, j, k, c, dX[c][e])) return;
        double covX[3][3];  // nabla_c X^e
        double divX = 0;
        for (int c = 0; c < 3; ++c)
            for (int e = 0; e < 3; ++e) {
                double s = dX[c][e];
                for (int a = 0; a < 3; ++a) s += G[e][SymMat3::idx(c, a)] * X.at(a, n);
                covX[c][e] = s;
                if (c == e) divX += s;
            }
        SymMat3 gm = ctx.metric(n);
        SymMat3 out;
        for (int c = 0; c < 3; ++c)
            for (int d = c; d < 3; ++d) {
                double low_cd = 0, low_dc = 0;
                for (int e = 0; e < 3; ++e) {
                    low_cd += gm(d, e) * covX[c][e];
                    low_dc += gm(c, e) * covX[d][e];
                }
                out.at(c, d) = 0.5 * (low_cd + low_dc) - divX * gm(c, d) / 3.0;
            }
        D.set_tensor(n, out);
    });
    return D;
}

VectorField vector_laplacian_apply(const OperatorContext& ctx, const VectorField& X) {
    SymTensorField D = conformal_killing_apply(ctx, X);
    auto [div, tr] = divergence_and_trace(ctx, D);
    const ChartGrid& g = ctx.grid();
    VectorField L(g);
    for_active(g, [&](int, int, int, std::size_t n) {
        SymMat3 gi = ctx.metric_inverse(n);
        for (int a = 0; a < 3; ++a) {
            double s = 0;
            for (int b = 0; b < 3; ++b) s += gi(a, b) * div.at(b, n);
            L.at(a, n) = -s;
        }
    });
    return L;
}

ScalarField laplace_beltrami(const OperatorContext& ctx, const ScalarField& u) {
    const ChartGrid& g = ctx.grid();
    if (!u.grid->same_layout(g)) throw std::invalid_argument("laplace_beltrami: grid mismatch");
    ScalarField out(g);
    const double* comp = u.data.data();
    for_active(g, [&](int i, int j, int k, std::size_t n) {
        OperatorContext::Christoffel G;
        if (!ctx.try_christoffel(i, j, k, G)) return;
        fd::Axis ax[3] = {fd::axis(g, 0, i, j, k), fd::axis(g, 1, i, j, k),
                          fd::axis(g, 2, i, j, k)};
        double du[3], d2u[3][3];
        for (int a = 0; a < 3; ++a)
            if (!fd::d1(g, comp, n, ax[a], g.h, du[a])) return;
        for (int a = 0; a < 3; ++a) {
            if (!fd::d2(g, comp, n, ax[a], g.h, d2u[a][a])) return;
            for (int b = a + 1; b < 3; ++b) {
                if (!fd::dcross(g, comp, n, ax[a], ax[b], g.h, d2u[a][b])) return;
                d2u[b][a] = d2u[a][b];
            }
        }
        SymMat3 gi = ctx.metric_inverse(n);
        double s = 0;
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) {
                double hess = d2u[a][b];
                for (int c = 0; c < 3; ++c) hess -= G[c][SymMat3::idx(a, b)] * du[c];
                s += gi(a, b) * hess;
            }
        out[n] = s;
    });
    return out;
}

OneFormField differential(const OperatorContext& ctx, const ScalarField& u) {
    const ChartGrid& g = ctx.grid();
    OneFormField d(g);
    const double* comp = u.data.data();
    for_active(g, [&](int i, int j, int k, std::size_t n) {
        for (int a = 0; a < 3; ++a) {
            fd::Axis ax = fd::axis(g, a, i, j, k);
            double v;
            if (fd::d1(g, comp, n, ax, g.h, v)) d.at(a, n) = v;
        }
    });
    return d;
}

ScalarField tensor_norm_squared(const OperatorContext& ctx, const SymTensorField& S) {
    const ChartGrid& g = ctx.grid();
    ScalarField out(g);
    for_active(g, [&](int, int, int, std::size_t n) {
        SymMat3 gi = ctx.metric_inverse(n);
        SymMat3 Sv = S.tensor_at(n);
        double s = 0;
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
                for (int c = 0; c < 3; ++c)
                    for (int d = 0; d < 3; ++d)
                        s += gi(a, c) * gi(b, d) * Sv(a, b) * Sv(c, d);
        out[n] = s;
    });
    return out;
}

ConstraintResiduals constraint_residuals(const OperatorContext& ctx, const SymTensorField& K) {
    return constraint_residuals(ctx, K, curvature(ctx));
}

ConstraintResiduals constraint_residuals(const OperatorContext& ctx, const SymTensorField& K,
                                         const ScalarField& R) {
    auto [divK, trK] = divergence_and_trace(ctx, K);
    OneFormField dtr = differential(ctx, trK);
    ScalarField K2 = tensor_norm_squared(ctx, K);
    const ChartGrid& g = ctx.grid();
    ConstraintResiduals res{OneFormField(g), ScalarField(g)};
    for_active(g, [&](int, int, int, std::size_t n) {
        for (int a = 0; a < 3; ++a) res.momentum.at(a, n) = divK.at(a, n) - dtr.at(a, n);
        res.hamiltonian[n] = R[n] - K2[n] + trK[n] * trK[n];
    });
    return res;
}

LichnerowiczResult lichnerowicz_apply(const OperatorContext& ctx, const LichnerowiczTerms& t,
                                      const ScalarField& u) {
    const ChartGrid& g = ctx.grid();
    for (std::size_t n = 0; n < g.size(); ++n)
        if (g.active(n) && !(u[n] > 0))
            throw std::domain_error("lichnerowicz_apply: u must be positive");
    ScalarField lap = laplace_beltrami(ctx, u);
    LichnerowiczResult out{ScalarField(g), ScalarField(g)};
    for_active(g, [&](int, int, int, std::size_t n) {
        double u1 = u[n];
        double u2 = u1 * u1, u4 = u2 * u2;
        out.value[n] = lap[n] - t.R[n] * u1 / 8.0 + t.nu_sq[n] / (8.0 * u4 * u2 * u1) -
                       0.75 * u4 * u1;
        out.f[n] = (t.R[n] + 7.0 * t.nu_sq[n] + 30.0) / 8.0;
    });
    return out;
}

LichnerowiczResult lichnerowicz_apply(const OperatorContext& ctx, const SymTensorField& nu,
                                      const ScalarField& u) {
    LichnerowiczTerms t{curvature(ctx), tensor_norm_squared(ctx, nu)};
    return lichnerowicz_apply(ctx, t, u);
}

ScalarField linearized_lichnerowicz_apply(const OperatorContext& ctx, const ScalarField& f,
                                          const ScalarField& u) {
    ScalarField lap = laplace_beltrami(ctx, u);
    const ChartGrid& g = ctx.grid();
    ScalarField out(g);
    for_active(g, [&](int, int, int, std::size_t n) { out[n] = lap[n] - f[n] * u[n]; });
    return out;
}

SuperharmonicityReport superharmonicity_check(const OperatorContext& ctx,
                                              const ScalarField& rho) {
    ScalarField lap = laplace_beltrami(ctx, rho);
    double worst = -std::numeric_limits<double>::infinity();
    const ChartGrid& g = ctx.grid();
    for_active(g, [&](int i, int j, int k, std::size_t n) {
        if (!g.interior(i, j, k, 1)) return;
        worst = std::max(worst, lap[n]);
    });
    return {std::move(lap), worst};
}

// ---- pointwise jets ----

MetricJet metric_jet(const std::function<SymMat3(const Vec3&)>& hbar, const Vec3& p,
                     double step) {
    MetricJet j;
    j.h = hbar(p);
    auto at = [&](int a, double s, int b, double t) {
        Vec3 q = p;
        q[a] += s;
        q[b] += t;
        return hbar(q);
    };
    for (int a = 0; a < 3; ++a) {
        SymMat3 plus = at(a, step, a, 0), minus = at(a, -step, a, 0);
        j.dh[a] = (plus - minus) * (1.0 / (2 * step));
        j.d2h[a][a] = (plus + minus - j.h * 2.0) * (1.0 / (step * step));
    }
    for (int a = 0; a < 3; ++a)
        for (int b = a + 1; b < 3; ++b) {
            SymMat3 pp = at(a, step, b, step), pm = at(a, step, b, -step);
            SymMat3 mp = at(a, -step, b, step), mm = at(a, -step, b, -step);
            j.d2h[a][b] = (pp - pm - mp + mm) * (1.0 / (4 * step * step));
            j.d2h[b][a] = j.d2h[a][b];
        }
    return j;
}

namespace {
struct JetChristoffel {
    double G[3][3][3];    // G[a][b][c], symmetric in b,c
    double dG[3][3][3][3];  // dG[e][a][b][c] = partial_e G^a_bc
};

JetChristoffel jet_christoffel(const MetricJet& j) {
    JetChristoffel out{};
    SymMat3 hi = j.h.inverse();
    // dhi[e] = -hi dh[e] hi
    Mat3 dhi[3];
    for (int e = 0; e < 3; ++e)
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) {
                double s = 0;
                for (int c = 0; c < 3; ++c)
                    for (int d = 0; d < 3; ++d) s += hi(a, c) * j.dh[e](c, d) * hi(d, b);
                dhi[e].at(a, b) = -s;
            }
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
            for (int c = 0; c < 3; ++c) {
                double s = 0;
                for (int d = 0; d < 3; ++d)
                    s += hi(a, d) * (j.dh[b](d, c) + j.dh[c](d, b) - j.dh[d](b, c));
                out.G[a][b][c] = 0.5 * s;
            }
    for (int e = 0; e < 3; ++e)
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
                for (int c = 0; c < 3; ++c) {
                    double s = 0;
                    for (int d = 0; d < 3; ++d) {
                        s += dhi[e](a, d) * (j.dh[b](d, c) + j.dh[c](d, b) - j.dh[d](b, c));
                        s += hi(a, d) * (j.d2h[e][b](d, c) + j.d2h[e][c](d, b) -
                                         j.d2h[e][d](b, c));
                    }
                    out.dG[e][a][b][c] = 0.5 * s;
                }
    return out;
}
}  // namespace

double scalar_curvature_plain(const MetricJet& j) {
    JetChristoffel jc = jet_christoffel(j);
    SymMat3 hi = j.h.inverse();
    double R = 0;
    for (int b = 0; b < 3; ++b)
        for (int d = 0; d < 3; ++d) {
            double ric = 0;
            for (int a = 0; a < 3; ++a) {
                ric += jc.dG[a][a][b][d] - jc.dG[d][a][a][b];
                for (int e = 0; e < 3; ++e)
                    ric += jc.G[a][a][e] * jc.G[e][b][d] - jc.G[a][d][e] * jc.G[e][a][b];
            }
            R += hi(b, d) * ric;
        }
    return R;
}

double scalar_curvature_ah(const MetricJet& j, double y) {
    double Rbar = scalar_curvature_plain(j);
    JetChristoffel jc = jet_christoffel(j);
    SymMat3 hi = j.h.inverse();
    double lap_y = 0;
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) lap_y -= hi(a, b) * jc.G[0][a][b];
    return y * y * Rbar + 4 * y * lap_y - 6 * hi(0, 0);
}

double laplacian_ah(const MetricJet& j, const ScalarJet& u, double y) {
    JetChristoffel jc = jet_christoffel(j);
    SymMat3 hi = j.h.inverse();
    // Gamma(g) = Gamma(hbar) + correction, g^{ab} = y^2 hbar^{ab}
    double s = 0;
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
            double hess = u.hess(a, b);
            for (int c = 0; c < 3; ++c) {
                double Gc = jc.G[c][a][b];
                double corr = 0;
                if (c == a && b == 0) corr += 1.0 / y;
                if (c == b && a == 0) corr += 1.0 / y;
                corr -= j.h(a, b) * hi(c, 0) / y;
                hess -= (Gc - corr) * u.grad[c];
            }
            s += hi(a, b) * hess;
        }
    return y * y * s;
}

Vec3 divergence_ah(const MetricJet& jet, const SymMat3& Sbar,
                   const std::array<SymMat3, 3>& dSbar, double y) {
    JetChristoffel jc = jet_christoffel(jet);
    SymMat3 hi = jet.h.inverse();
    // Gamma(g)^d_ac = Gamma(hbar)^d_ac - (d^d_a w_c + d^d_c w_a - h_ac h^{d0}/y), w = dy/y
    auto Gg = [&](int d, int a, int c) {
        double corr = 0;
        if (d == a && c == 0) corr += 1.0 / y;
        if (d == c && a == 0) corr += 1.0 / y;
        corr -= jet.h(a, c) * hi(d, 0) / y;
        return jc.G[d][a][c] - corr;
    };
    Vec3 out{0, 0, 0};
    for (int b = 0; b < 3; ++b) {
        double s = 0;
        for (int a = 0; a < 3; ++a)
            for (int c = 0; c < 3; ++c) {
                double term = dSbar[a](c, b) - (a == 0 ? Sbar(c, b) / y : 0.0);
                for (int d = 0; d < 3; ++d) {
                    term -= Gg(d, a, c) * Sbar(d, b);
                    term -= Gg(d, a, b) * Sbar(c, d);
                }
                s += hi(a, c) * term;
            }
        out[b] = y * s;
    }
    return out;
}

ScalarJet scalar_jet(const std::function<double(const Vec3&)>& f, const Vec3& p, double step) {
    ScalarJet j;
    j.value = f(p);
    auto at = [&](int a, double s, int b, double t) {
        Vec3 q = p;
        q[a] += s;
        q[b] += t;
        return f(q);
    };
    for (int a = 0; a < 3; ++a) {
        double plus = at(a, step, a, 0), minus = at(a, -step, a, 0);
        j.grad[a] = (plus - minus) / (2 * step);
        j.hess.at(a, a) = (plus + minus - 2 * j.value) / (step * step);
    }
    for (int a = 0; a < 3; ++a)
        for (int b = a + 1; b < 3; ++b)
            j.hess.at(a, b) = (at(a, step, b, step) - at(a, step, b, -step) -
                               at(a, -step, b, step) + at(a, -step, b, -step)) /
                              (4 * step * step);
    return j;
}

}  // namespace ahg
