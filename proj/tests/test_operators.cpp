#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <functional>
#include <random>

#include "ahg/norms.hpp"
#include "ahg/halfspace.hpp"
#include "ahg/operators.hpp"
#include "doctest.h"

using namespace ahg;

namespace {

ChartGrid box_grid(int n, double y0 = 0.8, double y1 = 1.8, double xext = 0.5) {
    double h = (y1 - y0) / (n - 1);
    int nx = int(std::round(2 * xext / h)) + 1;
    return ChartGrid(y0, -xext, -xext, h, n, nx, nx);
}

MetricField sample_metric(const ChartGrid& g, const std::function<SymMat3(const Vec3&)>& fn) {
    MetricField m(g);
    for (int i = 0; i < g.n_y; ++i)
        for (int j = 0; j < g.n_x1; ++j)
            for (int k = 0; k < g.n_x2; ++k)
                m.set_tensor(g.index(i, j, k), fn(g.point(i, j, k)));
    return m;
}

ScalarField sample_scalar(const ChartGrid& g, const std::function<double(const Vec3&)>& fn) {
    ScalarField f(g);
    for (int i = 0; i < g.n_y; ++i)
        for (int j = 0; j < g.n_x1; ++j)
            for (int k = 0; k < g.n_x2; ++k) f[g.index(i, j, k)] = fn(g.point(i, j, k));
    return f;
}

SymMat3 ghyp(const Vec3& p) { return hyperbolic_metric_at(p); }

double sup_interior(const ChartGrid& g, const ScalarField& f, int margin = 2) {
    double worst = 0;
    for (int i = margin; i < g.n_y - margin; ++i)
        for (int j = margin; j < g.n_x1 - margin; ++j)
            for (int k = margin; k < g.n_x2 - margin; ++k)
                worst = std::max(worst, std::abs(f[g.index(i, j, k)]));
    return worst;
}

// conformal factor for manufactured curvature tests
double psi_fn(const Vec3& p) {
    return 1.0 + 0.2 * std::sin(p[0]) * std::cos(0.7 * p[1]) * std::cos(0.5 * p[2]);
}
double lap_flat_psi(const Vec3& p) {
    return -0.2 * (1.0 + 0.49 + 0.25) * std::sin(p[0]) * std::cos(0.7 * p[1]) *
           std::cos(0.5 * p[2]);
}
double dy_psi(const Vec3& p) {
    return 0.2 * std::cos(p[0]) * std::cos(0.7 * p[1]) * std::cos(0.5 * p[2]);
}
// R(psi^4 g0) = psi^-5 (-8 Delta_{g0} psi + R(g0) psi) in three dimensions
double conformal_R_oracle(const Vec3& p) {
    double ps = psi_fn(p);
    double lap_h = p[0] * p[0] * lap_flat_psi(p) - p[0] * dy_psi(p);
    return (-8.0 * lap_h - 6.0 * ps) / std::pow(ps, 5);
}

}  // namespace

TEST_CASE("curvature of the model metric") {
    ChartGrid g = box_grid(17);
    // compactified path: hbar = delta, exact to roundoff
    OperatorContext ctx = OperatorContext(g, sample_metric(g, ghyp), Weighting::Compactified);
    ScalarField R = curvature(ctx);
    for (int i = 1; i < g.n_y - 1; ++i)
        for (int j = 1; j < g.n_x1 - 1; ++j)
            for (int k = 1; k < g.n_x2 - 1; ++k)
                CHECK(std::abs(R[g.index(i, j, k)] + 6.0) < 1e-10);
    // plain path: second-order stencils on the raw y^-2 components
    double errs[2];
    int idx = 0;
    for (int n : {17, 33}) {
        ChartGrid gg = box_grid(n);
        OperatorContext ctxp(gg, sample_metric(gg, ghyp), Weighting::Plain);
        ScalarField Rp = curvature(ctxp);
        double err = 0;
        for (int i = 2; i < gg.n_y - 2; ++i)
            for (int j = 2; j < gg.n_x1 - 2; ++j)
                for (int k = 2; k < gg.n_x2 - 2; ++k)
                    err = std::max(err, std::abs(Rp[gg.index(i, j, k)] + 6.0));
        errs[idx++] = err;
    }
    CHECK(errs[0] < 0.5);
    CHECK(errs[0] / errs[1] > 3.0);
}

TEST_CASE("curvature of a conformally deformed metric against the 3-d conformal law") {
    auto gfn = [](const Vec3& p) {
        double w = std::pow(psi_fn(p), 4);
        return ghyp(p) * w;
    };
    double errs[2];
    int idx = 0;
    for (int n : {17, 33}) {
        ChartGrid g = box_grid(n);
        OperatorContext ctx(g, sample_metric(g, gfn), Weighting::Compactified);
        ScalarField R = curvature(ctx);
        double err = 0;
        for (int i = 2; i < g.n_y - 2; ++i)
            for (int j = 2; j < g.n_x1 - 2; ++j)
                for (int k = 2; k < g.n_x2 - 2; ++k) {
                    Vec3 p = g.point(i, j, k);
                    err = std::max(err, std::abs(R[g.index(i, j, k)] - conformal_R_oracle(p)));
                }
        errs[idx++] = err;
    }
    CHECK(errs[0] < 0.1);
    CHECK(errs[0] / errs[1] > 3.0);  // second order
}

TEST_CASE("divergence and trace") {
    ChartGrid g = box_grid(17);
    MetricField gm = sample_metric(g, ghyp);
    OperatorContext ctx(g, gm, Weighting::Compactified);

    // S = g: metric compatibility, exact cancellation
    auto [div_g, tr_g] = divergence_and_trace(ctx, gm);
    for (std::size_t n = 0; n < g.size(); ++n) {
        for (int a = 0; a < 3; ++a) CHECK(std::abs(div_g.at(a, n)) < 1e-11);
        CHECK(tr_g[n] == doctest::Approx(3.0).epsilon(1e-13));
    }

    // S = c g
    SymTensorField S(g);
    for (std::size_t n = 0; n < g.size(); ++n)
        for (int c = 0; c < 6; ++c) S.at(c, n) = -1.75 * gm.at(c, n);
    CHECK(divergence_and_trace(ctx, S).second[0] == doctest::Approx(-5.25).epsilon(1e-13));

    // manufactured polynomial tensor with hand-computed divergence on the
    // model metric: div(P)_b = y^2 d^a P_ab - y P_0b + y delta_b0 tr P
    auto P = [](const Vec3& p) {
        SymMat3 m;
        m.at(0, 0) = 1 + 0.3 * p[1];
        m.at(0, 1) = 0.2 * p[0] * p[0];
        m.at(1, 1) = -0.5 + 0.1 * p[2];
        m.at(1, 2) = 0.4 * p[1];
        m.at(2, 2) = 0.7 * p[0];
        return m;
    };
    auto div_oracle = [&](const Vec3& p) {
        double y = p[0];
        // d^a P_a0 = d_y P00 + d_1 P10 + d_2 P20 = 0 + 0 + 0
        // d^a P_a1 = d_y P01 + d_1 P11 + d_2 P21 = 0.4 y + 0 + 0
        // d^a P_a2 = d_y P02 + d_1 P12 + d_2 P22 = 0 + 0.4 + 0
        SymMat3 m = P(p);
        double trP = m(0, 0) + m(1, 1) + m(2, 2);
        Vec3 d;
        d[0] = y * y * 0.0 - y * m(0, 0) + y * trP;
        d[1] = y * y * (0.4 * y) - y * m(0, 1);
        d[2] = y * y * 0.4 - y * m(0, 2);
        return d;
    };
    double errs[2];
    int idx = 0;
    for (int n : {17, 33}) {
        ChartGrid gg = box_grid(n);
        OperatorContext cc(gg, sample_metric(gg, ghyp), Weighting::Compactified);
        SymTensorField PP(gg);
        for (int i = 0; i < gg.n_y; ++i)
            for (int j = 0; j < gg.n_x1; ++j)
                for (int k = 0; k < gg.n_x2; ++k)
                    PP.set_tensor(gg.index(i, j, k), P(gg.point(i, j, k)));
        auto [dv, tr] = divergence_and_trace(cc, PP);
        double err = 0;
        for (int i = 2; i < gg.n_y - 2; ++i)
            for (int j = 2; j < gg.n_x1 - 2; ++j)
                for (int k = 2; k < gg.n_x2 - 2; ++k) {
                    Vec3 p = gg.point(i, j, k);
                    Vec3 ora = div_oracle(p);
                    for (int a = 0; a < 3; ++a)
                        err = std::max(err,
                                       std::abs(dv.at(a, gg.index(i, j, k)) - ora[a]));
                }
        errs[idx++] = err;
    }
    CHECK(errs[0] < 0.05);
    CHECK(errs[0] / errs[1] > 3.0);
}

TEST_CASE("conformal Killing operator: Killing fields and tracelessness") {
    ChartGrid g = box_grid(17);
    OperatorContext ctx(g, sample_metric(g, ghyp), Weighting::Compactified);

    VectorField trans(g), dil(g);
    for (int i = 0; i < g.n_y; ++i)
        for (int j = 0; j < g.n_x1; ++j)
            for (int k = 0; k < g.n_x2; ++k) {
                std::size_t n = g.index(i, j, k);
                Vec3 p = g.point(i, j, k);
                trans.at(1, n) = 1.0;
                for (int a = 0; a < 3; ++a) dil.at(a, n) = p[a];
            }
    // O(h^2): the covariance-rescaled differencing is uniformly second
    // order, not exact, on these non-decaying fields
    double tol = 10 * g.h * g.h;
    for (auto* X : {&trans, &dil}) {
        SymTensorField D = conformal_killing_apply(ctx, *X);
        for (std::size_t n = 0; n < g.size(); ++n)
            for (int c = 0; c < 6; ++c) CHECK(std::abs(D.at(c, n)) < tol);
    }

    std::mt19937 rng(9);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    VectorField X(g);
    for (std::size_t n = 0; n < g.size(); ++n)
        for (int c = 0; c < 3; ++c) X.at(c, n) = u(rng);
    SymTensorField D = conformal_killing_apply(ctx, X);
    auto tr = divergence_and_trace(ctx, D).second;
    for (std::size_t n = 0; n < g.size(); ++n) CHECK(std::abs(tr[n]) < 1e-10);
}

TEST_CASE("vector Laplacian: Killing kernel, linearity, radial oracle") {
    ChartGrid g = box_grid(17);
    OperatorContext ctx(g, sample_metric(g, ghyp), Weighting::Compactified);

    VectorField kil(g);
    for (int i = 0; i < g.n_y; ++i)
        for (int j = 0; j < g.n_x1; ++j)
            for (int k = 0; k < g.n_x2; ++k) {
                std::size_t n = g.index(i, j, k);
                Vec3 p = g.point(i, j, k);
                for (int a = 0; a < 3; ++a) kil.at(a, n) = p[a];
            }
    VectorField Lk = vector_laplacian_apply(ctx, kil);
    double ktol = 10 * g.h * g.h;
    for (int i = 2; i < g.n_y - 2; ++i)
        for (int j = 2; j < g.n_x1 - 2; ++j)
            for (int k = 2; k < g.n_x2 - 2; ++k)
                for (int a = 0; a < 3; ++a)
                    CHECK(std::abs(Lk.at(a, g.index(i, j, k))) < ktol);

    // X = sin(y) d_y on the model: L X = (-2/3 y^2 f'' + 2 y f') d_y
    double errs[2];
    int idx = 0;
    for (int n : {17, 33}) {
        ChartGrid gg = box_grid(n);
        OperatorContext cc(gg, sample_metric(gg, ghyp), Weighting::Compactified);
        VectorField X(gg);
        for (int i = 0; i < gg.n_y; ++i)
            for (int j = 0; j < gg.n_x1; ++j)
                for (int k = 0; k < gg.n_x2; ++k)
                    X.at(0, gg.index(i, j, k)) = std::sin(gg.y_of(i));
        VectorField L = vector_laplacian_apply(cc, X);
        double err = 0;
        for (int i = 3; i < gg.n_y - 3; ++i)
            for (int j = 3; j < gg.n_x1 - 3; ++j)
                for (int k = 3; k < gg.n_x2 - 3; ++k) {
                    double y = gg.y_of(i);
                    double oracle = (2.0 / 3.0) * y * y * std::sin(y) + 2 * y * std::cos(y);
                    err = std::max(err, std::abs(L.at(0, gg.index(i, j, k)) - oracle));
                }
        errs[idx++] = err;
    }
    CHECK(errs[0] < 0.05);
    CHECK(errs[0] / errs[1] > 3.0);

    // exact linearity
    VectorField X2(g);
    std::mt19937 rng(13);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (std::size_t n = 0; n < g.size(); ++n)
        for (int c = 0; c < 3; ++c) X2.at(c, n) = u(rng);
    VectorField L1 = vector_laplacian_apply(ctx, X2);
    VectorField X3(g);
    for (std::size_t n = 0; n < g.size(); ++n)
        for (int c = 0; c < 3; ++c) X3.at(c, n) = 2.5 * X2.at(c, n);
    VectorField L2 = vector_laplacian_apply(ctx, X3);
    for (std::size_t n = 0; n < g.size(); ++n)
        for (int c = 0; c < 3; ++c)
            CHECK(L2.at(c, n) == doctest::Approx(2.5 * L1.at(c, n)).epsilon(1e-9));
}

TEST_CASE("vector Laplacian: discrete self-adjointness under quadrature") {
    ChartGrid g = box_grid(25);
    OperatorContext ctx(g, sample_metric(g, ghyp), Weighting::Compactified);
    auto bump = [&](const Vec3& p, double cx) {
        double r2 = (p[0] - 1.3) * (p[0] - 1.3) + (p[1] - cx) * (p[1] - cx) + p[2] * p[2];
        return std::exp(-r2 / 0.02) * (r2 < 0.09 ? 1.0 : 0.0);
    };
    VectorField X(g), Y(g);
    for (int i = 0; i < g.n_y; ++i)
        for (int j = 0; j < g.n_x1; ++j)
            for (int k = 0; k < g.n_x2; ++k) {
                std::size_t n = g.index(i, j, k);
                Vec3 p = g.point(i, j, k);
                X.at(0, n) = bump(p, -0.1);
                Y.at(1, n) = bump(p, 0.1);
            }
    VectorField LX = vector_laplacian_apply(ctx, X);
    SymTensorField DX = conformal_killing_apply(ctx, X);
    SymTensorField DY = conformal_killing_apply(ctx, Y);
    double lhs = 0, rhs = 0;
    double h3 = g.h * g.h * g.h;
    for (int i = 0; i < g.n_y; ++i)
        for (int j = 0; j < g.n_x1; ++j)
            for (int k = 0; k < g.n_x2; ++k) {
                std::size_t n = g.index(i, j, k);
                double y = g.y_of(i);
                double vol = h3 / (y * y * y);
                SymMat3 gm = ctx.metric(n), gi = ctx.metric_inverse(n);
                for (int a = 0; a < 3; ++a)
                    for (int b = 0; b < 3; ++b) {
                        lhs += vol * gm(a, b) * LX.at(a, n) * Y.at(b, n);
                        for (int c = 0; c < 3; ++c)
                            for (int d = 0; d < 3; ++d)
                                rhs += vol * gi(a, c) * gi(b, d) * DX.tensor_at(n)(a, b) *
                                       DY.tensor_at(n)(c, d);
                    }
            }
    CHECK(lhs == doctest::Approx(rhs).epsilon(0.02));
    CHECK(std::abs(rhs) > 1e-6);  // the pairing is not trivially zero
}

TEST_CASE("constraint residuals on model data") {
    ChartGrid g = box_grid(17);
    MetricField gm = sample_metric(g, ghyp);
    OperatorContext ctx(g, gm, Weighting::Compactified);

    ConstraintResiduals r1 = constraint_residuals(ctx, gm);
    for (int i = 1; i < g.n_y - 1; ++i)
        for (int j = 1; j < g.n_x1 - 1; ++j)
            for (int k = 1; k < g.n_x2 - 1; ++k) {
                std::size_t n = g.index(i, j, k);
                for (int a = 0; a < 3; ++a) CHECK(std::abs(r1.momentum.at(a, n)) < 1e-10);
                CHECK(std::abs(r1.hamiltonian[n]) < 1e-9);
            }

    SymTensorField K2(g);
    for (std::size_t n = 0; n < g.size(); ++n)
        for (int c = 0; c < 6; ++c) K2.at(c, n) = 2.0 * gm.at(c, n);
    ConstraintResiduals r2 = constraint_residuals(ctx, K2);
    for (int i = 1; i < g.n_y - 1; ++i) {
        std::size_t n = g.index(i, g.n_x1 / 2, g.n_x2 / 2);
        CHECK(r2.hamiltonian[n] == doctest::Approx(18.0).epsilon(1e-9));
    }
}

TEST_CASE("Lichnerowicz operator and its linearization") {
    ChartGrid g = box_grid(17);
    MetricField gm = sample_metric(g, ghyp);
    OperatorContext ctx(g, gm, Weighting::Compactified);
    SymTensorField nu(g);  // zero

    ScalarField one = sample_scalar(g, [](const Vec3&) { return 1.0; });
    LichnerowiczResult r1 = lichnerowicz_apply(ctx, nu, one);
    for (int i = 1; i < g.n_y - 1; ++i)
        for (int j = 1; j < g.n_x1 - 1; ++j)
            for (int k = 1; k < g.n_x2 - 1; ++k) {
                std::size_t n = g.index(i, j, k);
                CHECK(std::abs(r1.value[n]) < 1e-10);
                CHECK(r1.f[n] == doctest::Approx(3.0).epsilon(1e-10));
            }

    ScalarField two = sample_scalar(g, [](const Vec3&) { return 2.0; });
    LichnerowiczResult r2 = lichnerowicz_apply(ctx, nu, two);
    CHECK(r2.value[g.index(3, 3, 3)] == doctest::Approx(-22.5).epsilon(1e-10));

    ScalarField bad = sample_scalar(g, [](const Vec3& p) { return p[1]; });
    CHECK_THROWS_AS(lichnerowicz_apply(ctx, nu, bad), std::domain_error);

    // P(1) = -3 on model data
    ScalarField P1 = linearized_lichnerowicz_apply(ctx, r1.f, one);
    CHECK(P1[g.index(4, 4, 4)] == doctest::Approx(-3.0).epsilon(1e-10));

    // directional-derivative consistency, first order in t
    ScalarField eta = sample_scalar(g, [](const Vec3& p) {
        return 0.5 * std::sin(2 * p[0]) * std::cos(p[1]);
    });
    ScalarField Peta = linearized_lichnerowicz_apply(ctx, r1.f, eta);
    auto err_at = [&](double t) {
        ScalarField ut(g);
        for (std::size_t n = 0; n < g.size(); ++n) ut[n] = 1.0 + t * eta[n];
        LichnerowiczResult rt = lichnerowicz_apply(ctx, nu, ut);
        ScalarField diff(g);
        for (std::size_t n = 0; n < g.size(); ++n)
            diff[n] = (rt.value[n] - r1.value[n]) / t - Peta[n];
        return sup_interior(g, diff);
    };
    double e3 = err_at(1e-3), e4 = err_at(1e-4);
    CHECK(e3 < 1e-2);
    CHECK(e3 / e4 > 4.0);
    CHECK(e3 / e4 < 25.0);

    // linearity of P in u, exact
    ScalarField sum(g);
    for (std::size_t n = 0; n < g.size(); ++n) sum[n] = one[n] + eta[n];
    ScalarField Ps = linearized_lichnerowicz_apply(ctx, r1.f, sum);
    for (std::size_t n = 0; n < g.size(); ++n)
        CHECK(Ps[n] == doctest::Approx(P1[n] + Peta[n]).epsilon(1e-11));
}

TEST_CASE("superharmonicity of the height function on the model") {
    ChartGrid g = box_grid(17);
    OperatorContext ctx(g, sample_metric(g, ghyp), Weighting::Compactified);
    ScalarField y = sample_scalar(g, [](const Vec3& p) { return p[0]; });
    SuperharmonicityReport rep = superharmonicity_check(ctx, y);
    for (int i = 1; i < g.n_y - 1; ++i)
        for (int j = 1; j < g.n_x1 - 1; ++j)
            for (int k = 1; k < g.n_x2 - 1; ++k) {
                std::size_t n = g.index(i, j, k);
                CHECK(rep.laplacian[n] == doctest::Approx(-g.y_of(i)).epsilon(1e-11));
            }
    CHECK(rep.max_value < 0);
}

TEST_CASE("metric compatibility through the conformal correction") {
    ChartGrid g = box_grid(17);
    auto gfn = [](const Vec3& p) {
        double w = std::pow(psi_fn(p), 4);
        return ghyp(p) * w;
    };
    OperatorContext ctx(g, sample_metric(g, gfn), Weighting::Compactified);
    CHECK(ctx.metric_compatibility_residual() < 1e-10);
    OperatorContext ctxp(g, sample_metric(g, gfn), Weighting::Plain);
    CHECK(ctxp.metric_compatibility_residual() < 1e-10);
}

TEST_CASE("pointwise jets match the grid operators") {
    auto hfn = [](const Vec3& p) {
        SymMat3 m = SymMat3::identity();
        double w = std::pow(psi_fn(p), 4);
        return m * w;
    };
    // R of g = y^-2 hbar via jets against the conformal-law oracle
    for (Vec3 p : {Vec3{1.1, 0.2, -0.3}, Vec3{0.9, -0.4, 0.1}, Vec3{1.6, 0.0, 0.4}}) {
        MetricJet jet = metric_jet(hfn, p, 1e-4);
        CHECK(scalar_curvature_ah(jet, p[0]) ==
              doctest::Approx(conformal_R_oracle(p)).epsilon(1e-5));
    }
    // flat jets: zero curvature, exact Laplacian of a quadratic
    auto flat = [](const Vec3&) { return SymMat3::identity(); };
    MetricJet fj = metric_jet(flat, {1.2, 0, 0}, 1e-4);
    CHECK(std::abs(scalar_curvature_plain(fj)) < 1e-9);
    CHECK(scalar_curvature_ah(fj, 1.2) == doctest::Approx(-6.0).epsilon(1e-12));
    ScalarJet uj = scalar_jet([](const Vec3& p) { return p[0] * p[0]; }, {1.2, 0.3, 0}, 1e-4);
    // Delta_g y^2 = y^2 * 2 - y * 2y = 0 on the model
    CHECK(std::abs(laplacian_ah(fj, uj, 1.2)) < 1e-6);
}
