#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "ahg/halfspace.hpp"
#include "doctest.h"

using namespace ahg;

namespace {
std::mt19937 rng(42);
Vec3 random_point(double ymin = 0.2, double ymax = 3.0, double xext = 3.0) {
    std::uniform_real_distribution<double> uy(ymin, ymax), ux(-xext, xext);
    return {uy(rng), ux(rng), ux(rng)};
}
}  // namespace

TEST_CASE("model metric values") {
    SymMat3 g1 = hyperbolic_metric_at({1, 0, 0});
    CHECK(g1(0, 0) == 1.0);
    CHECK(g1(1, 1) == 1.0);
    CHECK(g1(2, 2) == 1.0);
    CHECK(g1(0, 1) == 0.0);
    SymMat3 g2 = hyperbolic_metric_at({2, 0, 0});
    CHECK(g2(0, 0) == doctest::Approx(0.25));
    SymMat3 gi = hyperbolic_metric_inverse_at({2, 1, -1});
    CHECK(gi(1, 1) == doctest::Approx(4.0));
    CHECK_THROWS_AS(hyperbolic_metric_at({0.0, 1, 1}), std::domain_error);
    CHECK_THROWS_AS(hyperbolic_metric_at({-1.0, 0, 0}), std::domain_error);
}

TEST_CASE("model defining function") {
    ValueGrad v = model_defining_function({1, 0, 0});
    CHECK(v.value == doctest::Approx(0.5).epsilon(1e-15));
    // gradient matches differences
    for (int t = 0; t < 50; ++t) {
        Vec3 p = random_point();
        ValueGrad w = model_defining_function(p);
        for (int a = 0; a < 3; ++a) {
            Vec3 q = p, r = p;
            q[a] += 1e-6;
            r[a] -= 1e-6;
            double fd =
                (model_defining_function(q).value - model_defining_function(r).value) / 2e-6;
            CHECK(w.grad[a] == doctest::Approx(fd).epsilon(1e-6));
        }
    }
    // |d rho|^2_g / rho^2 -> 1 at the ideal boundary
    for (double x : {0.0, 0.4, -1.3}) {
        Vec3 p{1e-3, x, 0.2};
        ValueGrad w = model_defining_function(p);
        double num = p[0] * p[0] * dot(w.grad, w.grad);
        CHECK(std::abs(num / (w.value * w.value) - 1.0) < 1e-2);
    }
    // invariance under the inversion
    for (int t = 0; t < 50; ++t) {
        Vec3 p = random_point();
        double a = model_defining_function(inversion(p)).value;
        double b = model_defining_function(p).value;
        CHECK(a == doctest::Approx(b).epsilon(1e-13));
    }
    CHECK(model_defining_function(inversion({2, 0, 0})).value ==
          doctest::Approx(model_defining_function({0.5, 0, 0}).value).epsilon(1e-15));
}

TEST_CASE("inversion: fixed point, involution, reflection matrix") {
    Vec3 f = inversion({1, 0, 0});
    CHECK(f[0] == 1.0);
    Vec3 h = inversion({2, 0, 0});
    CHECK(h[0] == doctest::Approx(0.5));
    for (int t = 0; t < 100; ++t) {
        Vec3 p = random_point();
        Vec3 q = inversion(inversion(p));
        for (int a = 0; a < 3; ++a) CHECK(std::abs(q[a] - p[a]) <= 1e-14 * (1 + std::abs(p[a])));
        // Q is its own inverse
        Mat3 Q = reflection_q(p);
        Mat3 QQ = Q * Q;
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
                CHECK(std::abs(QQ(a, b) - (a == b ? 1.0 : 0.0)) <= 1e-13);
    }
    CHECK_THROWS_AS(inversion({0, 0, 0}), std::domain_error);
}

TEST_CASE("pullbacks: isometries of the model") {
    auto ghyp = [](const Vec3& p) { return hyperbolic_metric_at(p); };
    ChartMap I = ChartMap::inversion_map();
    for (int t = 0; t < 100; ++t) {
        Vec3 p = random_point();
        SymMat3 pulled = pullback_metric(I, ghyp, p);
        SymMat3 direct = hyperbolic_metric_at(p);
        for (int c = 0; c < 6; ++c)
            CHECK(std::abs(pulled.v[c] - direct.v[c]) <= 1e-12 * (1 + std::abs(direct.v[c])));
    }
    // dilations are isometries: the neck scaling map with s = eps
    ChartMap s = ChartMap::scaling(0.37);
    for (int t = 0; t < 50; ++t) {
        Vec3 p = random_point();
        SymMat3 pulled = pullback_metric(s, ghyp, p);
        SymMat3 direct = hyperbolic_metric_at(p);
        for (int c = 0; c < 6; ++c)
            CHECK(std::abs(pulled.v[c] - direct.v[c]) <= 1e-12 * (1 + std::abs(direct.v[c])));
    }
    // identity map returns the input
    ChartMap id = ChartMap::identity();
    Vec3 p{0.7, -0.3, 1.1};
    SymMat3 pulled = pullback_metric(id, ghyp, p);
    SymMat3 direct = hyperbolic_metric_at(p);
    for (int c = 0; c < 6; ++c) CHECK(pulled.v[c] == direct.v[c]);
}

TEST_CASE("pullback of a grid field interpolates and rejects exits") {
    ChartGrid g(0.5, -1.0, -1.0, 0.125, 13, 17, 17);
    SymTensorField field(g);
    for (int i = 0; i < g.n_y; ++i)
        for (int j = 0; j < g.n_x1; ++j)
            for (int k = 0; k < g.n_x2; ++k) {
                Vec3 p = g.point(i, j, k);
                // cubic components are reproduced exactly by the interpolation
                SymMat3 m;
                m.at(0, 0) = 1 + p[0] * p[0] * p[0];
                m.at(1, 1) = 2 + p[1] * p[1];
                m.at(2, 2) = 1.5;
                m.at(0, 1) = 0.1 * p[0] * p[1];
                field.set_tensor(g.index(i, j, k), m);
            }
    ChartMap id = ChartMap::identity();
    Vec3 q{0.9, 0.21, -0.4};
    SymMat3 v = pullback_metric(id, field, q);
    CHECK(v(0, 0) == doctest::Approx(1 + q[0] * q[0] * q[0]).epsilon(1e-12));
    CHECK(v(0, 1) == doctest::Approx(0.1 * q[0] * q[1]).epsilon(1e-12));
    CHECK_THROWS_AS(pullback_metric(id, field, Vec3{5.0, 0, 0}), std::out_of_range);
}

TEST_CASE("Moebius parametrization") {
    MobiusMap id = mobius_parametrization({0, 0, 0}, 1.0);
    Vec3 p{1.3, -0.2, 0.8};
    Vec3 q = id.apply(p);
    for (int a = 0; a < 3; ++a) CHECK(q[a] == p[a]);

    MobiusMap m = mobius_parametrization({0, 0.4, -1.2}, 2.5);
    Vec3 img = m.apply({1, 0, 0});
    CHECK(img[0] == doctest::Approx(2.5));
    CHECK(img[1] == doctest::Approx(0.4));
    CHECK(img[2] == doctest::Approx(-1.2));

    // pulls the model metric back to itself
    auto ghyp = [](const Vec3& pt) { return hyperbolic_metric_at(pt); };
    ChartMap cm;
    cm.value = [m](const Vec3& pt) { return m.apply(pt); };
    cm.jacobian = [m](const Vec3&) { return m.jacobian(); };
    for (int t = 0; t < 60; ++t) {
        Vec3 r = random_point();
        SymMat3 pulled = pullback_metric(cm, ghyp, r);
        SymMat3 direct = hyperbolic_metric_at(r);
        for (int c = 0; c < 6; ++c)
            CHECK(std::abs(pulled.v[c] - direct.v[c]) <= 1e-12 * (1 + std::abs(direct.v[c])));
    }
    CHECK_THROWS_AS(mobius_parametrization({0, 0, 0}, 0.0), std::invalid_argument);
}
