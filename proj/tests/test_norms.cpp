#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "ahg/norms.hpp"
#include "doctest.h"

using namespace ahg;

namespace {
ChartGrid make_grid() { return ChartGrid(0.25, -1.0, -1.0, 0.125, 12, 17, 17); }

ScalarField model_rho(const ChartGrid& g) {
    ScalarField rho(g);
    for (int i = 0; i < g.n_y; ++i)
        for (int j = 0; j < g.n_x1; ++j)
            for (int k = 0; k < g.n_x2; ++k) {
                Vec3 p = g.point(i, j, k);
                rho[g.index(i, j, k)] = 2 * p[0] / (p[1] * p[1] + p[2] * p[2] + (p[0] + 1) * (p[0] + 1));
            }
    return rho;
}
}  // namespace

TEST_CASE("weighted norm: weight normalization and zero field") {
    ChartGrid g = make_grid();
    ScalarField rho = model_rho(g);
    ScalarField u(g);
    u.data = rho.data;
    CHECK(weighted_grid_norm(u, rho, 1.0, 0) == doctest::Approx(1.0).epsilon(1e-14));
    ScalarField z(g);
    CHECK(weighted_grid_norm(z, rho, 1.0, 0) == 0.0);
    CHECK(weighted_grid_norm(z, rho, 1.0, 2) == 0.0);

    // u = rho^2 with delta = 1 picks out max rho
    ScalarField u2(g);
    double max_rho = 0;
    for (std::size_t n = 0; n < g.size(); ++n) {
        u2[n] = rho[n] * rho[n];
        max_rho = std::max(max_rho, rho[n]);
    }
    CHECK(weighted_grid_norm(u2, rho, 1.0, 0) == doctest::Approx(max_rho).epsilon(1e-14));
}

TEST_CASE("weighted norm: homogeneity and triangle inequality") {
    ChartGrid g = make_grid();
    ScalarField rho = model_rho(g);
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u01(-1.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        SymTensorField a(g), b(g), sum(g);
        for (std::size_t n = 0; n < g.size(); ++n)
            for (int c = 0; c < 6; ++c) {
                a.at(c, n) = u01(rng);
                b.at(c, n) = u01(rng);
                sum.at(c, n) = a.at(c, n) + b.at(c, n);
            }
        for (int order : {0, 1, 2}) {
            double na = weighted_grid_norm(a, rho, 1.0, order);
            double nb = weighted_grid_norm(b, rho, 1.0, order);
            double ns = weighted_grid_norm(sum, rho, 1.0, order);
            CHECK(ns <= na + nb + 1e-12 * (na + nb));
            SymTensorField scaled(g);
            double c0 = -2.7;
            for (std::size_t n = 0; n < g.size(); ++n)
                for (int c = 0; c < 6; ++c) scaled.at(c, n) = c0 * a.at(c, n);
            CHECK(weighted_grid_norm(scaled, rho, 1.0, order) ==
                  doctest::Approx(std::abs(c0) * na).epsilon(1e-12));
        }
    }
}

TEST_CASE("weighted norm: intrinsic rescaling by covariance") {
    // a one-form with components w_a = y^-1 c_a has |w|_g = const * y^0:
    // the order-0 norm with delta = 0 must be y-independent
    ChartGrid g = make_grid();
    ScalarField one(g);
    for (std::size_t n = 0; n < g.size(); ++n) one[n] = 1.0;
    OneFormField w(g);
    for (int i = 0; i < g.n_y; ++i)
        for (int j = 0; j < g.n_x1; ++j)
            for (int k = 0; k < g.n_x2; ++k) {
                std::size_t n = g.index(i, j, k);
                double y = g.y_of(i);
                w.at(0, n) = 3.0 / y;
                w.at(1, n) = -4.0 / y;
            }
    CHECK(weighted_grid_norm(w, one, 0.0, 0) == doctest::Approx(5.0).epsilon(1e-12));
    // the chart derivative of y^-1 c is -c/y^2, so the order-1 term adds
    // exactly the order-0 magnitude (the rescale correction, no stencil error)
    CHECK(weighted_grid_norm(w, one, 0.0, 1) == doctest::Approx(10.0).epsilon(1e-9));

    // a vector with components X^a = y c^a behaves the same way
    VectorField X(g);
    for (int i = 0; i < g.n_y; ++i)
        for (int j = 0; j < g.n_x1; ++j)
            for (int k = 0; k < g.n_x2; ++k) {
                std::size_t n = g.index(i, j, k);
                X.at(2, n) = 2.0 * g.y_of(i);
            }
    CHECK(weighted_grid_norm(X, one, 0.0, 1) == doctest::Approx(4.0).epsilon(1e-9));
}

TEST_CASE("weighted norm: mismatched grids rejected") {
    ChartGrid g = make_grid();
    ChartGrid g2(0.25, -1.0, -1.0, 0.125, 12, 17, 18);
    ScalarField rho(g2);
    for (std::size_t n = 0; n < g2.size(); ++n) rho[n] = 1.0;
    ScalarField u(g);
    CHECK_THROWS_AS(weighted_grid_norm(u, rho, 1.0, 0), std::invalid_argument);
}

TEST_CASE("grid invariants") {
    CHECK_THROWS_AS(ChartGrid(0.1, 0, 0, 0.125, 8, 8, 8), std::invalid_argument);  // y_min < 2h
    CHECK_THROWS_AS(ChartGrid(1.0, 0, 0, 0.125, 3, 8, 8), std::invalid_argument);  // count < 4
    CHECK_THROWS_AS(ChartGrid(-1.0, 0, 0, 0.125, 8, 8, 8), std::invalid_argument);
}
