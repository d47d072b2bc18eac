#include "ahg/halfspace.hpp"

namespace ahg {

SymMat3 hyperbolic_metric_at(const Vec3& p) {
    if (!(p[0] > 0)) throw std::domain_error("hyperbolic_metric_at: y must be positive");
    double w = 1.0 / (p[0] * p[0]);
    SymMat3 m;
    m.at(0, 0) = m.at(1, 1) = m.at(2, 2) = w;
    return m;
}

SymMat3 hyperbolic_metric_inverse_at(const Vec3& p) {
    if (!(p[0] > 0)) throw std::domain_error("hyperbolic_metric_inverse_at: y must be positive");
    double w = p[0] * p[0];
    SymMat3 m;
    m.at(0, 0) = m.at(1, 1) = m.at(2, 2) = w;
    return m;
}

ValueGrad model_defining_function(const Vec3& p) {
    if (!(p[0] > 0)) throw std::domain_error("model_defining_function: y must be positive");
    double y = p[0];
    double D = p[1] * p[1] + p[2] * p[2] + (y + 1) * (y + 1);
    ValueGrad r;
    r.value = 2 * y / D;
    r.grad[0] = (2 * D - 4 * y * (y + 1)) / (D * D);
    r.grad[1] = -4 * y * p[1] / (D * D);
    r.grad[2] = -4 * y * p[2] / (D * D);
    return r;
}

Vec3 inversion(const Vec3& p) {
    double r2 = dot(p, p);
    if (!(r2 > 0)) throw std::domain_error("inversion: r must be positive");
    return {p[0] / r2, p[1] / r2, p[2] / r2};
}

Mat3 reflection_q(const Vec3& p) {
    double r2 = dot(p, p);
    if (!(r2 > 0)) throw std::domain_error("reflection_q: r must be positive");
    Mat3 Q;
    for (int a = 0; a < 3; ++a)
        for (int c = 0; c < 3; ++c)
            Q.at(a, c) = ((a == c ? r2 : 0.0) - 2 * p[a] * p[c]) / r2;
    return Q;
}

Mat3 inversion_jacobian(const Vec3& p) {
    double r2 = dot(p, p);
    Mat3 J = reflection_q(p);
    for (auto& v : J.v) v /= r2;
    return J;
}

ChartMap ChartMap::identity() {
    ChartMap m;
    m.value = [](const Vec3& p) { return p; };
    m.jacobian = [](const Vec3&) { return Mat3::identity(); };
    return m;
}

ChartMap ChartMap::inversion_map() {
    ChartMap m;
    m.value = [](const Vec3& p) { return inversion(p); };
    m.jacobian = [](const Vec3& p) { return inversion_jacobian(p); };
    return m;
}

ChartMap ChartMap::scaling(double s, double c1, double c2) {
    if (!(s > 0)) throw std::invalid_argument("ChartMap::scaling: scale must be positive");
    ChartMap m;
    m.value = [s, c1, c2](const Vec3& p) { return Vec3{s * p[0], s * p[1] + c1, s * p[2] + c2}; };
    m.jacobian = [s](const Vec3&) {
        Mat3 J{};
        J.at(0, 0) = J.at(1, 1) = J.at(2, 2) = s;
        return J;
    };
    return m;
}

MobiusMap mobius_parametrization(const Vec3& center_x, double scale) {
    if (!(scale > 0)) throw std::invalid_argument("mobius_parametrization: scale must be positive");
    MobiusMap m;
    m.center = {scale, center_x[1], center_x[2]};
    return m;
}

SymMat3 pullback_metric(const ChartMap& map, const std::function<SymMat3(const Vec3&)>& metric,
                        const Vec3& p) {
    Mat3 J = map.jacobian(p);
    return congruence(J, metric(map.value(p)));
}

SymMat3 pullback_metric(const ChartMap& map, const SymTensorField& metric, const Vec3& p) {
    Mat3 J = map.jacobian(p);
    Vec3 q = map.value(p);
    SymMat3 m;
    const std::size_t sz = metric.grid->size();
    for (int c = 0; c < 6; ++c) {
        std::vector<double> comp(metric.data.begin() + c * sz,
                                 metric.data.begin() + (c + 1) * sz);
        m.v[c] = interpolate_tricubic(*metric.grid, comp, q);
    }
    return congruence(J, m);
}

Vec3 pullback_oneform(const Mat3& J, const Vec3& w) {
    Vec3 r{};
    for (int a = 0; a < 3; ++a)
        for (int c = 0; c < 3; ++c) r[a] += J(c, a) * w[c];
    return r;
}

}  // namespace ahg
