#pragma once
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ahg {

using Vec3 = std::array<double, 3>;

// Symmetric 3x3 tensor, packed (00,01,02,11,12,22).
struct SymMat3 {
    std::array<double, 6> v{};

    static constexpr int idx(int a, int b) {
        if (a > b) std::swap(a, b);
        // (0,0)->0 (0,1)->1 (0,2)->2 (1,1)->3 (1,2)->4 (2,2)->5
        return a == 0 ? b : (a == 1 ? 2 + b : 5);
    }
    double operator()(int a, int b) const { return v[idx(a, b)]; }
    double& at(int a, int b) { return v[idx(a, b)]; }

    static SymMat3 zero() { return {}; }
    static SymMat3 identity() {
        SymMat3 m;
        m.v = {1, 0, 0, 1, 0, 1};
        return m;
    }

    SymMat3 operator+(const SymMat3& o) const {
        SymMat3 r;
        for (int i = 0; i < 6; ++i) r.v[i] = v[i] + o.v[i];
        return r;
    }
    SymMat3 operator-(const SymMat3& o) const {
        SymMat3 r;
        for (int i = 0; i < 6; ++i) r.v[i] = v[i] - o.v[i];
        return r;
    }
    SymMat3 operator*(double c) const {
        SymMat3 r;
        for (int i = 0; i < 6; ++i) r.v[i] = v[i] * c;
        return r;
    }

    double det() const {
        const SymMat3& m = *this;
        return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(1, 2)) -
               m(0, 1) * (m(0, 1) * m(2, 2) - m(1, 2) * m(0, 2)) +
               m(0, 2) * (m(0, 1) * m(1, 2) - m(1, 1) * m(0, 2));
    }

    SymMat3 inverse() const {
        const SymMat3& m = *this;
        double d = det();
        if (d == 0.0) throw std::domain_error("SymMat3: singular matrix");
        SymMat3 r;
        r.at(0, 0) = (m(1, 1) * m(2, 2) - m(1, 2) * m(1, 2)) / d;
        r.at(0, 1) = (m(0, 2) * m(1, 2) - m(0, 1) * m(2, 2)) / d;
        r.at(0, 2) = (m(0, 1) * m(1, 2) - m(0, 2) * m(1, 1)) / d;
        r.at(1, 1) = (m(0, 0) * m(2, 2) - m(0, 2) * m(0, 2)) / d;
        r.at(1, 2) = (m(0, 1) * m(0, 2) - m(0, 0) * m(1, 2)) / d;
        r.at(2, 2) = (m(0, 0) * m(1, 1) - m(0, 1) * m(0, 1)) / d;
        return r;
    }

    // Smallest eigenvalue via characteristic cubic; used for SPD margins.
    double min_eigenvalue() const;

    bool is_spd() const { return min_eigenvalue() > 0.0; }
};

struct Mat3 {
    // row-major general 3x3
    std::array<double, 9> v{};
    double operator()(int a, int b) const { return v[3 * a + b]; }
    double& at(int a, int b) { return v[3 * a + b]; }
    static Mat3 identity() {
        Mat3 m;
        m.v = {1, 0, 0, 0, 1, 0, 0, 0, 1};
        return m;
    }
    Mat3 operator*(const Mat3& o) const {
        Mat3 r;
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) {
                double s = 0;
                for (int c = 0; c < 3; ++c) s += (*this)(a, c) * o(c, b);
                r.at(a, b) = s;
            }
        return r;
    }
};

// J^T S J for covariant-2 pullback by a map with Jacobian J.
SymMat3 congruence(const Mat3& J, const SymMat3& S);

inline double dot(const Vec3& a, const Vec3& b) {
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

}  // namespace ahg
