#pragma once
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ahg/common.hpp"

namespace ahg {

// Uniform sample grid in half-space coordinates (y, x1, x2).
// y runs over [y_min, y_min + (n_y-1) h], x1/x2 over [x1_0, ...], same h in
// all directions. Carrier for every discrete field in the project.
struct ChartGrid {
    double y_min = 0;
    double x1_0 = 0, x2_0 = 0;
    double h = 0;
    int n_y = 0, n_x1 = 0, n_x2 = 0;
    // optional mask: 1 = active node, 0 = excluded (outside domain)
    std::vector<std::uint8_t> mask;

    ChartGrid() = default;
    ChartGrid(double y_min_, double x1_0_, double x2_0_, double h_, int ny, int nx1, int nx2);

    std::size_t size() const { return std::size_t(n_y) * n_x1 * n_x2; }
    std::size_t index(int i, int j, int k) const {
        return (std::size_t(i) * n_x1 + j) * std::size_t(n_x2) + k;
    }
    Vec3 point(int i, int j, int k) const {
        return {y_min + i * h, x1_0 + j * h, x2_0 + k * h};
    }
    double y_of(int i) const { return y_min + i * h; }
    double y_max() const { return y_min + (n_y - 1) * h; }

    bool active(std::size_t n) const { return mask.empty() || mask[n] != 0; }
    bool active(int i, int j, int k) const { return active(index(i, j, k)); }
    void set_mask(std::function<bool(const Vec3&)> keep);
    std::size_t active_count() const;

    // true if the node and its (2r+1)-cube axis stencils stay in the box
    bool interior(int i, int j, int k, int r = 1) const {
        return i >= r && i < n_y - r && j >= r && j < n_x1 - r && k >= r && k < n_x2 - r;
    }

    bool same_layout(const ChartGrid& o) const {
        return y_min == o.y_min && x1_0 == o.x1_0 && x2_0 == o.x2_0 && h == o.h &&
               n_y == o.n_y && n_x1 == o.n_x1 && n_x2 == o.n_x2;
    }
};

// Covariance tag: signed rank (covariant indices minus contravariant).
// Determines how components scale under the Moebius charts, hence how
// discrete intrinsic norms and boundary-weighted differences are formed.
enum class Covariance : int {
    Scalar = 0,
    OneForm = 1,
    Vector = -1,
    CovTensor2 = 2,
};

template <int NC>
struct FieldT {
    const ChartGrid* grid = nullptr;
    Covariance cov = Covariance::Scalar;
    std::vector<double> data;  // component-major: data[c*size + n]

    FieldT() = default;
    FieldT(const ChartGrid& g, Covariance c) : grid(&g), cov(c), data(NC * g.size(), 0.0) {}

    static constexpr int ncomp() { return NC; }
    double& at(int c, std::size_t n) { return data[std::size_t(c) * grid->size() + n]; }
    double at(int c, std::size_t n) const { return data[std::size_t(c) * grid->size() + n]; }
    int rank() const { return static_cast<int>(cov); }
};

struct ScalarField : FieldT<1> {
    ScalarField() = default;
    explicit ScalarField(const ChartGrid& g) : FieldT<1>(g, Covariance::Scalar) {}
    double& operator[](std::size_t n) { return data[n]; }
    double operator[](std::size_t n) const { return data[n]; }
};

struct OneFormField : FieldT<3> {
    OneFormField() = default;
    explicit OneFormField(const ChartGrid& g) : FieldT<3>(g, Covariance::OneForm) {}
};

struct VectorField : FieldT<3> {
    VectorField() = default;
    explicit VectorField(const ChartGrid& g) : FieldT<3>(g, Covariance::Vector) {}
};

struct SymTensorField : FieldT<6> {
    SymTensorField() = default;
    explicit SymTensorField(const ChartGrid& g) : FieldT<6>(g, Covariance::CovTensor2) {}
    SymMat3 tensor_at(std::size_t n) const {
        SymMat3 m;
        for (int c = 0; c < 6; ++c) m.v[c] = at(c, n);
        return m;
    }
    void set_tensor(std::size_t n, const SymMat3& m) {
        for (int c = 0; c < 6; ++c) at(c, n) = m.v[c];
    }
};

// A metric is a SymTensorField required SPD on active nodes.
struct MetricField : SymTensorField {
    MetricField() = default;
    explicit MetricField(const ChartGrid& g) : SymTensorField(g) {}
    // throws with node info if some active node is not SPD
    void require_spd(const std::string& what) const;
    double min_spd_margin() const;
};

// Plain-text structured-grid dump, one node per row: y,x1,x2,components...
void dump_csv(const std::string& path, const ChartGrid& grid,
              const std::vector<std::pair<std::string, const std::vector<double>*>>& columns);

template <int NC>
void dump_field_csv(const std::string& path, const FieldT<NC>& f,
                    const std::vector<std::string>& names);

// Tricubic (4-point Lagrange per axis) interpolation of one component.
double interpolate_tricubic(const ChartGrid& g, const std::vector<double>& comp, const Vec3& p);

}  // namespace ahg
