#include "ahg/splice.hpp"

#include <cmath>
#include <random>

#include "ahg/fd.hpp"
#include "ahg/operators.hpp"

namespace ahg {

SeedData exact_hyperbolic_seed() {
    SeedData s;
    auto zero = [](const Vec3&) { return SymMat3::zero(); };
    s.charts[0] = {zero, zero};
    s.charts[1] = {zero, zero};
    s.family = SeedFamily::ExactHyperbolic;
    s.identical_charts = true;
    return s;
}

SeedInvariantReport verify_seed_invariants(const SeedData& seed, int samples, unsigned rng_seed) {
    std::mt19937 rng(rng_seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    SeedInvariantReport rep{0, 0, 0, 0};
    for (int s = 0; s < samples; ++s) {
        double rho = 0.01 + 0.6 * u01(rng);
        double t1 = -0.6 + 1.2 * u01(rng);
        double t2 = -0.6 + 1.2 * u01(rng);
        Vec3 p{rho, t1, t2};
        for (const auto& ch : seed.charts) {
            SymMat3 m = ch.metric_error(p);
            SymMat3 mb = ch.mu_bar(p);
            rep.m00_over_rho2 = std::max(rep.m00_over_rho2, std::abs(m(0, 0)) / (rho * rho));
            for (int j = 1; j < 3; ++j)
                rep.m0j_over_rho2 = std::max(rep.m0j_over_rho2, std::abs(m(0, j)) / (rho * rho));
            double sc = rho + t1 * t1 + t2 * t2;
            for (int j = 1; j < 3; ++j)
                for (int k = j; k < 3; ++k)
                    rep.mjk_over_scale = std::max(rep.mjk_over_scale, std::abs(m(j, k)) / sc);
            SymMat3 gb = SymMat3::identity() + m;
            SymMat3 gi = gb.inverse();
            double tr = 0;
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b) tr += gi(a, b) * mb(a, b);
            rep.max_trace_residual = std::max(rep.max_trace_residual, std::abs(tr));
        }
    }
    return rep;
}

void SpliceConfig::validate() const {
    if (!(epsilon > 0) || epsilon >= 0.5)
        throw std::invalid_argument("SpliceConfig: epsilon must lie in (0, 1/2)");
    double ri = r_in_eff(), ro = r_out_eff();
    if (ri < epsilon * (1 - 1e-12))
        throw std::invalid_argument("SpliceConfig: r_in must be >= epsilon");
    if (ro > (1 + 1e-12) / epsilon)
        throw std::invalid_argument("SpliceConfig: r_out must be <= 1/epsilon");
    if (!(ri < 0.5 && ro > 2.0))
        throw std::invalid_argument(
            "SpliceConfig: blend region (1/2, 2) must lie inside (r_in, r_out)");
    if (grid_n < 8) throw std::invalid_argument("SpliceConfig: grid too small");
    double h = 2 * ro / grid_n;
    if (h > 0.5)
        throw std::invalid_argument(
            "SpliceConfig: resolution too coarse to resolve the blend shell 1/2 <= r <= 2");
}

Splice::Splice(const SpliceConfig& config, const SeedData& seeds)
    : cfg_(config), seeds_(seeds), phi_(build_phi()), F_(build_F(config.b_request)),
      chi_(build_chi()) {
    cfg_.validate();
}

ChartGrid Splice::build_neck_domain() const {
    double ro = cfg_.r_out_eff(), ri = cfg_.r_in_eff();
    double h = 2 * ro / cfg_.grid_n;
    double y_min = 2 * h;
    int n_y = int(std::floor((ro - y_min) / h)) + 1;
    int n_x = cfg_.grid_n + 1;
    ChartGrid g(y_min, -ro, -ro, h, n_y, n_x, n_x);
    double lo = cfg_.symmetric ? std::max(ri, 1.0 - 3.0 * h) : ri;
    g.set_mask([lo, ro](const Vec3& p) {
        double r = radius(p);
        return r >= lo && r <= ro;
    });
    return g;
}

Vec3 Splice::bg1(const Vec3& p) const {
    double e = cfg_.epsilon;
    return {e * p[0], e * p[1], e * p[2]};
}

Vec3 Splice::bg2(const Vec3& p) const {
    double e = cfg_.epsilon, r2 = dot(p, p);
    return {e * p[0] / r2, e * p[1] / r2, e * p[2] / r2};
}

double Splice::chi1_arg(const Vec3& p) const {
    // chi_eps argument at the chart-1 image: y^2/2 + eps |x|^2
    return p[0] * p[0] / 2.0 + cfg_.epsilon * (p[1] * p[1] + p[2] * p[2]);
}

SymMat3 Splice::compactified_metric_at(const Vec3& p) const {
    double r = radius(p);
    double w1 = phi_.value(r), w2 = phi_.value(1.0 / r);
    SymMat3 k = SymMat3::zero();
    if (w1 != 0.0) {
        SymMat3 m1 = seeds_.charts[0].metric_error(bg1(p));
        k = k + m1 * w1;
    }
    if (w2 != 0.0) {
        SymMat3 m2 = seeds_.charts[1].metric_error(bg2(p));
        Mat3 Q = reflection_q(p);
        k = k + congruence(Q, m2) * w2;
    }
    return SymMat3::identity() + k;
}

SymMat3 Splice::metric_at(const Vec3& p) const {
    if (!(p[0] > 0)) throw std::domain_error("Splice::metric_at: y must be positive");
    return compactified_metric_at(p) * (1.0 / (p[0] * p[0]));
}

SymMat3 Splice::mu_at(const Vec3& p) const {
    double e = cfg_.epsilon;
    double r2 = dot(p, p);
    double a1 = chi1_arg(p);
    double a2 = a1 / (r2 * r2);
    SymMat3 out = SymMat3::zero();
    if (a1 > 2.0) {
        double c = chi_.value(a1);
        if (c != 0.0) out = out + seeds_.charts[0].mu_bar(bg1(p)) * (c * e / p[0]);
    }
    if (a2 > 2.0) {
        double c = chi_.value(a2);
        if (c != 0.0) {
            SymMat3 m2 = seeds_.charts[1].mu_bar(bg2(p));
            Mat3 Q = reflection_q(p);
            out = out + congruence(Q, m2) * (c * e / (p[0] * r2));
        }
    }
    return out;
}

Vec3 Splice::oracle_bg(int chart, const Vec3& bg) const {
    // chi'(arg) * rho * [ (rho/eps^2) gbar^{a0} + sum_j (2 theta_j/eps) gbar^{aj} ] mu_bar_ab
    double e = cfg_.epsilon;
    double rho = bg[0];
    double arg = rho * rho / (2 * e * e) + (bg[1] * bg[1] + bg[2] * bg[2]) / e;
    Vec3 w{0, 0, 0};
    double dchi = chi_.d1(arg);
    if (dchi == 0.0) return w;
    SymMat3 gb = SymMat3::identity() + seeds_.charts[chart].metric_error(bg);
    SymMat3 gi = gb.inverse();
    SymMat3 mb = seeds_.charts[chart].mu_bar(bg);
    for (int b = 0; b < 3; ++b) {
        double s = 0;
        for (int a = 0; a < 3; ++a) {
            double coeff = gi(a, 0) * rho / (e * e);
            coeff += gi(a, 1) * 2 * bg[1] / e + gi(a, 2) * 2 * bg[2] / e;
            s += coeff * mb(a, b);
        }
        w[b] = dchi * rho * s;
    }
    return w;
}

Vec3 Splice::seed_divergence_bg(int chart, const Vec3& bg) const {
    double step = std::min(seeds_.jet_step, 0.45 * bg[0]);
    MetricJet jet = metric_jet(
        [&](const Vec3& q) {
            return SymMat3::identity() + seeds_.charts[chart].metric_error(q);
        },
        bg, step);
    SymMat3 mb = seeds_.charts[chart].mu_bar(bg);
    std::array<SymMat3, 3> dmb;
    for (int a = 0; a < 3; ++a) {
        Vec3 qp = bg, qm = bg;
        qp[a] += step;
        qm[a] -= step;
        dmb[a] = (seeds_.charts[chart].mu_bar(qp) - seeds_.charts[chart].mu_bar(qm)) *
                 (1.0 / (2 * step));
    }
    return divergence_ah(jet, mb, dmb, bg[0]);
}

Vec3 Splice::divergence_oracle_at(const Vec3& p) const {
    double e = cfg_.epsilon, r2 = dot(p, p);
    double a1 = chi1_arg(p), a2 = a1 / (r2 * r2);
    Vec3 out{0, 0, 0};
    if (a1 > 2.0) {
        Vec3 bg = bg1(p);
        Vec3 w1 = oracle_bg(0, bg);
        double c = chi_.value(a1);
        Vec3 dv = seed_divergence_bg(0, bg);
        for (int a = 0; a < 3; ++a) out[a] += e * (w1[a] + c * dv[a]);
    }
    if (a2 > 2.0) {
        Vec3 bg = bg2(p);
        Vec3 w2 = oracle_bg(1, bg);
        double c = chi_.value(a2);
        Vec3 dv = seed_divergence_bg(1, bg);
        for (int a = 0; a < 3; ++a) w2[a] += c * dv[a];
        Mat3 Q = reflection_q(p);
        Vec3 t = pullback_oneform(Q, w2);
        for (int a = 0; a < 3; ++a) out[a] += (e / r2) * t[a];
    }
    return out;
}

std::shared_ptr<Splice::Fields> Splice::build_fields() const {
    auto f = std::make_shared<Fields>();
    f->grid = build_neck_domain();
    const ChartGrid& g = f->grid;
    f->g = MetricField(g);
    f->k = SymTensorField(g);
    f->rho = ScalarField(g);
    f->mu = SymTensorField(g);
    for (int i = 0; i < g.n_y; ++i)
        for (int j = 0; j < g.n_x1; ++j)
            for (int k2 = 0; k2 < g.n_x2; ++k2) {
                std::size_t n = g.index(i, j, k2);
                f->rho[n] = 1.0;  // positive placeholder on masked nodes
                if (!g.active(n)) continue;
                Vec3 p = g.point(i, j, k2);
                SymMat3 hb = compactified_metric_at(p);
                if (!(hb.min_eigenvalue() > 0))
                    throw std::domain_error(
                        "spliced_metric: not positive definite (epsilon too large for "
                        "these seeds) at node " +
                        std::to_string(n));
                f->k.set_tensor(n, hb - SymMat3::identity());
                f->g.set_tensor(n, hb * (1.0 / (p[0] * p[0])));
                f->rho[n] = rho_at(p);
                f->mu.set_tensor(n, mu_at(p));
            }
    return f;
}

OneFormField Splice::divergence_oracle_field(const ChartGrid& grid) const {
    OneFormField w(grid);
    for (int i = 0; i < grid.n_y; ++i)
        for (int j = 0; j < grid.n_x1; ++j)
            for (int k = 0; k < grid.n_x2; ++k) {
                std::size_t n = grid.index(i, j, k);
                if (!grid.active(n)) continue;
                Vec3 v = divergence_oracle_at(grid.point(i, j, k));
                for (int a = 0; a < 3; ++a) w.at(a, n) = v[a];
            }
    return w;
}

double Splice::divergence_weighted_norm(int n_samples) const {
    // sample the transition shell 2 <= arg <= 3 in background coordinates:
    // rho = eps sqrt(2u) cos(psi), |theta| = sqrt(eps u) sin(psi), arg = u
    double e = cfg_.epsilon;
    double best = 0;
    for (int chart = 0; chart < 2; ++chart)
        for (int iu = 0; iu <= n_samples; ++iu) {
            double u = 2.0 + iu / double(n_samples);
            for (int ip = 1; ip < n_samples; ++ip) {
                double psi = 0.5 * M_PI * ip / double(n_samples);
                double rho = e * std::sqrt(2 * u) * std::cos(psi);
                double th = std::sqrt(e * u) * std::sin(psi);
                if (rho <= 0) continue;
                for (int ia = 0; ia < 2 * n_samples; ++ia) {
                    double alpha = M_PI * ia / double(n_samples);
                    Vec3 bg{rho, th * std::cos(alpha), th * std::sin(alpha)};
                    if (dot(bg, bg) >= 1.0) continue;
                    Vec3 w = oracle_bg(chart, bg);
                    SymMat3 gb = SymMat3::identity() + seeds_.charts[chart].metric_error(bg);
                    SymMat3 gi = gb.inverse();
                    double n2 = 0;
                    for (int a = 0; a < 3; ++a)
                        for (int b = 0; b < 3; ++b) n2 += gi(a, b) * w[a] * w[b];
                    // |w|_g = rho |w|_gbar; weight rho_eps = rho F(|theta_vec|/eps)
                    double r_neck = norm(bg) / e;
                    double weight = rho * F_.value(r_neck);
                    best = std::max(best, rho * std::sqrt(n2) / weight);
                }
            }
        }
    return best;
}

DefiningFunctionReport Splice::defining_function_estimate_check(const Fields& f) const {
    const ChartGrid& g = f.grid;
    double e = cfg_.epsilon;
    DefiningFunctionReport rep{0, 0, cfg_.y_band};
    for (int i = 0; i < g.n_y; ++i) {
        if (g.y_of(i) > cfg_.y_band) continue;
        for (int j = 1; j < g.n_x1 - 1; ++j)
            for (int k = 1; k < g.n_x2 - 1; ++k) {
                std::size_t n = g.index(i, j, k);
                if (!g.active(n)) continue;
                Vec3 p = g.point(i, j, k);
                // finite-difference gradient of the sampled rho_eps
                Vec3 grad;
                bool ok = true;
                for (int a = 0; a < 3 && ok; ++a) {
                    fd::Axis ax = fd::axis(g, a, i, j, k);
                    ok = fd::d1(g, f.rho.data.data(), n, ax, g.h, grad[a]);
                }
                if (!ok) continue;
                SymMat3 gi = compactified_metric_at(p).inverse() * (p[0] * p[0]);
                double g2 = 0;
                for (int a = 0; a < 3; ++a)
                    for (int b = 0; b < 3; ++b) g2 += gi(a, b) * grad[a] * grad[b];
                double rho = f.rho[n];
                double mis = std::abs(g2 / (rho * rho) - 1.0);
                rep.max_mismatch = std::max(rep.max_mismatch, mis);
                rep.C = std::max(rep.C, mis * e / rho);
            }
    }
    return rep;
}

SupportReport Splice::support_report(const Fields& f) const {
    const ChartGrid& g = f.grid;
    bool disjoint = true;
    for (std::size_t n = 0; n < g.size() && disjoint; ++n) {
        if (!g.active(n)) continue;
        bool mu_nonzero = false;
        for (int c = 0; c < 6; ++c) mu_nonzero |= f.mu.at(c, n) != 0.0;
        if (!mu_nonzero) continue;
        std::size_t rem = n;
        int i = int(rem / (std::size_t(g.n_x1) * g.n_x2));
        rem -= std::size_t(i) * g.n_x1 * g.n_x2;
        int j = int(rem / g.n_x2);
        int k = int(rem % g.n_x2);
        double r = radius(g.point(i, j, k));
        double p1 = phi_.value(r);
        if (p1 != 0.0 && p1 != 1.0) disjoint = false;
    }
    // the inscribed cutoff clears the blend shell for every epsilon < 1/2
    return {0.5, disjoint, f.g.min_spd_margin()};
}

double Splice::laplace_rho_margin_at(const Vec3& p) const {
    double r = radius(p);
    double Fv = F_.value(r);
    double num = 3 * r * F_.d1(r) + r * r * F_.d2(r);
    return -1.0 + (p[0] * p[0] / (r * r)) * num / Fv;
}

}  // namespace ahg
