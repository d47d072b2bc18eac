#include "ahg/solve.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#ifdef AHG_HAVE_EIGEN
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#endif

namespace ahg {

bool SolveDiagnostics::residuals_monotone() const {
    for (std::size_t i = 1; i < residual_history.size(); ++i)
        if (residual_history[i] > residual_history[i - 1] * (1 + 1e-12)) return false;
    return true;
}

std::vector<NodeRole> classify_nodes(const ChartGrid& g, bool reflection) {
    std::vector<NodeRole> role(g.size(), NodeRole::Inactive);
    for (int i = 0; i < g.n_y; ++i)
        for (int j = 0; j < g.n_x1; ++j)
            for (int k = 0; k < g.n_x2; ++k) {
                std::size_t n = g.index(i, j, k);
                if (!g.active(n)) continue;
                Vec3 p = g.point(i, j, k);
                bool on_face = (i == 0 || i == g.n_y - 1 || j == 0 || j == g.n_x1 - 1 ||
                                k == 0 || k == g.n_x2 - 1);
                if (reflection && !on_face && radius(p) < 1.0) {
                    role[n] = NodeRole::Ghost;
                    continue;
                }
                bool near_mask = false;
                if (!g.mask.empty()) {
                    const int di[6] = {1, -1, 0, 0, 0, 0};
                    const int dj[6] = {0, 0, 1, -1, 0, 0};
                    const int dk[6] = {0, 0, 0, 0, 1, -1};
                    for (int t = 0; t < 6 && !near_mask; ++t) {
                        int ii = i + di[t], jj = j + dj[t], kk = k + dk[t];
                        if (ii < 0 || ii >= g.n_y || jj < 0 || jj >= g.n_x1 || kk < 0 ||
                            kk >= g.n_x2)
                            continue;
                        if (!g.active(g.index(ii, jj, kk))) near_mask = true;
                    }
                }
                role[n] = (on_face || near_mask) ? NodeRole::Dirichlet : NodeRole::Unknown;
            }
    return role;
}

namespace {

struct GhostRow {
    std::size_t node;
    Mat3 J;           // pushforward for vector fields; identity block for scalars
    int base[3];      // tricubic stencil base indices at the mirror point
    double w[4][3];   // per-axis weights
};

std::vector<GhostRow> build_ghost_rows(const ChartGrid& g, const std::vector<NodeRole>& role) {
    std::vector<GhostRow> rows;
    auto weights = [](double t0, double h, int count, double q, int& base, double w[4]) {
        double s = (q - t0) / h;
        int cell = std::clamp(int(std::floor(s)), 0, count - 2);
        base = std::clamp(cell - 1, 0, count - 4);
        double u = s - (base + 1);
        w[0] = -u * (u - 1) * (u - 2) / 6.0;
        w[1] = (u + 1) * (u - 1) * (u - 2) / 2.0;
        w[2] = -(u + 1) * u * (u - 2) / 2.0;
        w[3] = (u + 1) * u * (u - 1) / 6.0;
    };
    for (int i = 0; i < g.n_y; ++i)
        for (int j = 0; j < g.n_x1; ++j)
            for (int k = 0; k < g.n_x2; ++k) {
                std::size_t n = g.index(i, j, k);
                if (role[n] != NodeRole::Ghost) continue;
                Vec3 p = g.point(i, j, k);
                Vec3 q = inversion(p);
                GhostRow row;
                row.node = n;
                row.J = inversion_jacobian(q);
                weights(g.y_min, g.h, g.n_y, q[0], row.base[0], row.w[0]);
                weights(g.x1_0, g.h, g.n_x1, q[1], row.base[1], row.w[1]);
                weights(g.x2_0, g.h, g.n_x2, q[2], row.base[2], row.w[2]);
                rows.push_back(row);
            }
    return rows;
}

double ghost_interp(const ChartGrid& g, const GhostRow& row, const double* comp) {
    double s = 0;
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
            for (int c = 0; c < 4; ++c)
                s += row.w[0][a] * row.w[1][b] * row.w[2][c] *
                     comp[g.index(row.base[0] + a, row.base[1] + b, row.base[2] + c)];
    return s;
}

// discrete linear system over the unknown (and ghost) degrees of freedom
template <int NC>
struct System {
    OperatorContext& ctx;
    const ChartGrid& g;
    LinearOperatorKind kind;
    const ScalarField* f = nullptr;
    const std::vector<NodeRole>& role;
    std::vector<std::size_t> unodes;       // nodes carrying equations
    std::vector<std::ptrdiff_t> node2u;    // node -> index in unodes, -1 otherwise
    std::vector<GhostRow> ghosts;
    std::vector<std::ptrdiff_t> ghost_of;  // node -> ghost row index
    FieldT<NC> work, out;

    System(OperatorContext& c, LinearOperatorKind knd, const ScalarField* fc,
           const std::vector<NodeRole>& r)
        : ctx(c), g(c.grid()), kind(knd), f(fc), role(r) {
        node2u.assign(g.size(), -1);
        ghost_of.assign(g.size(), -1);
        for (std::size_t n = 0; n < g.size(); ++n)
            if (role[n] == NodeRole::Unknown || role[n] == NodeRole::Ghost) {
                node2u[n] = std::ptrdiff_t(unodes.size());
                unodes.push_back(n);
            }
        ghosts = build_ghost_rows(g, role);
        for (std::size_t t = 0; t < ghosts.size(); ++t) ghost_of[ghosts[t].node] = t;
        if constexpr (NC == 1) {
            work = FieldT<1>(g, Covariance::Scalar);
            out = FieldT<1>(g, Covariance::Scalar);
        } else {
            work = FieldT<3>(g, Covariance::Vector);
            out = FieldT<3>(g, Covariance::Vector);
        }
    }

    std::size_t size() const { return NC * unodes.size(); }

    void scatter(const double* x) {
        std::fill(work.data.begin(), work.data.end(), 0.0);
        for (std::size_t u = 0; u < unodes.size(); ++u)
            for (int c = 0; c < NC; ++c) work.at(c, unodes[u]) = x[c * unodes.size() + u];
    }

    void apply(const double* x, double* y) {
        scatter(x);
        if constexpr (NC == 1) {
            ScalarField uf;
            static_cast<FieldT<1>&>(uf) = work;
            ScalarField lap = laplace_beltrami(ctx, uf);
            for (std::size_t u = 0; u < unodes.size(); ++u) {
                std::size_t n = unodes[u];
                if (role[n] == NodeRole::Ghost) {
                    const GhostRow& row = ghosts[ghost_of[n]];
                    y[u] = work.at(0, n) - ghost_interp(g, row, work.data.data());
                } else {
                    y[u] = lap[n] - (*f)[n] * work.at(0, n);
                }
            }
        } else {
            VectorField X;
            static_cast<FieldT<3>&>(X) = work;
            VectorField L = vector_laplacian_apply(ctx, X);
            for (std::size_t u = 0; u < unodes.size(); ++u) {
                std::size_t n = unodes[u];
                if (role[n] == NodeRole::Ghost) {
                    const GhostRow& row = ghosts[ghost_of[n]];
                    double interp[3];
                    for (int b = 0; b < 3; ++b)
                        interp[b] = ghost_interp(g, row, work.data.data() + b * g.size());
                    for (int a = 0; a < 3; ++a) {
                        double s = 0;
                        for (int b = 0; b < 3; ++b) s += row.J(a, b) * interp[b];
                        y[a * unodes.size() + u] = work.at(a, n) - s;
                    }
                } else {
                    for (int a = 0; a < 3; ++a) y[a * unodes.size() + u] = L.at(a, n);
                }
            }
        }
    }

    // diagonal estimate for Jacobi preconditioning
    std::vector<double> jacobi() const {
        std::vector<double> d(size(), 1.0);
        for (std::size_t u = 0; u < unodes.size(); ++u) {
            std::size_t n = unodes[u];
            if (role[n] == NodeRole::Ghost) continue;
            SymMat3 gi = ctx.metric_inverse(n);
            double tr = gi(0, 0) + gi(1, 1) + gi(2, 2);
            if constexpr (NC == 1) {
                d[u] = -2.0 * tr / (g.h * g.h) - (*f)[n];
            } else {
                for (int c = 0; c < 3; ++c)
                    d[c * unodes.size() + u] = (tr + gi(c, c) / 3.0) / (4.0 * g.h * g.h);
            }
        }
        for (auto& v : d)
            if (std::abs(v) < 1e-14) v = 1.0;
        return d;
    }
};

double vnorm(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

template <typename Apply>
bool gmres(Apply&& A, const std::vector<double>& diag, const std::vector<double>& b,
           std::vector<double>& x, const SolverOptions& opt, SolveDiagnostics& diag_out) {
    const std::size_t N = b.size();
    const int m = opt.gmres_restart;
    double norm_b = vnorm(b);
    x.assign(N, 0.0);
    if (norm_b == 0.0) {
        diag_out.converged = true;
        diag_out.final_relative_residual = 0;
        return true;
    }
    std::vector<std::vector<double>> V(m + 1, std::vector<double>(N));
    std::vector<double> H(std::size_t(m + 1) * m, 0.0), cs(m), sn(m), gv(m + 1);
    std::vector<double> w(N), z(N), r(N);
    auto precond = [&](const std::vector<double>& in, std::vector<double>& out) {
        for (std::size_t t = 0; t < N; ++t) out[t] = in[t] / diag[t];
    };
    int total = 0;
    double last_outer_res = std::numeric_limits<double>::infinity();
    while (total < opt.max_iterations) {
        A(x.data(), r.data());
        for (std::size_t t = 0; t < N; ++t) r[t] = b[t] - r[t];
        double beta = vnorm(r);
        double relres = beta / norm_b;
        if (diag_out.residual_history.empty()) diag_out.residual_history.push_back(relres);
        if (relres <= opt.tol_linear) {
            diag_out.converged = true;
            diag_out.final_relative_residual = relres;
            diag_out.iterations = total;
            return true;
        }
        if (relres > last_outer_res * 0.9999) {
            // stagnated across a whole restart cycle
            diag_out.final_relative_residual = relres;
            diag_out.iterations = total;
            return false;
        }
        last_outer_res = relres;
        for (std::size_t t = 0; t < N; ++t) V[0][t] = r[t] / beta;
        std::fill(gv.begin(), gv.end(), 0.0);
        gv[0] = beta;
        int j = 0;
        bool inner_done = false;
        for (; j < m && total < opt.max_iterations && !inner_done; ++j) {
            precond(V[j], z);
            A(z.data(), w.data());
            for (int i = 0; i <= j; ++i) {
                double hij = 0;
                for (std::size_t t = 0; t < N; ++t) hij += w[t] * V[i][t];
                H[std::size_t(i) * m + j] = hij;
                for (std::size_t t = 0; t < N; ++t) w[t] -= hij * V[i][t];
            }
            double hnext = vnorm(w);
            H[std::size_t(j + 1) * m + j] = hnext;
            if (hnext > 1e-300)
                for (std::size_t t = 0; t < N; ++t) V[j + 1][t] = w[t] / hnext;
            // apply accumulated rotations, then form the new one
            for (int i = 0; i < j; ++i) {
                double t0 = cs[i] * H[std::size_t(i) * m + j] + sn[i] * H[std::size_t(i + 1) * m + j];
                double t1 = -sn[i] * H[std::size_t(i) * m + j] + cs[i] * H[std::size_t(i + 1) * m + j];
                H[std::size_t(i) * m + j] = t0;
                H[std::size_t(i + 1) * m + j] = t1;
            }
            double denom = std::hypot(H[std::size_t(j) * m + j], H[std::size_t(j + 1) * m + j]);
            if (denom < 1e-300) denom = 1e-300;
            cs[j] = H[std::size_t(j) * m + j] / denom;
            sn[j] = H[std::size_t(j + 1) * m + j] / denom;
            H[std::size_t(j) * m + j] = denom;
            H[std::size_t(j + 1) * m + j] = 0;
            gv[j + 1] = -sn[j] * gv[j];
            gv[j] = cs[j] * gv[j];
            ++total;
            relres = std::abs(gv[j + 1]) / norm_b;
            diag_out.residual_history.push_back(std::min(relres, diag_out.residual_history.back()));
            if (relres <= opt.tol_linear || hnext <= 1e-300) inner_done = true;
        }
        // back-substitute y and update x
        int used = j;
        std::vector<double> yv(used, 0.0);
        for (int i = used - 1; i >= 0; --i) {
            double s = gv[i];
            for (int t = i + 1; t < used; ++t) s -= H[std::size_t(i) * m + t] * yv[t];
            yv[i] = s / H[std::size_t(i) * m + i];
        }
        std::vector<double> corr(N, 0.0);
        for (int i = 0; i < used; ++i)
            for (std::size_t t = 0; t < N; ++t) corr[t] += yv[i] * V[i][t];
        precond(corr, z);
        for (std::size_t t = 0; t < N; ++t) x[t] += z[t];
    }
    A(x.data(), r.data());
    for (std::size_t t = 0; t < N; ++t) r[t] = b[t] - r[t];
    diag_out.final_relative_residual = vnorm(r) / norm_b;
    diag_out.iterations = total;
    diag_out.converged = diag_out.final_relative_residual <= opt.tol_linear;
    return diag_out.converged;
}

#ifdef AHG_HAVE_EIGEN
template <int NC>
bool direct_solve(System<NC>& sys, const std::vector<double>& b, std::vector<double>& x,
                  SolveDiagnostics& d, double tol) {
    if (!sys.ghosts.empty()) return false;
    const std::size_t N = sys.size();
    const std::size_t nu = sys.unodes.size();
    const ChartGrid& g = sys.g;
    // probe classes: stencil reach of the composed operators is <= 3 per axis
    const int S = 7;
    std::vector<Eigen::Triplet<double>> trips;
    std::vector<double> e(N), col(N);
    // node coordinates for reach checks
    std::vector<std::array<int, 3>> coord(nu);
    for (std::size_t u = 0; u < nu; ++u) {
        std::size_t n = sys.unodes[u];
        int i = int(n / (std::size_t(g.n_x1) * g.n_x2));
        std::size_t rem = n - std::size_t(i) * g.n_x1 * g.n_x2;
        coord[u] = {i, int(rem / g.n_x2), int(rem % g.n_x2)};
    }
    for (int c = 0; c < NC; ++c)
        for (int ci = 0; ci < S; ++ci)
            for (int cj = 0; cj < S; ++cj)
                for (int ck = 0; ck < S; ++ck) {
                    std::fill(e.begin(), e.end(), 0.0);
                    bool any = false;
                    for (std::size_t u = 0; u < nu; ++u)
                        if (coord[u][0] % S == ci && coord[u][1] % S == cj &&
                            coord[u][2] % S == ck) {
                            e[c * nu + u] = 1.0;
                            any = true;
                        }
                    if (!any) continue;
                    sys.apply(e.data(), col.data());
                    for (std::size_t v = 0; v < N; ++v) {
                        if (col[v] == 0.0) continue;
                        // match the row to its probe column by proximity
                        std::size_t vu = v % nu;
                        int pi = coord[vu][0] - coord[vu][0] % S + ci;
                        int pj = coord[vu][1] - coord[vu][1] % S + cj;
                        int pk = coord[vu][2] - coord[vu][2] % S + ck;
                        // candidate probe nodes in the class within reach 3
                        bool matched = false;
                        for (int di = -S; di <= S && !matched; di += S)
                            for (int dj = -S; dj <= S && !matched; dj += S)
                                for (int dk = -S; dk <= S && !matched; dk += S) {
                                    int qi = pi + di, qj = pj + dj, qk = pk + dk;
                                    if (std::abs(qi - coord[vu][0]) > 3 ||
                                        std::abs(qj - coord[vu][1]) > 3 ||
                                        std::abs(qk - coord[vu][2]) > 3)
                                        continue;
                                    if (qi < 0 || qi >= g.n_y || qj < 0 || qj >= g.n_x1 ||
                                        qk < 0 || qk >= g.n_x2)
                                        continue;
                                    std::ptrdiff_t qu = sys.node2u[g.index(qi, qj, qk)];
                                    if (qu < 0) continue;
                                    trips.emplace_back(int(v), int(c * nu + qu), col[v]);
                                    matched = true;
                                }
                    }
                }
    Eigen::SparseMatrix<double> A{int(N), int(N)};
    A.setFromTriplets(trips.begin(), trips.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success) return false;
    Eigen::VectorXd bb(N);
    for (std::size_t t = 0; t < N; ++t) bb[int(t)] = b[t];
    Eigen::VectorXd xx = lu.solve(bb);
    if (lu.info() != Eigen::Success) return false;
    x.resize(N);
    for (std::size_t t = 0; t < N; ++t) x[t] = xx[int(t)];
    std::vector<double> r(N);
    sys.apply(x.data(), r.data());
    double nb = vnorm(b);
    double nr = 0;
    for (std::size_t t = 0; t < N; ++t) nr += (r[t] - b[t]) * (r[t] - b[t]);
    d.final_relative_residual = nb > 0 ? std::sqrt(nr) / nb : 0.0;
    d.used_direct = true;
    d.converged = d.final_relative_residual <= std::max(tol, 1e-9);
    return d.converged;
}
#endif

template <int NC, typename RhsField>
void run_solve(System<NC>& sys, const RhsField& rhs, const BoundaryPolicy& policy,
               const SolverOptions& opt, std::vector<double>& x, SolveDiagnostics& d) {
    const std::size_t nu = sys.unodes.size();
    std::vector<double> b(sys.size(), 0.0);
    for (std::size_t u = 0; u < nu; ++u) {
        std::size_t n = sys.unodes[u];
        if (sys.role[n] != NodeRole::Unknown) continue;
        for (int c = 0; c < NC; ++c) b[c * nu + u] = rhs.at(c, n);
    }
    // fold nonzero Dirichlet closures into the right-hand side
    const FieldT<NC>* closure = nullptr;
    if constexpr (NC == 1)
        closure = policy.dirichlet_scalar;
    else
        closure = policy.dirichlet_vector;
    if (closure) {
        FieldT<NC> saved = sys.work;
        std::fill(sys.work.data.begin(), sys.work.data.end(), 0.0);
        for (std::size_t n = 0; n < sys.g.size(); ++n)
            if (sys.role[n] == NodeRole::Dirichlet)
                for (int c = 0; c < NC; ++c) sys.work.at(c, n) = closure->at(c, n);
        // evaluate rows with unknowns zero, closure set: subtract the affine part
        std::vector<double> affine(sys.size(), 0.0);
        if constexpr (NC == 1) {
            ScalarField uf;
            static_cast<FieldT<1>&>(uf) = sys.work;
            ScalarField lap = laplace_beltrami(sys.ctx, uf);
            for (std::size_t u = 0; u < nu; ++u) {
                std::size_t n = sys.unodes[u];
                if (sys.role[n] == NodeRole::Unknown)
                    affine[u] = lap[n] - (*sys.f)[n] * sys.work.at(0, n);
                else
                    affine[u] = -ghost_interp(sys.g, sys.ghosts[sys.ghost_of[n]],
                                              sys.work.data.data());
            }
        } else {
            VectorField X;
            static_cast<FieldT<3>&>(X) = sys.work;
            VectorField L = vector_laplacian_apply(sys.ctx, X);
            for (std::size_t u = 0; u < nu; ++u) {
                std::size_t n = sys.unodes[u];
                if (sys.role[n] == NodeRole::Unknown) {
                    for (int a = 0; a < 3; ++a) affine[a * nu + u] = L.at(a, n);
                } else {
                    const GhostRow& row = sys.ghosts[sys.ghost_of[n]];
                    for (int a = 0; a < 3; ++a) {
                        double s = 0;
                        for (int bb = 0; bb < 3; ++bb)
                            s += row.J(a, bb) *
                                 ghost_interp(sys.g, row, sys.work.data.data() + bb * sys.g.size());
                        affine[a * nu + u] = -s;
                    }
                }
            }
        }
        for (std::size_t t = 0; t < sys.size(); ++t) b[t] -= affine[t];
        sys.work = saved;
    }

    auto apply = [&sys](const double* in, double* out) { sys.apply(in, out); };
    std::vector<double> diag = sys.jacobi();
    bool ok = false;
    if (!opt.prefer_direct) ok = gmres(apply, diag, b, x, opt, d);
#ifdef AHG_HAVE_EIGEN
    if (!ok && sys.size() <= opt.direct_fallback_max_unknowns && sys.ghosts.empty())
        ok = direct_solve(sys, b, x, d, opt.tol_linear);
#endif
    if (!ok)
        throw SolverError("linear solve did not converge (relative residual " +
                              std::to_string(d.final_relative_residual) + ")",
                          d);
    double sup_b = 0, sup_x = 0;
    for (std::size_t t = 0; t < sys.size(); ++t) {
        sup_b = std::max(sup_b, std::abs(b[t]));
        sup_x = std::max(sup_x, std::abs(x[t]));
    }
    d.inverse_norm_estimate = sup_b > 0 ? sup_x / sup_b : 0.0;
}

}  // namespace

ScalarField assemble_and_solve(OperatorContext& ctx, const ScalarField& f,
                               const ScalarField& rhs, const BoundaryPolicy& policy,
                               const SolverOptions& opt, SolveDiagnostics* diag) {
    ctx.cache_christoffels();
    auto roles = classify_nodes(ctx.grid(), policy.reflection_symmetry);
    System<1> sys(ctx, LinearOperatorKind::LinearizedLichnerowicz, &f, roles);
    std::vector<double> x;
    SolveDiagnostics d;
    run_solve(sys, rhs, policy, opt, x, d);
    ScalarField out(ctx.grid());
    if (policy.dirichlet_scalar) out.data = policy.dirichlet_scalar->data;
    for (std::size_t n = 0; n < ctx.grid().size(); ++n)
        if (roles[n] != NodeRole::Dirichlet && !policy.dirichlet_scalar) out[n] = 0;
    for (std::size_t u = 0; u < sys.unodes.size(); ++u) out[sys.unodes[u]] = x[u];
    if (diag) *diag = d;
    return out;
}

VectorField assemble_and_solve(OperatorContext& ctx, const VectorField& rhs,
                               const BoundaryPolicy& policy, const SolverOptions& opt,
                               SolveDiagnostics* diag) {
    ctx.cache_christoffels();
    auto roles = classify_nodes(ctx.grid(), policy.reflection_symmetry);
    System<3> sys(ctx, LinearOperatorKind::VectorLaplacian, nullptr, roles);
    std::vector<double> x;
    SolveDiagnostics d;
    run_solve(sys, rhs, policy, opt, x, d);
    VectorField out(ctx.grid());
    if (policy.dirichlet_vector) out.data = policy.dirichlet_vector->data;
    for (std::size_t u = 0; u < sys.unodes.size(); ++u)
        for (int c = 0; c < 3; ++c) out.at(c, sys.unodes[u]) = x[c * sys.unodes.size() + u];
    if (diag) *diag = d;
    return out;
}

YorkResult york_project(OperatorContext& ctx, const SymTensorField& mu,
                        const BoundaryPolicy& policy, const SolverOptions& opt) {
    ctx.cache_christoffels();
    auto [div_mu, tr_mu] = divergence_and_trace(ctx, mu);
    const ChartGrid& g = ctx.grid();
    VectorField rhs(g);
    for (std::size_t n = 0; n < g.size(); ++n) {
        if (!g.active(n)) continue;
        SymMat3 gi = ctx.metric_inverse(n);
        for (int a = 0; a < 3; ++a) {
            double s = 0;
            for (int b = 0; b < 3; ++b) s += gi(a, b) * div_mu.at(b, n);
            rhs.at(a, n) = s;
        }
    }
    YorkResult out{VectorField(g), SymTensorField(g), OneFormField(g),
                   classify_nodes(g, policy.reflection_symmetry), SolveDiagnostics{}};
    out.X = assemble_and_solve(ctx, rhs, policy, opt, &out.diagnostics);
    SymTensorField DX = conformal_killing_apply(ctx, out.X);
    for (std::size_t n = 0; n < g.size(); ++n)
        for (int c = 0; c < 6; ++c) out.nu.at(c, n) = mu.at(c, n) + DX.at(c, n);
    out.div_nu = divergence_and_trace(ctx, out.nu).first;
    return out;
}

double quadratic_remainder(double nu_sq, double eta) {
    if (!(1.0 + eta > 0)) throw std::domain_error("quadratic_remainder: 1 + eta must be positive");
    double p = 1.0 + eta;
    double p5 = p * p * p * p * p;
    double pm7 = 1.0 / (p5 * p * p);
    return nu_sq * (pm7 - 1.0 + 7.0 * eta) / 8.0 - 0.75 * (p5 - 1.0 - 5.0 * eta);
}

ScalarField quadratic_remainder(const ScalarField& nu_sq, const ScalarField& eta) {
    const ChartGrid& g = *eta.grid;
    ScalarField out(g);
    for (std::size_t n = 0; n < g.size(); ++n)
        if (g.active(n)) out[n] = quadratic_remainder(nu_sq[n], eta[n]);
    return out;
}

LichnerowiczSolveResult lichnerowicz_solve(OperatorContext& ctx, const LichnerowiczTerms& terms,
                                           const BoundaryPolicy& policy, const SolverOptions& opt,
                                           double tol_picard, int max_steps) {
    ctx.cache_christoffels();
    const ChartGrid& g = ctx.grid();
    ScalarField f(g), l_at_one(g);
    double min_f = std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < g.size(); ++n) {
        if (!g.active(n)) continue;
        f[n] = (terms.R[n] + 7.0 * terms.nu_sq[n] + 30.0) / 8.0;
        l_at_one[n] = -terms.R[n] / 8.0 + terms.nu_sq[n] / 8.0 - 0.75;
        min_f = std::min(min_f, f[n]);
    }
    if (!(min_f > 0))
        throw std::domain_error(
            "lichnerowicz_solve: linearization coefficient f must be positive (min f = " +
            std::to_string(min_f) + ")");

    auto roles = classify_nodes(g, policy.reflection_symmetry);
    LichnerowiczSolveResult res{ScalarField(g), PicardTrace{}};
    res.trace.min_f = min_f;
    ScalarField eta(g), rhs(g);
    double prev_update = 0;
    for (int step = 0; step < max_steps; ++step) {
        for (std::size_t n = 0; n < g.size(); ++n)
            if (g.active(n)) rhs[n] = l_at_one[n] + quadratic_remainder(terms.nu_sq[n], eta[n]);
        SolveDiagnostics d;
        ScalarField xi = assemble_and_solve(ctx, f, rhs, policy, opt, &d);
        res.trace.linear.push_back(d);
        double update = 0, sup = 0;
        for (std::size_t n = 0; n < g.size(); ++n) {
            if (!g.active(n)) continue;
            double next = -xi[n];
            update = std::max(update, std::abs(next - eta[n]));
            eta[n] = next;
            sup = std::max(sup, std::abs(next));
        }
        res.trace.update_sup.push_back(update);
        res.trace.iterate_sup.push_back(sup);
        if (step > 0 && prev_update > 0)
            res.trace.contraction.push_back(update / prev_update);
        prev_update = update;
        res.trace.steps = step + 1;
        if (update <= tol_picard) {
            res.trace.converged = true;
            break;
        }
    }
    for (std::size_t n = 0; n < g.size(); ++n) {
        res.psi[n] = 1.0 + eta[n];
        if (g.active(n) && !(res.psi[n] > 0)) {
            SolveDiagnostics d;
            throw SolverError("lichnerowicz_solve: iterate left the positive cone", d);
        }
    }
    if (!res.trace.converged) {
        SolveDiagnostics d;
        if (!res.trace.linear.empty()) d = res.trace.linear.back();
        throw SolverError("lichnerowicz_solve: Picard iteration did not converge", d);
    }
    // discrete operator residual on equation rows
    LichnerowiczResult check = lichnerowicz_apply(ctx, terms, res.psi);
    double worst = 0;
    for (std::size_t n = 0; n < g.size(); ++n)
        if (roles[n] == NodeRole::Unknown) worst = std::max(worst, std::abs(check.value[n]));
    res.trace.final_operator_residual = worst;
    return res;
}

// ---- AC seed factory ----

namespace {
double bump3(const Vec3& p, double width) {
    double t = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]) / (width * width);
    return 1.0 - smoothstep5(t);
}
}  // namespace

AcSeedSpec default_ac_spec(double amp_metric, double amp_mu) {
    AcSeedSpec s;
    s.lambda_error = [amp_metric](const Vec3& p) {
        double w = amp_metric * p[0] * p[0] * bump3(p, 0.75);
        SymMat3 m;
        m.at(0, 0) = 0.5 * w;
        m.at(0, 1) = 0.2 * w;
        m.at(1, 1) = 1.0 * w;
        m.at(1, 2) = 0.3 * w;
        m.at(2, 2) = -0.8 * w;
        return m;
    };
    s.mu_bar_raw = [amp_mu](const Vec3& p) {
        double w = amp_mu * bump3(p, 0.75);
        SymMat3 m;
        m.at(0, 0) = 1.0 * w;
        m.at(0, 1) = 0.5 * w;
        m.at(1, 1) = -0.5 * w;
        m.at(1, 2) = 0.25 * w;
        m.at(2, 2) = -0.5 * w;
        return m;
    };
    return s;
}

namespace {

struct AcChartFields {
    ChartGrid grid;
    ScalarField psi;
    SymTensorField nubar;  // rho * nu
    AcSeedSpec spec;
    double rho_fit;

    double eval_psi(const Vec3& p) const {
        Vec3 q = clamp_to_grid(p);
        if (q[0] >= rho_fit) return interp(psi.data, q);
        Vec3 qf{rho_fit, q[1], q[2]};
        double pf = interp(psi.data, qf);
        double s = q[0] / rho_fit;
        return 1.0 + (pf - 1.0) * s * s;
    }
    SymMat3 eval_nubar(const Vec3& p) const {
        Vec3 q = clamp_to_grid(p);
        SymMat3 out;
        if (q[0] >= rho_fit) {
            for (int c = 0; c < 6; ++c)
                out.v[c] = interp_comp(nubar, c, q);
            return out;
        }
        Vec3 q1{rho_fit, q[1], q[2]};
        Vec3 q2{rho_fit + 2 * grid.h, q[1], q[2]};
        double t = (q[0] - rho_fit) / (2 * grid.h);
        for (int c = 0; c < 6; ++c) {
            double v1 = interp_comp(nubar, c, q1);
            double v2 = interp_comp(nubar, c, q2);
            out.v[c] = v1 + (v2 - v1) * t;
        }
        return out;
    }

  private:
    Vec3 clamp_to_grid(const Vec3& p) const {
        Vec3 q = p;
        q[0] = std::clamp(q[0], grid.y_min, grid.y_max());
        q[1] = std::clamp(q[1], grid.x1_0, grid.x1_0 + (grid.n_x1 - 1) * grid.h);
        q[2] = std::clamp(q[2], grid.x2_0, grid.x2_0 + (grid.n_x2 - 1) * grid.h);
        return q;
    }
    double interp(const std::vector<double>& comp, const Vec3& q) const {
        return interpolate_tricubic(grid, comp, q);
    }
    double interp_comp(const SymTensorField& fld, int c, const Vec3& q) const {
        std::vector<double> comp(fld.data.begin() + c * grid.size(),
                                 fld.data.begin() + (c + 1) * grid.size());
        return interpolate_tricubic(grid, comp, q);
    }
};

SeedChart make_chart(std::shared_ptr<AcChartFields> f) {
    SeedChart ch;
    ch.metric_error = [f](const Vec3& p) {
        double ps = f->eval_psi(p);
        double ps4 = ps * ps * ps * ps;
        SymMat3 lb = SymMat3::identity() + f->spec.lambda_error(p);
        return lb * ps4 - SymMat3::identity();
    };
    ch.mu_bar = [f](const Vec3& p) {
        double ps = f->eval_psi(p);
        SymMat3 W = f->eval_nubar(p) * (1.0 / (ps * ps));
        // exact pointwise trace correction against the output metric
        double ps4 = ps * ps * ps * ps;
        SymMat3 gbar = (SymMat3::identity() + f->spec.lambda_error(p)) * ps4;
        SymMat3 gi = gbar.inverse();
        double tr = 0;
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) tr += gi(a, b) * W(a, b);
        return W - gbar * (tr / 3.0);
    };
    return ch;
}

std::shared_ptr<AcChartFields> solve_ac_chart(const AcSeedSpec& spec, const AcSeedOptions& opt,
                                              double* mom_floor, double* ham_floor) {
    double h = 2.0 / opt.grid_n;
    double rho_min = 2 * h;
    int n_rho = int(std::floor((1.0 - rho_min) / h)) + 1;
    int n_t = opt.grid_n + 1;
    ChartGrid grid(rho_min, -1.0, -1.0, h, n_rho, n_t, n_t);

    SymTensorField hbar(grid);
    for (std::size_t n = 0; n < grid.size(); ++n) {
        int i = int(n / (std::size_t(n_t) * n_t));
        std::size_t rem = n - std::size_t(i) * n_t * n_t;
        Vec3 p = grid.point(i, int(rem / n_t), int(rem % n_t));
        hbar.set_tensor(n, SymMat3::identity() + spec.lambda_error(p));
    }
    OperatorContext ctx = OperatorContext::from_compactified(grid, hbar);
    ctx.cache_christoffels();

    SymTensorField mu(grid);
    for (std::size_t n = 0; n < grid.size(); ++n) {
        int i = int(n / (std::size_t(n_t) * n_t));
        std::size_t rem = n - std::size_t(i) * n_t * n_t;
        Vec3 p = grid.point(i, int(rem / n_t), int(rem % n_t));
        SymMat3 lb = SymMat3::identity() + spec.lambda_error(p);
        SymMat3 li = lb.inverse();
        SymMat3 raw = spec.mu_bar_raw(p);
        double tr = 0;
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) tr += li(a, b) * raw(a, b);
        SymMat3 mb = raw - lb * (tr / 3.0);
        mu.set_tensor(n, mb * (1.0 / p[0]));
    }

    BoundaryPolicy policy;
    YorkResult york = york_project(ctx, mu, policy, opt.solver);

    // Lichnerowicz data: R from small-step differencing of the closed-form
    // compactified metric, |nu|^2 from the grid
    LichnerowiczTerms terms{ScalarField(grid), tensor_norm_squared(ctx, york.nu)};
    auto hcall = [&spec](const Vec3& q) {
        return SymMat3::identity() + spec.lambda_error(q);
    };
    for (std::size_t n = 0; n < grid.size(); ++n) {
        int i = int(n / (std::size_t(n_t) * n_t));
        std::size_t rem = n - std::size_t(i) * n_t * n_t;
        Vec3 p = grid.point(i, int(rem / n_t), int(rem % n_t));
        MetricJet jet = metric_jet(hcall, p, 1e-3);
        terms.R[n] = scalar_curvature_ah(jet, p[0]);
    }
    LichnerowiczSolveResult lich = lichnerowicz_solve(ctx, terms, policy, opt.solver,
                                                      opt.tol_picard);

    auto out = std::make_shared<AcChartFields>(
        AcChartFields{grid, std::move(lich.psi), SymTensorField(grid), spec, rho_min + h});
    for (std::size_t n = 0; n < grid.size(); ++n) {
        int i = int(n / (std::size_t(n_t) * n_t));
        double rho = grid.y_of(i);
        for (int c = 0; c < 6; ++c) out->nubar.at(c, n) = rho * york.nu.at(c, n);
    }

    // measure the seed's own constraint residuals (discretization floor)
    if (mom_floor || ham_floor) {
        MetricField gout(grid);
        SymTensorField Kout(grid);
        for (std::size_t n = 0; n < grid.size(); ++n) {
            int i = int(n / (std::size_t(n_t) * n_t));
            double rho = grid.y_of(i);
            double ps = out->psi[n];
            double ps4 = ps * ps * ps * ps;
            SymMat3 lam = hbar.tensor_at(n) * (1.0 / (rho * rho));
            SymMat3 go = lam * ps4;
            gout.set_tensor(n, go);
            SymMat3 ko = go + york.nu.tensor_at(n) * (1.0 / (ps * ps));
            Kout.set_tensor(n, ko);
        }
        OperatorContext ctx_out(grid, gout, Weighting::Compactified);
        ctx_out.cache_christoffels();
        ConstraintResiduals res = constraint_residuals(ctx_out, Kout);
        auto roles = classify_nodes(grid, false);
        double mom = 0, ham = 0;
        for (std::size_t n = 0; n < grid.size(); ++n) {
            if (roles[n] != NodeRole::Unknown) continue;
            for (int a = 0; a < 3; ++a) mom = std::max(mom, std::abs(res.momentum.at(a, n)));
            ham = std::max(ham, std::abs(res.hamiltonian[n]));
        }
        if (mom_floor) *mom_floor = mom;
        if (ham_floor) *ham_floor = ham;
    }
    return out;
}

}  // namespace

SeedData ac_seed_data(const AcSeedSpec& spec, const AcSeedOptions& opt) {
    double mom = 0, ham = 0;
    auto fields = solve_ac_chart(spec, opt, &mom, &ham);
    SeedData s;
    s.charts[0] = make_chart(fields);
    s.charts[1] = s.charts[0];
    s.family = SeedFamily::AcNumeric;
    s.identical_charts = true;
    s.jet_step = fields->grid.h;
    s.momentum_floor = mom;
    s.hamiltonian_floor = ham;
    return s;
}

SeedData ac_seed_data(const AcSeedSpec& spec1, const AcSeedSpec& spec2, const AcSeedOptions& opt) {
    double mom1 = 0, ham1 = 0, mom2 = 0, ham2 = 0;
    auto f1 = solve_ac_chart(spec1, opt, &mom1, &ham1);
    auto f2 = solve_ac_chart(spec2, opt, &mom2, &ham2);
    SeedData s;
    s.charts[0] = make_chart(f1);
    s.charts[1] = make_chart(f2);
    s.family = SeedFamily::AcNumeric;
    s.identical_charts = false;
    s.jet_step = f1->grid.h;
    s.momentum_floor = std::max(mom1, mom2);
    s.hamiltonian_floor = std::max(ham1, ham2);
    return s;
}

}  // namespace ahg
