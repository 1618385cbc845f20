#include "daeops/integrate.hpp"

#include <algorithm>
#include <cmath>

#include "daeops/util.hpp"

namespace daeops::integrate {

using linalg::DenseMatrix;
using util::require;

namespace {

struct ButcherTableau {
    std::size_t stages;
    double a[3][3];
    double c[3];
    int order;
};

ButcherTableau radau3_tableau() {
    const double s6 = std::sqrt(6.0);
    ButcherTableau t{};
    t.stages = 3;
    t.order = 5;
    t.a[0][0] = (88.0 - 7.0 * s6) / 360.0;
    t.a[0][1] = (296.0 - 169.0 * s6) / 1800.0;
    t.a[0][2] = (-2.0 + 3.0 * s6) / 225.0;
    t.a[1][0] = (296.0 + 169.0 * s6) / 1800.0;
    t.a[1][1] = (88.0 + 7.0 * s6) / 360.0;
    t.a[1][2] = (-2.0 - 3.0 * s6) / 225.0;
    t.a[2][0] = (16.0 - s6) / 36.0;
    t.a[2][1] = (16.0 + s6) / 36.0;
    t.a[2][2] = 1.0 / 9.0;
    t.c[0] = (4.0 - s6) / 10.0;
    t.c[1] = (4.0 + s6) / 10.0;
    t.c[2] = 1.0;
    return t;
}

ButcherTableau trapezoid_tableau() {
    // 2-stage Lobatto IIIA; first stage is explicit (a row of zeros for c=0)
    ButcherTableau t{};
    t.stages = 2;
    t.order = 2;
    t.a[0][0] = 0.0;
    t.a[0][1] = 0.0;
    t.a[1][0] = 0.5;
    t.a[1][1] = 0.5;
    t.c[0] = 0.0;
    t.c[1] = 1.0;
    return t;
}

/// Solves the stage system of one implicit RK step via damped Newton with a
/// frozen Jacobian (refreshed once on stall). Unknowns per stage: (X_i, Z_i).
struct StageSolver {
    const DaeSystem& sys;
    const ButcherTableau& tab;
    double newton_tol;

    bool step(double t, const Vec& x_n, const Vec& z_n, double h, const Vec& u_step,
              Vec& x_out, Vec& z_out) const {
        const std::size_t nx = sys.n_x, nz = sys.n_z, s = tab.stages;
        const std::size_t dim = s * (nx + nz);
        const Vec& mu = sys.mu0;

        Vec U(dim);
        for (std::size_t i = 0; i < s; ++i) {
            for (std::size_t k = 0; k < nx; ++k) U[i * (nx + nz) + k] = x_n[k];
            for (std::size_t k = 0; k < nz; ++k) U[i * (nx + nz) + nx + k] = z_n[k];
        }

        auto stage_views = [&](const Vec& u_vec, std::size_t i) {
            Vec xi(u_vec.begin() + i * (nx + nz), u_vec.begin() + i * (nx + nz) + nx);
            Vec zi(u_vec.begin() + i * (nx + nz) + nx,
                   u_vec.begin() + (i + 1) * (nx + nz));
            return std::make_pair(std::move(xi), std::move(zi));
        };

        auto residual = [&](const Vec& u_vec) {
            std::vector<Vec> fs(s);
            for (std::size_t i = 0; i < s; ++i) {
                auto [xi, zi] = stage_views(u_vec, i);
                fs[i] = sys.f(xi, zi, mu, u_step);
            }
            Vec R(dim);
            for (std::size_t i = 0; i < s; ++i) {
                auto [xi, zi] = stage_views(u_vec, i);
                for (std::size_t k = 0; k < nx; ++k) {
                    double acc = xi[k] - x_n[k];
                    for (std::size_t j = 0; j < s; ++j) acc -= h * tab.a[i][j] * fs[j][k];
                    R[i * (nx + nz) + k] = acc;
                }
                if (nz > 0) {
                    const Vec gi = sys.g(xi, zi, mu, u_step);
                    for (std::size_t k = 0; k < nz; ++k) R[i * (nx + nz) + nx + k] = gi[k];
                }
            }
            return R;
        };

        auto jacobian = [&](const Vec& u_vec) {
            DenseMatrix J(dim, dim);
            std::vector<DenseMatrix> dfdx_s(s), dfdz_s(s);
            for (std::size_t j = 0; j < s; ++j) {
                auto [xj, zj] = stage_views(u_vec, j);
                dfdx_s[j] = sys.dfdx(xj, zj, mu, u_step);
                if (nz > 0) dfdz_s[j] = sys.dfdz(xj, zj, mu, u_step);
            }
            for (std::size_t i = 0; i < s; ++i) {
                for (std::size_t j = 0; j < s; ++j) {
                    for (std::size_t r = 0; r < nx; ++r)
                        for (std::size_t cidx = 0; cidx < nx; ++cidx)
                            J(i * (nx + nz) + r, j * (nx + nz) + cidx) =
                                (i == j && r == cidx ? 1.0 : 0.0) -
                                h * tab.a[i][j] * dfdx_s[j](r, cidx);
                    if (nz > 0) {
                        for (std::size_t r = 0; r < nx; ++r)
                            for (std::size_t cidx = 0; cidx < nz; ++cidx)
                                J(i * (nx + nz) + r, j * (nx + nz) + nx + cidx) =
                                    -h * tab.a[i][j] * dfdz_s[j](r, cidx);
                    }
                }
                if (nz > 0) {
                    auto [xi, zi] = stage_views(u_vec, i);
                    const DenseMatrix dgdx = sys.dgdx(xi, zi, mu, u_step);
                    const DenseMatrix dgdz = sys.dgdz(xi, zi, mu, u_step);
                    for (std::size_t r = 0; r < nz; ++r) {
                        for (std::size_t cidx = 0; cidx < nx; ++cidx)
                            J(i * (nx + nz) + nx + r, i * (nx + nz) + cidx) = dgdx(r, cidx);
                        for (std::size_t cidx = 0; cidx < nz; ++cidx)
                            J(i * (nx + nz) + nx + r, i * (nx + nz) + nx + cidx) =
                                dgdz(r, cidx);
                    }
                }
            }
            return J;
        };

        Vec R = residual(U);
        double rnorm = linalg::norm_inf(R);
        for (int refresh = 0; refresh < 2; ++refresh) {
            std::optional<linalg::LuFactorization> lu;
            try {
                lu.emplace(linalg::lu_factor(jacobian(U)));
            } catch (const linalg::SingularMatrix&) {
                return false;
            }
            bool stalled = false;
            for (int it = 0; it < 25 && rnorm > newton_tol; ++it) {
                Vec rhs(R);
                for (auto& v : rhs) v = -v;
                const Vec dU = lu->solve(rhs);
                double step_len = 1.0;
                bool accepted = false;
                for (int ls = 0; ls < 7; ++ls) {
                    Vec U_try = U;
                    for (std::size_t k = 0; k < dim; ++k) U_try[k] += step_len * dU[k];
                    Vec R_try = residual(U_try);
                    const double rn = linalg::norm_inf(R_try);
                    if (rn < rnorm) {
                        U = std::move(U_try);
                        R = std::move(R_try);
                        rnorm = rn;
                        accepted = true;
                        break;
                    }
                    step_len *= 0.5;
                }
                if (!accepted) {
                    stalled = true;
                    break;
                }
            }
            if (rnorm <= newton_tol) break;
            if (!stalled && rnorm > newton_tol) continue;  // iterate budget: refresh
        }
        if (rnorm > newton_tol) return false;

        // stiffly accurate for radau; trapezoid's last stage is also c = 1
        auto [xs_last, zs_last] = stage_views(U, s - 1);
        x_out = xs_last;
        z_out = zs_last;
        return true;
    }
};

}  // namespace

std::pair<Vec, Vec> project_consistent(const DaeSystem& sys, const Vec& x0_guess,
                                       bool qss_fast, const newton::NewtonConfig& cfg) {
    const Vec& mu = sys.mu0;
    const Vec u = sys.input.at(0.0);
    if (qss_fast && sys.n_fast() > 0) {
        const Vec xs = sys.slow_of(x0_guess);
        auto r = newton::solve_extended(sys, xs, {}, mu, u, cfg);
        require(r.converged, "project_consistent: extended solve failed");
        return {sys.assemble_state(xs, r.fast_part()), r.alg_part()};
    }
    if (sys.n_z == 0) return {x0_guess, {}};
    const Vec z0 = sys.z_closed_form ? sys.z_closed_form(x0_guess, mu, u) : Vec(sys.n_z, 0.0);
    auto r = newton::solve_algebraic(sys, x0_guess, z0, mu, u, cfg);
    require(r.converged, "project_consistent: algebraic solve failed");
    return {x0_guess, r.y_star};
}

std::vector<double> log_time_grid(double t0, double t1, double windows_per_decade) {
    require(t0 > 0.0 && t1 > t0, "log_time_grid: need 0 < t0 < t1");
    require(windows_per_decade > 0.0, "log_time_grid: windows_per_decade > 0");
    const double decades = std::log10(t1 / t0);
    const auto n = static_cast<std::size_t>(std::llround(decades * windows_per_decade));
    require(n >= 1, "log_time_grid: span shorter than one window");
    std::vector<double> grid(n + 1);
    for (std::size_t k = 0; k <= n; ++k)
        grid[k] = t0 * std::pow(10.0, double(k) / windows_per_decade);
    return grid;
}

Trajectory integrate(const DaeSystem& sys, const Vec& x0_in, const Vec& z0_in,
                     const IntegratorConfig& cfg) {
    require(cfg.t1 > cfg.t0, "integrate: t1 must exceed t0");
    const ButcherTableau tab =
        cfg.method == IntegratorConfig::Method::radau3 ? radau3_tableau()
                                                       : trapezoid_tableau();
    Vec x = x0_in, z = z0_in;
    if (z.empty() && sys.n_z > 0) z.assign(sys.n_z, 0.0);
    if (cfg.project_initial) std::tie(x, z) = project_consistent(sys, x, false);

    const Vec u0 = sys.input.at(cfg.t0);
    if (sys.n_z > 0) {
        const double g0 = linalg::norm_inf(sys.g(x, z, sys.mu0, u0));
        if (g0 > 1e-8) throw InconsistentIc(g0);
    }

    const double newton_tol =
        cfg.stage_newton_tol > 0.0 ? cfg.stage_newton_tol
                                   : std::max(1e-13, 1e-3 * cfg.atol);
    StageSolver solver{sys, tab, newton_tol};

    // times the march must land on exactly: input breakpoints + outputs
    std::vector<double> marks;
    for (double bt : sys.input.times)
        if (bt > cfg.t0 && bt < cfg.t1) marks.push_back(bt);
    for (double ot : cfg.dense_output_times)
        if (ot > cfg.t0 && ot < cfg.t1) marks.push_back(ot);
    marks.push_back(cfg.t1);
    std::sort(marks.begin(), marks.end());
    marks.erase(std::unique(marks.begin(), marks.end()), marks.end());

    std::vector<double> store(cfg.dense_output_times);
    store.push_back(cfg.t0);
    store.push_back(cfg.t1);
    std::sort(store.begin(), store.end());
    store.erase(std::unique(store.begin(), store.end()), store.end());

    Trajectory tr;
    tr.system_name = sys.name;
    tr.mu = sys.mu0;
    double max_g = 0.0;
    std::size_t n_steps = 0, n_rejected = 0;

    auto record = [&](double t, const Vec& xs, const Vec& zs) {
        tr.times.push_back(t);
        tr.x.push_back(xs);
        tr.z.push_back(zs);
        if (sys.n_z > 0)
            max_g = std::max(max_g,
                             linalg::norm_inf(sys.g(xs, zs, sys.mu0, sys.input.at(t))));
    };

    double t = cfg.t0;
    std::size_t store_idx = 0;
    while (store_idx < store.size() && store[store_idx] <= t) {
        record(t, x, z);
        ++store_idx;
    }

    double h;
    if (cfg.fixed_step > 0.0) {
        h = cfg.fixed_step;
    } else if (cfg.initial_step > 0.0) {
        h = cfg.initial_step;
    } else {
        h = 1e-4 * (cfg.t1 - cfg.t0);
        const Vec f0 = sys.f(x, z, sys.mu0, u0);
        const double fscale = linalg::norm_inf(f0);
        if (fscale > 0.0)
            h = std::min(h, 0.01 * (1.0 + linalg::norm_inf(x)) / fscale);
    }

    std::size_t mark_idx = 0;
    while (t < cfg.t1 - 1e-14 * std::max(1.0, std::abs(cfg.t1))) {
        if (++n_steps > cfg.max_steps) throw StepFailure(t);
        while (mark_idx < marks.size() && marks[mark_idx] <= t + 1e-14 * std::abs(t))
            ++mark_idx;
        double h_try = h;
        bool clamped = false;
        if (mark_idx < marks.size() && t + h_try >= marks[mark_idx]) {
            h_try = marks[mark_idx] - t;
            clamped = true;
        }

        const Vec u_step = sys.input.at(t + 0.5 * h_try);
        Vec x_full, z_full;
        if (!solver.step(t, x, z, h_try, u_step, x_full, z_full)) {
            h = 0.5 * h_try;
            ++n_rejected;
            if (h < 1e-14 * std::max(std::abs(t), 1.0)) throw StepFailure(t);
            continue;
        }

        bool accept = true;
        Vec x_next = x_full, z_next = z_full;
        if (cfg.fixed_step <= 0.0) {
            // step-doubling error estimate
            Vec xm, zm, x2, z2;
            const bool ok = solver.step(t, x, z, 0.5 * h_try, u_step, xm, zm) &&
                            solver.step(t + 0.5 * h_try, xm, zm, 0.5 * h_try, u_step, x2, z2);
            if (!ok) {
                h = 0.5 * h_try;
                ++n_rejected;
                continue;
            }
            const double denom_pow = std::pow(2.0, double(tab.order)) - 1.0;
            double err_norm = 0.0;
            for (std::size_t k = 0; k < sys.n_x; ++k) {
                const double e = std::abs(x_full[k] - x2[k]) / denom_pow;
                const double sc =
                    cfg.atol + cfg.rtol * std::max(std::abs(x[k]), std::abs(x2[k]));
                err_norm = std::max(err_norm, e / sc);
            }
            accept = err_norm <= 1.0;
            const double expo = 1.0 / double(tab.order + 1);
            double factor = 0.9 * std::pow(std::max(err_norm, 1e-10), -expo);
            factor = std::clamp(factor, 0.2, 5.0);
            if (accept) {
                x_next = x2;
                z_next = z2;
                const double h_natural = h;
                h = h_try * factor;
                if (clamped) h = std::max(h, h_natural);
            } else {
                ++n_rejected;
                h = h_try * std::min(factor, 0.5);
                if (h < 1e-14 * std::max(std::abs(t), 1.0)) throw StepFailure(t);
                continue;
            }
        }

        t = clamped ? marks[mark_idx] : t + h_try;
        x = x_next;
        z = z_next;
        while (store_idx < store.size() &&
               store[store_idx] <= t + 1e-12 * std::max(std::abs(t), 1.0)) {
            record(t, x, z);
            ++store_idx;
        }
        if (cfg.store_all_steps &&
            (tr.times.empty() || tr.times.back() < t)) {
            record(t, x, z);
        }
    }

    tr.stats["steps"] = double(n_steps);
    tr.stats["rejected"] = double(n_rejected);
    tr.stats["max_g_residual"] = max_g;
    return tr;
}

}  // namespace daeops::integrate
