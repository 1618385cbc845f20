#include "daeops/cascade.hpp"

#include <memory>

#include <algorithm>
#include <cmath>

#include "daeops/util.hpp"

namespace daeops::cascade {

using util::require;

namespace {

Vec augment_input(const Vec& u_ext, const Vec& v) {
    Vec u = u_ext;
    u.insert(u.end(), v.begin(), v.end());
    return u;
}

std::vector<Vec> alg_parts(const std::vector<newton::NewtonResult>& locals) {
    std::vector<Vec> z;
    z.reserve(locals.size());
    for (const auto& r : locals) z.push_back(r.alg_part());
    return z;
}

/// dF_i/dv for one component: fast rows from dfdv, algebraic rows from dgdv.
DenseMatrix extended_jacobian_v(const dae::CoupledComponent& comp, const Vec& x,
                                const Vec& z, const Vec& u_aug, std::size_t n_v) {
    const auto& sys = comp.sys;
    const std::size_t nf = sys.n_fast(), nz = sys.n_z;
    DenseMatrix out(nf + nz, n_v);
    if (nf > 0) {
        const DenseMatrix dfdv = comp.dfdv(x, z, sys.mu0, u_aug);
        for (std::size_t k = 0; k < nf; ++k) {
            const std::size_t row = sys.partition.fast_indices[k];
            for (std::size_t j = 0; j < n_v; ++j) out(k, j) = dfdv(row, j);
        }
    }
    if (nz > 0) {
        const DenseMatrix dgdv = comp.dgdv(x, z, sys.mu0, u_aug);
        for (std::size_t i = 0; i < nz; ++i)
            for (std::size_t j = 0; j < n_v; ++j) out(nf + i, j) = dgdv(i, j);
    }
    return out;
}

double measured_rho(const std::vector<double>& hist) {
    // late-stage ratio of consecutive outer residuals, skipping entries at
    // the round-off floor
    double rho = 0.0;
    int used = 0;
    for (std::size_t i = hist.size(); i-- > 1 && used < 3;) {
        if (hist[i] <= 1e-14 * hist[0] || hist[i - 1] <= 0.0) continue;
        rho = std::max(rho, hist[i] / hist[i - 1]);
        ++used;
    }
    return rho;
}

CascadeResult run_cascade_once(const CoupledSystem& cs, const std::vector<Vec>& xs_list,
                               const Vec& v0, const std::vector<Vec>& u_ext_list,
                               const CascadeConfig& cfg, double eta) {
    const std::size_t n_comp = cs.components.size();
    CascadeResult res;
    res.damping_used = eta;
    res.local_results.resize(n_comp);
    Vec v = v0;
    std::vector<Vec> warm(n_comp);

    auto local_round = [&](const Vec& v_now) {
        util::parallel_for(n_comp, cfg.threads, [&](std::size_t i) {
            const auto& comp = cs.components[i];
            const Vec u_aug = augment_input(u_ext_list[i], v_now);
            newton::NewtonConfig lc = cfg.local;
            if (!warm[i].empty())
                lc.warm_start = newton::NewtonConfig::WarmStart::user_supplied;
            res.local_results[i] =
                newton::solve_extended(comp.sys, xs_list[i], warm[i], comp.sys.mu0, u_aug, lc);
        });
        res.total_local_solves += n_comp;
        for (std::size_t i = 0; i < n_comp; ++i) warm[i] = res.local_results[i].y_star;
    };

    if (cs.n_v == 0) {
        local_round(v);
        res.converged = true;
        for (const auto& r : res.local_results) res.converged = res.converged && r.converged;
        return res;
    }

    std::size_t increases = 0;
    for (std::size_t k = 0; k < cfg.outer_max_iters; ++k) {
        local_round(v);
        bool locals_ok = true;
        for (const auto& r : res.local_results) locals_ok = locals_ok && r.converged;
        if (!locals_ok) {
            res.converged = false;
            break;
        }
        const std::vector<Vec> z_list = alg_parts(res.local_results);
        const Vec r_net = cs.g_net(z_list, v);
        const double rnorm = linalg::norm_inf(r_net);
        res.residual_history.push_back(rnorm);
        if (rnorm <= cfg.outer_tol) {
            res.converged = true;
            break;
        }
        const std::size_t h = res.residual_history.size();
        if (h >= 2 && res.residual_history[h - 1] > res.residual_history[h - 2]) {
            ++increases;
        } else {
            increases = 0;
        }
        if (increases >= 3 || rnorm > 1e6 * res.residual_history.front()) {
            res.diverged = true;
            break;
        }

        std::optional<linalg::LuFactorization> jv_lu;
        try {
            jv_lu.emplace(linalg::lu_factor(cs.dgnet_dv(z_list, v)));
        } catch (const linalg::SingularMatrix&) {
            throw SingularJv();
        }
        const Vec dv = jv_lu->solve(r_net);
        for (std::size_t j = 0; j < cs.n_v; ++j) v[j] -= eta * dv[j];
        res.outer_iterations = k + 1;
    }

    res.v_star = v;
    res.estimated_rho = measured_rho(res.residual_history);
    return res;
}

}  // namespace

CascadeResult cascade_solve(const CoupledSystem& cs, const std::vector<Vec>& xs_list,
                            const Vec& v0, const std::vector<Vec>& u_ext_list,
                            const CascadeConfig& cfg) {
    require(xs_list.size() == cs.components.size(), "cascade: xs list size mismatch");
    require(u_ext_list.size() == cs.components.size(), "cascade: u list size mismatch");
    require(v0.size() == cs.n_v, "cascade: v0 size mismatch");
    require(cfg.damping > 0.0 && cfg.damping <= 1.0, "cascade: damping in (0,1]");

    CascadeResult res = run_cascade_once(cs, xs_list, v0, u_ext_list, cfg, cfg.damping);
    if (res.converged || cfg.fallback == CascadeConfig::Fallback::none) return res;

    if (cfg.fallback == CascadeConfig::Fallback::damped) {
        double eta = cfg.damping;
        for (int attempt = 0; attempt < 4 && !res.converged; ++attempt) {
            eta *= 0.5;
            CascadeResult retry = run_cascade_once(cs, xs_list, v0, u_ext_list, cfg, eta);
            retry.total_local_solves += res.total_local_solves;
            retry.diverged = retry.diverged || res.diverged;
            res = std::move(retry);
            res.fallback_used = CascadeResult::FallbackUsed::damped;
        }
        return res;
    }

    // monolithic fallback
    CascadeResult mono = monolithic_solve(cs, xs_list, v0, u_ext_list, cfg);
    mono.total_local_solves += res.total_local_solves;
    mono.diverged = res.diverged || !res.converged;
    mono.residual_history = res.residual_history;
    mono.fallback_used = CascadeResult::FallbackUsed::monolithic;
    return mono;
}

ContractionEstimate estimate_contraction(const CoupledSystem& cs,
                                         const std::vector<Vec>& xs_list, const Vec& v,
                                         const std::vector<Vec>& u_ext_list,
                                         const CascadeConfig& cfg) {
    const std::size_t n_comp = cs.components.size(), n_v = cs.n_v;
    std::vector<newton::NewtonResult> locals(n_comp);
    for (std::size_t i = 0; i < n_comp; ++i) {
        const auto& comp = cs.components[i];
        const Vec u_aug = augment_input(u_ext_list[i], v);
        locals[i] =
            newton::solve_extended(comp.sys, xs_list[i], {}, comp.sys.mu0, u_aug, cfg.local);
        require(locals[i].converged, "estimate_contraction: local solve failed");
    }
    const std::vector<Vec> z_list = alg_parts(locals);

    ContractionEstimate est;
    est.j_v = cs.dgnet_dv(z_list, v);
    est.a = DenseMatrix(n_v, n_v);
    for (std::size_t i = 0; i < n_comp; ++i) {
        const auto& comp = cs.components[i];
        const auto& sys = comp.sys;
        const std::size_t nf = sys.n_fast(), nz = sys.n_z;
        if (nz == 0) continue;
        const Vec u_aug = augment_input(u_ext_list[i], v);
        const Vec x = sys.assemble_state(xs_list[i], locals[i].fast_part());
        const DenseMatrix dF_dv =
            extended_jacobian_v(comp, x, locals[i].alg_part(), u_aug, n_v);
        const DenseMatrix dy_dv = locals[i].jacobian_lu->solve(dF_dv.scaled(-1.0));
        // z rows only
        DenseMatrix dz_dv(nz, n_v);
        for (std::size_t r = 0; r < nz; ++r)
            for (std::size_t c = 0; c < n_v; ++c) dz_dv(r, c) = dy_dv(nf + r, c);
        est.a = est.a + cs.dgnet_dz[i](z_list, v) * dz_dv;
    }
    std::optional<linalg::LuFactorization> jv_lu;
    try {
        jv_lu.emplace(linalg::lu_factor(est.j_v));
    } catch (const linalg::SingularMatrix&) {
        throw SingularJv();
    }
    est.rho = linalg::spectral_norm(jv_lu->solve(est.a));
    return est;
}

std::vector<Vec> cascade_vjp(const CoupledSystem& cs, const std::vector<Vec>& xs_list,
                             const CascadeResult& result,
                             const std::vector<Vec>& cotangent_y_list,
                             const Vec& cotangent_v,
                             const std::vector<Vec>& u_ext_list,
                             const CascadeConfig& cfg) {
    const std::size_t n_comp = cs.components.size(), n_v = cs.n_v;
    require(result.converged, "cascade_vjp: result not converged");
    require(cotangent_y_list.size() == n_comp, "cascade_vjp: cotangent list size");
    const Vec& v = result.v_star;
    const std::vector<Vec> z_list = alg_parts(result.local_results);

    std::vector<Vec> out(n_comp);
    if (n_v == 0) {
        for (std::size_t i = 0; i < n_comp; ++i) {
            out[i] = newton::vjp_through_layer(
                cs.components[i].sys, xs_list[i], result.local_results[i],
                cotangent_y_list[i], cs.components[i].sys.mu0,
                augment_input(u_ext_list[i], v));
        }
        return out;
    }

    // b = w_v + sum_j (dy_j/dv)^T w_j
    Vec b = cotangent_v.empty() ? Vec(n_v, 0.0) : cotangent_v;
    for (std::size_t j = 0; j < n_comp; ++j) {
        const auto& comp = cs.components[j];
        const auto& rj = result.local_results[j];
        if (rj.y_star.empty() || linalg::norm_inf(cotangent_y_list[j]) == 0.0) continue;
        const Vec u_aug = augment_input(u_ext_list[j], v);
        const Vec x = comp.sys.assemble_state(xs_list[j], rj.fast_part());
        const DenseMatrix dF_dv = extended_jacobian_v(comp, x, rj.alg_part(), u_aug, n_v);
        const Vec lambda_j = rj.jacobian_lu->solve_transpose(cotangent_y_list[j]);
        for (std::size_t c = 0; c < n_v; ++c) {
            double s = 0.0;
            for (std::size_t r = 0; r < lambda_j.size(); ++r) s += dF_dv(r, c) * lambda_j[r];
            b[c] -= s;
        }
    }

    // outer adjoint with (Jv + A)^T
    const ContractionEstimate est =
        estimate_contraction(cs, xs_list, v, u_ext_list, cfg);
    Vec lambda;
    try {
        lambda = linalg::lu_factor(est.j_v + est.a).solve_transpose(b);
    } catch (const linalg::SingularMatrix&) {
        throw SingularJv();
    }
    for (auto& l : lambda) l = -l;

    for (std::size_t i = 0; i < n_comp; ++i) {
        const auto& comp = cs.components[i];
        const auto& ri = result.local_results[i];
        const std::size_t nf = ri.n_fast, nz = ri.n_alg;
        Vec cot = cotangent_y_list[i];
        if (cot.empty()) cot.assign(nf + nz, 0.0);
        if (nz > 0) {
            const DenseMatrix dgn_dz = cs.dgnet_dz[i](z_list, v);  // n_v x nz
            for (std::size_t r = 0; r < nz; ++r) {
                double s = 0.0;
                for (std::size_t c = 0; c < n_v; ++c) s += dgn_dz(c, r) * lambda[c];
                cot[nf + r] += s;
            }
        }
        out[i] = newton::vjp_through_layer(comp.sys, xs_list[i], ri, cot, comp.sys.mu0,
                                           augment_input(u_ext_list[i], v));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Monolithic view
// ---------------------------------------------------------------------------

DaeSystem make_monolithic_system(const CoupledSystem& cs) {
    const std::size_t n_comp = cs.components.size(), n_v = cs.n_v;
    struct Offsets {
        std::vector<std::size_t> x, z, mu, u;
        std::size_t nx = 0, nz = 0, nmu = 0, nu = 0;
    };
    auto off = std::make_shared<Offsets>();
    for (const auto& c : cs.components) {
        off->x.push_back(off->nx);
        off->z.push_back(off->nz);
        off->mu.push_back(off->nmu);
        off->u.push_back(off->nu);
        off->nx += c.sys.n_x;
        off->nz += c.sys.n_z;
        off->nmu += c.sys.mu0.size();
        off->nu += c.sys.n_u - n_v;  // external part only
    }
    const std::size_t zv = off->nz;  // v sits after the stacked z

    // component slices + augmented input [u_ext_i, v]
    auto comp_args = [off, n_v, zv](const CoupledSystem& sys_cs, std::size_t i,
                                    const Vec& x, const Vec& z, const Vec& mu,
                                    const Vec& u) {
        const auto& c = sys_cs.components[i];
        const std::size_t nu_ext = c.sys.n_u - n_v;
        Vec xi(x.begin() + off->x[i], x.begin() + off->x[i] + c.sys.n_x);
        Vec zi(z.begin() + off->z[i], z.begin() + off->z[i] + c.sys.n_z);
        Vec mui(mu.begin() + off->mu[i], mu.begin() + off->mu[i] + c.sys.mu0.size());
        Vec ui(u.begin() + off->u[i], u.begin() + off->u[i] + nu_ext);
        Vec vv(z.begin() + zv, z.end());
        ui.insert(ui.end(), vv.begin(), vv.end());
        return std::make_tuple(std::move(xi), std::move(zi), std::move(mui), std::move(ui));
    };

    DaeSystem mono;
    mono.name = "monolithic";
    mono.n_x = off->nx;
    mono.n_z = off->nz + n_v;
    mono.n_u = off->nu;
    for (std::size_t i = 0; i < n_comp; ++i) {
        const auto& part = cs.components[i].sys.partition;
        for (auto s : part.slow_indices) mono.partition.slow_indices.push_back(off->x[i] + s);
        for (auto fidx : part.fast_indices)
            mono.partition.fast_indices.push_back(off->x[i] + fidx);
        for (std::size_t k = 0; k < cs.components[i].sys.mu0.size(); ++k) {
            mono.mu0.push_back(cs.components[i].sys.mu0[k]);
            mono.param_names.push_back("c" + std::to_string(i) + "." +
                                       cs.components[i].sys.param_names[k]);
        }
    }

    // merged piecewise-constant schedule over the union of breakpoints
    {
        std::vector<double> times = {0.0};
        for (const auto& c : cs.components)
            for (double t : c.sys.input.times) times.push_back(t);
        std::sort(times.begin(), times.end());
        times.erase(std::unique(times.begin(), times.end()), times.end());
        dae::InputSchedule sched;
        sched.dim = mono.n_u;
        for (double t : times) {
            Vec u;
            for (const auto& c : cs.components) {
                Vec uc = c.sys.input.at(t);
                const std::size_t nu_ext = c.sys.n_u - n_v;
                uc.resize(nu_ext);
                u.insert(u.end(), uc.begin(), uc.end());
            }
            sched.times.push_back(t);
            sched.values.push_back(u);
        }
        mono.input = sched;
    }

    const CoupledSystem cs_copy = cs;  // callbacks capture by value

    mono.f = [cs_copy, comp_args, off](const Vec& x, const Vec& z, const Vec& mu,
                                       const Vec& u) -> Vec {
        Vec out(off->nx);
        for (std::size_t i = 0; i < cs_copy.components.size(); ++i) {
            auto [xi, zi, mui, ui] = comp_args(cs_copy, i, x, z, mu, u);
            const Vec fi = cs_copy.components[i].sys.f(xi, zi, mui, ui);
            std::copy(fi.begin(), fi.end(), out.begin() + off->x[i]);
        }
        return out;
    };
    mono.g = [cs_copy, comp_args, off, zv](const Vec& x, const Vec& z, const Vec& mu,
                                           const Vec& u) -> Vec {
        Vec out;
        std::vector<Vec> z_list;
        for (std::size_t i = 0; i < cs_copy.components.size(); ++i) {
            auto [xi, zi, mui, ui] = comp_args(cs_copy, i, x, z, mu, u);
            const Vec gi = cs_copy.components[i].sys.g(xi, zi, mui, ui);
            out.insert(out.end(), gi.begin(), gi.end());
            z_list.push_back(zi);
        }
        const Vec v(z.begin() + zv, z.end());
        const Vec gn = cs_copy.g_net(z_list, v);
        out.insert(out.end(), gn.begin(), gn.end());
        return out;
    };
    mono.dfdx = [cs_copy, comp_args, off](const Vec& x, const Vec& z, const Vec& mu,
                                          const Vec& u) {
        DenseMatrix J(off->nx, off->nx);
        for (std::size_t i = 0; i < cs_copy.components.size(); ++i) {
            auto [xi, zi, mui, ui] = comp_args(cs_copy, i, x, z, mu, u);
            const DenseMatrix Ji = cs_copy.components[i].sys.dfdx(xi, zi, mui, ui);
            for (std::size_t r = 0; r < Ji.rows(); ++r)
                for (std::size_t c = 0; c < Ji.cols(); ++c)
                    J(off->x[i] + r, off->x[i] + c) = Ji(r, c);
        }
        return J;
    };
    mono.dfdz = [cs_copy, comp_args, off, n_v, zv](const Vec& x, const Vec& z,
                                                   const Vec& mu, const Vec& u) {
        DenseMatrix J(off->nx, off->nz + n_v);
        for (std::size_t i = 0; i < cs_copy.components.size(); ++i) {
            auto [xi, zi, mui, ui] = comp_args(cs_copy, i, x, z, mu, u);
            const auto& comp = cs_copy.components[i];
            const DenseMatrix Ji = comp.sys.dfdz(xi, zi, mui, ui);
            for (std::size_t r = 0; r < Ji.rows(); ++r)
                for (std::size_t c = 0; c < Ji.cols(); ++c)
                    J(off->x[i] + r, off->z[i] + c) = Ji(r, c);
            const DenseMatrix Jv = comp.dfdv(xi, zi, mui, ui);
            for (std::size_t r = 0; r < Jv.rows(); ++r)
                for (std::size_t c = 0; c < n_v; ++c) J(off->x[i] + r, zv + c) = Jv(r, c);
        }
        return J;
    };
    mono.dgdx = [cs_copy, comp_args, off, n_v](const Vec& x, const Vec& z, const Vec& mu,
                                               const Vec& u) {
        DenseMatrix J(off->nz + n_v, off->nx);
        for (std::size_t i = 0; i < cs_copy.components.size(); ++i) {
            auto [xi, zi, mui, ui] = comp_args(cs_copy, i, x, z, mu, u);
            const DenseMatrix Ji = cs_copy.components[i].sys.dgdx(xi, zi, mui, ui);
            for (std::size_t r = 0; r < Ji.rows(); ++r)
                for (std::size_t c = 0; c < Ji.cols(); ++c)
                    J(off->z[i] + r, off->x[i] + c) = Ji(r, c);
        }
        return J;  // g_net rows do not touch x
    };
    mono.dgdz = [cs_copy, comp_args, off, n_v, zv](const Vec& x, const Vec& z,
                                                   const Vec& mu, const Vec& u) {
        DenseMatrix J(off->nz + n_v, off->nz + n_v);
        std::vector<Vec> z_list;
        for (std::size_t i = 0; i < cs_copy.components.size(); ++i) {
            auto [xi, zi, mui, ui] = comp_args(cs_copy, i, x, z, mu, u);
            const auto& comp = cs_copy.components[i];
            const DenseMatrix Ji = comp.sys.dgdz(xi, zi, mui, ui);
            for (std::size_t r = 0; r < Ji.rows(); ++r)
                for (std::size_t c = 0; c < Ji.cols(); ++c)
                    J(off->z[i] + r, off->z[i] + c) = Ji(r, c);
            const DenseMatrix Jv = comp.dgdv(xi, zi, mui, ui);
            for (std::size_t r = 0; r < Jv.rows(); ++r)
                for (std::size_t c = 0; c < n_v; ++c) J(off->z[i] + r, zv + c) = Jv(r, c);
            z_list.push_back(zi);
        }
        const Vec v(z.begin() + zv, z.end());
        for (std::size_t i = 0; i < cs_copy.components.size(); ++i) {
            const DenseMatrix Gz = cs_copy.dgnet_dz[i](z_list, v);  // n_v x nz_i
            for (std::size_t r = 0; r < n_v; ++r)
                for (std::size_t c = 0; c < Gz.cols(); ++c) J(zv + r, off->z[i] + c) = Gz(r, c);
        }
        const DenseMatrix Gv = cs_copy.dgnet_dv(z_list, v);
        for (std::size_t r = 0; r < n_v; ++r)
            for (std::size_t c = 0; c < n_v; ++c) J(zv + r, zv + c) = Gv(r, c);
        return J;
    };
    return mono;
}

CascadeResult monolithic_solve(const CoupledSystem& cs, const std::vector<Vec>& xs_list,
                               const Vec& v0, const std::vector<Vec>& u_ext_list,
                               const CascadeConfig& cfg) {
    const std::size_t n_comp = cs.components.size();
    DaeSystem mono = make_monolithic_system(cs);

    Vec xs_mono, y0;
    for (std::size_t i = 0; i < n_comp; ++i)
        xs_mono.insert(xs_mono.end(), xs_list[i].begin(), xs_list[i].end());
    // warm start: per-component heuristics at v0, then z-stack + v
    std::vector<Vec> y_guess(n_comp);
    for (std::size_t i = 0; i < n_comp; ++i) {
        const auto& comp = cs.components[i];
        const Vec u_aug = augment_input(u_ext_list[i], v0);
        y_guess[i] = comp.sys.qss_warm_start
                         ? comp.sys.qss_warm_start(xs_list[i], comp.sys.mu0, u_aug)
                         : Vec(comp.sys.n_fast() + comp.sys.n_z, 0.0);
    }
    for (std::size_t i = 0; i < n_comp; ++i) {
        const auto& r = y_guess[i];
        y0.insert(y0.end(), r.begin(), r.begin() + cs.components[i].sys.n_fast());
    }
    for (std::size_t i = 0; i < n_comp; ++i) {
        const auto& r = y_guess[i];
        y0.insert(y0.end(), r.begin() + cs.components[i].sys.n_fast(), r.end());
    }
    y0.insert(y0.end(), v0.begin(), v0.end());

    Vec u_mono;
    for (std::size_t i = 0; i < n_comp; ++i) {
        Vec ue = u_ext_list[i];
        u_mono.insert(u_mono.end(), ue.begin(), ue.end());
    }

    newton::NewtonConfig nc = cfg.local;
    nc.warm_start = newton::NewtonConfig::WarmStart::user_supplied;
    nc.tol_residual = std::min(cfg.local.tol_residual, cfg.outer_tol);
    const auto mono_res = newton::solve_extended(mono, xs_mono, y0, mono.mu0, u_mono, nc);

    CascadeResult res;
    res.converged = mono_res.converged;
    res.total_local_solves = 0;
    // scatter: y = (xf stacked, z stacked, v)
    std::size_t fast_total = 0, z_total = 0;
    for (const auto& c : cs.components) {
        fast_total += c.sys.n_fast();
        z_total += c.sys.n_z;
    }
    res.v_star = Vec(mono_res.y_star.begin() + fast_total + z_total, mono_res.y_star.end());

    std::size_t fo = 0, zo = 0;
    res.local_results.resize(n_comp);
    for (std::size_t i = 0; i < n_comp; ++i) {
        const auto& comp = cs.components[i];
        const std::size_t nf = comp.sys.n_fast(), nz = comp.sys.n_z;
        Vec yi(mono_res.y_star.begin() + fo, mono_res.y_star.begin() + fo + nf);
        yi.insert(yi.end(), mono_res.y_star.begin() + fast_total + zo,
                  mono_res.y_star.begin() + fast_total + zo + nz);
        fo += nf;
        zo += nz;
        // refresh local factorizations at the monolithic solution so the
        // two-level VJP path stays available
        const Vec u_aug = augment_input(u_ext_list[i], res.v_star);
        newton::NewtonConfig lc = cfg.local;
        lc.warm_start = newton::NewtonConfig::WarmStart::user_supplied;
        res.local_results[i] =
            newton::solve_extended(comp.sys, xs_list[i], yi, comp.sys.mu0, u_aug, lc);
        res.total_local_solves += 1;
        res.converged = res.converged && res.local_results[i].converged;
    }
    return res;
}

}  // namespace daeops::cascade
