#include "daeops/newton.hpp"

#include <cmath>

#include "daeops/util.hpp"

namespace daeops::newton {

using util::require;

namespace {

Vec extended_residual(const DaeSystem& sys, const Vec& xs, const Vec& y, const Vec& mu,
                      const Vec& u) {
    const std::size_t nf = sys.n_fast();
    const Vec xf(y.begin(), y.begin() + nf);
    const Vec z(y.begin() + nf, y.end());
    const Vec x = sys.assemble_state(xs, xf);
    Vec F = sys.f_fast(x, z, mu, u);
    const Vec g = sys.g(x, z, mu, u);
    F.insert(F.end(), g.begin(), g.end());
    return F;
}

SchurDeterminants schur_dets_at(const DaeSystem& sys, const Vec& x, const Vec& z,
                                const Vec& mu, const Vec& u) {
    SchurDeterminants d;
    const std::size_t nf = sys.n_fast(), nz = sys.n_z;
    if (nz > 0) {
        try {
            d.det_jz = linalg::lu_factor(sys.d_g_dz(x, z, mu, u)).determinant();
        } catch (const linalg::SingularMatrix&) {
            d.det_jz = 0.0;
        }
    }
    if (nf > 0) {
        DenseMatrix S = sys.d_ffast_dxf(x, z, mu, u);
        if (nz > 0 && d.det_jz != 0.0) {
            const DenseMatrix B = sys.d_ffast_dz(x, z, mu, u);
            const DenseMatrix C = sys.d_g_dxf(x, z, mu, u);
            S = S - B * linalg::lu_factor(sys.d_g_dz(x, z, mu, u)).solve(C);
        }
        try {
            d.det_schur = linalg::lu_factor(S).determinant();
        } catch (const linalg::SingularMatrix&) {
            d.det_schur = 0.0;
        }
    }
    if (nf + nz > 0) {
        try {
            d.det_extended =
                linalg::lu_factor(sys.extended_jacobian(x, z, mu, u)).determinant();
        } catch (const linalg::SingularMatrix&) {
            d.det_extended = 0.0;
        }
    }
    return d;
}

}  // namespace

SchurDeterminants schur_determinants(const DaeSystem& sys, const Vec& x, const Vec& z,
                                     const Vec& mu, const Vec& u) {
    return schur_dets_at(sys, x, z, mu, u);
}

NewtonResult solve_extended(const DaeSystem& sys, const Vec& xs, const Vec& y0,
                            const Vec& mu, const Vec& u, const NewtonConfig& cfg) {
    const std::size_t nf = sys.n_fast(), nz = sys.n_z;
    require(xs.size() == sys.n_slow(), "solve_extended: wrong slow-state size");

    Vec y;
    if (cfg.warm_start == NewtonConfig::WarmStart::heuristic && sys.qss_warm_start) {
        y = sys.qss_warm_start(xs, mu, u);
    } else if (!y0.empty()) {
        require(y0.size() == nf + nz, "solve_extended: wrong warm-start size");
        y = y0;
    } else {
        y.assign(nf + nz, 0.0);
    }

    NewtonResult res;
    res.n_fast = nf;
    res.n_alg = nz;

    Vec F = extended_residual(sys, xs, y, mu, u);
    double fnorm = linalg::norm_inf(F);
    std::size_t iters = 0;

    while (fnorm > cfg.tol_residual && iters < cfg.max_iters) {
        const Vec xf(y.begin(), y.begin() + nf);
        const Vec z(y.begin() + nf, y.end());
        const Vec x = sys.assemble_state(xs, xf);
        std::optional<linalg::LuFactorization> lu;
        try {
            lu.emplace(linalg::lu_factor(sys.extended_jacobian(x, z, mu, u)));
        } catch (const linalg::SingularMatrix&) {
            const auto d = schur_dets_at(sys, x, z, mu, u);
            throw SingularExtendedJacobian(d.det_jz, d.det_schur);
        }
        Vec rhs(F);
        for (auto& v : rhs) v = -v;
        const Vec dy = lu->solve(rhs);

        double step = 1.0;
        bool accepted = false;
        while (step >= cfg.min_step) {
            Vec y_try = y;
            for (std::size_t i = 0; i < y.size(); ++i) y_try[i] += step * dy[i];
            Vec F_try = extended_residual(sys, xs, y_try, mu, u);
            const double fnorm_try = linalg::norm_inf(F_try);
            if (fnorm_try < fnorm) {
                y = std::move(y_try);
                F = std::move(F_try);
                fnorm = fnorm_try;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        ++iters;
        if (!accepted) break;  // stalled at the line-search floor
    }

    res.y_star = y;
    res.residual_norm = fnorm;
    res.iterations = iters;
    res.converged = fnorm <= cfg.tol_residual;
    if (nf + nz > 0) {
        const Vec xf(y.begin(), y.begin() + nf);
        const Vec z(y.begin() + nf, y.end());
        const Vec x = sys.assemble_state(xs, xf);
        try {
            res.jacobian_lu.emplace(linalg::lu_factor(sys.extended_jacobian(x, z, mu, u)));
        } catch (const linalg::SingularMatrix&) {
            res.jacobian_lu.reset();
            res.converged = false;
        }
    }
    return res;
}

NewtonResult solve_algebraic(const DaeSystem& sys, const Vec& x_full, const Vec& z0,
                             const Vec& mu, const Vec& u, const NewtonConfig& cfg) {
    const std::size_t nz = sys.n_z;
    require(x_full.size() == sys.n_x, "solve_algebraic: wrong state size");

    Vec z = z0.empty() ? Vec(nz, 0.0) : z0;
    require(z.size() == nz, "solve_algebraic: wrong z0 size");

    NewtonResult res;
    res.n_fast = 0;
    res.n_alg = nz;

    Vec G = sys.g(x_full, z, mu, u);
    double gnorm = linalg::norm_inf(G);
    std::size_t iters = 0;

    while (gnorm > cfg.tol_residual && iters < cfg.max_iters) {
        std::optional<linalg::LuFactorization> lu;
        try {
            lu.emplace(linalg::lu_factor(sys.dgdz(x_full, z, mu, u)));
        } catch (const linalg::SingularMatrix&) {
            throw SingularJacobian();
        }
        Vec rhs(G);
        for (auto& v : rhs) v = -v;
        const Vec dz = lu->solve(rhs);

        double step = 1.0;
        bool accepted = false;
        while (step >= cfg.min_step) {
            Vec z_try = z;
            for (std::size_t i = 0; i < z.size(); ++i) z_try[i] += step * dz[i];
            Vec G_try = sys.g(x_full, z_try, mu, u);
            const double gnorm_try = linalg::norm_inf(G_try);
            if (gnorm_try < gnorm) {
                z = std::move(z_try);
                G = std::move(G_try);
                gnorm = gnorm_try;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        ++iters;
        if (!accepted) break;
    }

    res.y_star = z;
    res.residual_norm = gnorm;
    res.iterations = iters;
    res.converged = gnorm <= cfg.tol_residual;
    if (nz > 0) {
        try {
            res.jacobian_lu.emplace(linalg::lu_factor(sys.dgdz(x_full, z, mu, u)));
        } catch (const linalg::SingularMatrix&) {
            res.jacobian_lu.reset();
            res.converged = false;
        }
    }
    return res;
}

IftSensitivity ift_sensitivity(const DaeSystem& sys, const Vec& xs,
                               const NewtonResult& result, const Vec& mu, const Vec& u) {
    require(result.converged, "ift_sensitivity: solve did not converge");
    require(result.jacobian_lu.has_value(), "ift_sensitivity: no factorization");
    const std::size_t nf = result.n_fast;
    const Vec xf(result.y_star.begin(), result.y_star.begin() + nf);
    const Vec z(result.y_star.begin() + nf, result.y_star.end());
    const Vec x = sys.assemble_state(xs, xf);
    const DenseMatrix dFdxs = sys.extended_jacobian_xs(x, z, mu, u);
    IftSensitivity s;
    s.d_ystar_d_xs = result.jacobian_lu->solve(dFdxs.scaled(-1.0));
    return s;
}

DenseMatrix ift_sensitivity_standard(const DaeSystem& sys, const Vec& x_full,
                                     const NewtonResult& result, const Vec& mu,
                                     const Vec& u) {
    require(result.converged, "ift_sensitivity_standard: solve did not converge");
    require(result.jacobian_lu.has_value(), "ift_sensitivity_standard: no factorization");
    const Vec& z = result.y_star;
    const DenseMatrix dgdx = sys.dgdx(x_full, z, mu, u);
    return result.jacobian_lu->solve(dgdx.scaled(-1.0));
}

Vec vjp_through_layer(const DaeSystem& sys, const Vec& xs, const NewtonResult& result,
                      const Vec& cotangent_on_ystar, const Vec& mu, const Vec& u) {
    require(result.converged, "vjp_through_layer: solve did not converge");
    require(result.jacobian_lu.has_value(), "vjp_through_layer: no factorization");
    require(cotangent_on_ystar.size() == result.y_star.size(),
            "vjp_through_layer: cotangent size mismatch");
    const std::size_t nf = result.n_fast;
    const Vec xf(result.y_star.begin(), result.y_star.begin() + nf);
    const Vec z(result.y_star.begin() + nf, result.y_star.end());
    const Vec x = sys.assemble_state(xs, xf);

    const Vec lambda = result.jacobian_lu->solve_transpose(cotangent_on_ystar);
    const DenseMatrix dFdxs = sys.extended_jacobian_xs(x, z, mu, u);
    Vec out(xs.size(), 0.0);
    for (std::size_t j = 0; j < out.size(); ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < lambda.size(); ++i) s += dFdxs(i, j) * lambda[i];
        out[j] = -s;
    }
    return out;
}

Vec vjp_through_layer_standard(const DaeSystem& sys, const Vec& x_full,
                               const NewtonResult& result, const Vec& cotangent_on_z,
                               const Vec& mu, const Vec& u) {
    require(result.converged, "vjp standard: solve did not converge");
    require(result.jacobian_lu.has_value(), "vjp standard: no factorization");
    const Vec& z = result.y_star;
    const Vec lambda = result.jacobian_lu->solve_transpose(cotangent_on_z);
    const DenseMatrix dgdx = sys.dgdx(x_full, z, mu, u);
    Vec out(x_full.size(), 0.0);
    for (std::size_t j = 0; j < out.size(); ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < lambda.size(); ++i) s += dgdx(i, j) * lambda[i];
        out[j] = -s;
    }
    return out;
}

ContaminationReport contamination_probe(const DaeSystem& sys, const Vec& x_true,
                                        const Vec& mu, const Vec& u, double eps_s,
                                        double eps_f, const NewtonConfig& cfg) {
    ContaminationReport rep;
    const std::size_t ns = sys.n_slow(), nf = sys.n_fast(), nz = sys.n_z;

    // consistent algebraic state at the truth
    Vec z_true(nz, 0.0);
    if (nz > 0) {
        const Vec z0 = sys.z_closed_form ? sys.z_closed_form(x_true, mu, u) : Vec(nz, 0.0);
        auto r = solve_algebraic(sys, x_true, z0, mu, u, cfg);
        require(r.converged, "contamination_probe: truth g-solve failed");
        z_true = r.y_star;
    }
    const Vec fs_true = sys.f_slow(x_true, z_true, mu, u);

    // Eq.-10 style coupling estimate at the truth
    const DenseMatrix dfs_dxf = sys.d_fslow_dxf(x_true, z_true, mu, u);
    rep.L_kappa_est = linalg::spectral_norm(dfs_dxf);
    if (nz > 0 && nf > 0) {
        const DenseMatrix dfs_dz = sys.d_fslow_dz(x_true, z_true, mu, u);
        const DenseMatrix jzinv_c = linalg::lu_factor(sys.d_g_dz(x_true, z_true, mu, u))
                                        .solve(sys.d_g_dxf(x_true, z_true, mu, u));
        rep.L_kappa_est += linalg::spectral_norm(dfs_dz) * linalg::spectral_norm(jzinv_c);
    }

    // slow-slope estimate: the larger of the standard-path slope (x_f held,
    // z responding through g) and the extended-path manifold slope
    const Vec xs_true = sys.slow_of(x_true);
    {
        DenseMatrix slope_std = sys.d_fslow_dxs(x_true, z_true, mu, u);
        if (nz > 0) {
            const DenseMatrix dz_dx = linalg::lu_factor(sys.d_g_dz(x_true, z_true, mu, u))
                                          .solve(sys.d_g_dxs(x_true, z_true, mu, u))
                                          .scaled(-1.0);
            slope_std = slope_std + sys.d_fslow_dz(x_true, z_true, mu, u) * dz_dx;
        }
        double l_std = linalg::spectral_norm(slope_std);

        double l_ext = l_std;
        if (nf + nz > 0) {
            auto rext = solve_extended(sys, xs_true, {}, mu, u, cfg);
            if (rext.converged) {
                const auto sens = ift_sensitivity(sys, xs_true, rext, mu, u);
                DenseMatrix dfs_dy(ns, nf + nz);
                const DenseMatrix a = sys.d_fslow_dxf(x_true, z_true, mu, u);
                const DenseMatrix b = sys.d_fslow_dz(x_true, z_true, mu, u);
                for (std::size_t i = 0; i < ns; ++i) {
                    for (std::size_t j = 0; j < nf; ++j) dfs_dy(i, j) = a(i, j);
                    for (std::size_t j = 0; j < nz; ++j) dfs_dy(i, nf + j) = b(i, j);
                }
                const DenseMatrix red =
                    sys.d_fslow_dxs(x_true, z_true, mu, u) + dfs_dy * sens.d_ystar_d_xs;
                l_ext = linalg::spectral_norm(red);
            }
        }
        rep.L_s_est = std::max(l_std, l_ext);
    }

    // perturbation directions: normalized all-ones
    Vec ds(ns, ns > 0 ? 1.0 / std::sqrt(double(ns)) : 0.0);
    Vec df(nf, nf > 0 ? 1.0 / std::sqrt(double(nf)) : 0.0);

    Vec xs_hat = xs_true;
    for (std::size_t i = 0; i < ns; ++i) xs_hat[i] += eps_s * ds[i];

    // standard mode: both slow and fast predictions are perturbed, g re-solved
    {
        Vec xf_hat = sys.fast_of(x_true);
        for (std::size_t i = 0; i < nf; ++i) xf_hat[i] += eps_f * df[i];
        const Vec x_hat = sys.assemble_state(xs_hat, xf_hat);
        Vec z_hat = z_true;
        if (nz > 0) {
            auto r = solve_algebraic(sys, x_hat, z_true, mu, u, cfg);
            require(r.converged, "contamination_probe: perturbed g-solve failed");
            z_hat = r.y_star;
        }
        const Vec fs = sys.f_slow(x_hat, z_hat, mu, u);
        Vec diff(ns);
        for (std::size_t i = 0; i < ns; ++i) diff[i] = fs[i] - fs_true[i];
        rep.rhs_error_standard = linalg::norm2(diff);
    }

    // extended mode: only the slow prediction enters; (x_f, z) are solved
    {
        auto r = solve_extended(sys, xs_hat, {}, mu, u, cfg);
        require(r.converged, "contamination_probe: perturbed extended solve failed");
        const Vec x_hat = sys.assemble_state(xs_hat, r.fast_part());
        const Vec fs = sys.f_slow(x_hat, r.alg_part(), mu, u);
        Vec diff(ns);
        for (std::size_t i = 0; i < ns; ++i) diff[i] = fs[i] - fs_true[i];
        rep.rhs_error_extended = linalg::norm2(diff);
    }
    return rep;
}

}  // namespace daeops::newton
