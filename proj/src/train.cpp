#include "daeops/train.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace daeops::train {

using linalg::DenseMatrix;
using util::require;

namespace {

constexpr double kLn10 = 2.302585092994046;

std::size_t n_out_for(const DaeSystem& sys, LossMode mode) {
    switch (mode) {
        case LossMode::extended_newton:
            return sys.n_slow();
        case LossMode::standard_newton:
            return sys.n_x;
        case LossMode::penalty:
            return sys.n_x + sys.n_z;
    }
    return 0;
}

std::size_t residual_states(const DaeSystem& sys, LossMode mode) {
    return mode == LossMode::extended_newton ? sys.n_slow() : sys.n_x;
}

bool wants_window_tag(const TrainConfig& tc) {
    return tc.time_scale == TimeScale::log10 ||
           tc.ranges.window_start_lo != tc.ranges.window_start_hi;
}

/// dt/dtau at collocation point tau for a window starting at t_start
double time_scale_factor(const TrainConfig& tc, double t_start, double tau) {
    if (tc.time_scale == TimeScale::linear) return tc.window_length;
    const double lam = t_start + tau * tc.window_length;
    return tc.window_length * kLn10 * std::pow(10.0, lam);
}

double physical_time(TimeScale ts, double t_start, double tau, double t_w) {
    const double lam = t_start + tau * t_w;
    return ts == TimeScale::linear ? lam : std::pow(10.0, lam);
}

/// anchor for one sampled slow state: the full prediction vector per mode
Vec anchor_for_mode(const DaeSystem& sys, LossMode mode, const Vec& xs, const Vec& u) {
    if (mode == LossMode::extended_newton) return xs;
    Vec y;
    if (sys.qss_warm_start) {
        y = sys.qss_warm_start(xs, sys.mu0, u);
    } else {
        auto r = newton::solve_extended(sys, xs, {}, sys.mu0, u);
        require(r.converged, "anchor sampling: extended solve failed");
        y = r.y_star;
    }
    const Vec xf(y.begin(), y.begin() + sys.n_fast());
    const Vec z(y.begin() + sys.n_fast(), y.end());
    Vec anchor = sys.assemble_state(xs, xf);
    if (mode == LossMode::penalty) anchor.insert(anchor.end(), z.begin(), z.end());
    return anchor;
}

double penalty_weight(const TrainConfig& cfg, std::size_t epoch) {
    const double half = std::max<std::size_t>(1, cfg.epochs / 2);
    const double ramp = std::min(1.0, double(epoch) / double(half));
    return std::pow(10.0, cfg.penalty_ramp_max_exp * ramp);
}

}  // namespace

Vec window_extra(const DaeSystem& sys, const TrainConfig& tc, const Vec& u,
                 double t_start) {
    Vec extra = u;
    require(u.size() == sys.n_u, "window_extra: wrong input dimension");
    if (wants_window_tag(tc)) extra.push_back(t_start);
    return extra;
}

op::NetConfig make_net_config(const DaeSystem& sys, const TrainConfig& tc,
                              op::NetConfig base) {
    base.n_out = n_out_for(sys, tc.mode);
    base.n_branch_extra = sys.n_u + (wants_window_tag(tc) ? 1 : 0);

    require(tc.ranges.anchor_lo.size() == sys.n_slow() &&
                tc.ranges.anchor_hi.size() == sys.n_slow(),
            "make_net_config: anchor ranges must cover the slow states");
    require(tc.ranges.u_lo.size() == sys.n_u && tc.ranges.u_hi.size() == sys.n_u,
            "make_net_config: input ranges must cover n_u");

    // anchor normalization; non-slow anchor rows probed from the QSS map
    Vec lo = tc.ranges.anchor_lo, hi = tc.ranges.anchor_hi;
    if (tc.mode != LossMode::extended_newton) {
        const std::size_t n_anchor = base.n_out;
        Vec full_lo(n_anchor, 1e300), full_hi(n_anchor, -1e300);
        util::Rng probe(1234567);
        for (int rep = 0; rep < 64; ++rep) {
            Vec xs(sys.n_slow());
            for (std::size_t i = 0; i < xs.size(); ++i)
                xs[i] = tc.ranges.log_anchor
                            ? std::exp(probe.uniform(std::log(lo[i]), std::log(hi[i])))
                            : probe.uniform(lo[i], hi[i]);
            Vec u(sys.n_u);
            for (std::size_t i = 0; i < u.size(); ++i)
                u[i] = probe.uniform(tc.ranges.u_lo[i], tc.ranges.u_hi[i]);
            const Vec anchor = anchor_for_mode(sys, tc.mode, xs, u);
            for (std::size_t i = 0; i < n_anchor; ++i) {
                full_lo[i] = std::min(full_lo[i], anchor[i]);
                full_hi[i] = std::max(full_hi[i], anchor[i]);
            }
        }
        lo = full_lo;
        hi = full_hi;
    }

    base.branch_shift.clear();
    base.branch_scale.clear();
    auto push_norm = [&](double l, double h) {
        base.branch_shift.push_back(0.5 * (l + h));
        base.branch_scale.push_back(std::max(0.5 * (h - l), 1e-6));
    };
    for (std::size_t i = 0; i < lo.size(); ++i) push_norm(lo[i], hi[i]);
    for (std::size_t i = 0; i < sys.n_u; ++i)
        push_norm(tc.ranges.u_lo[i], tc.ranges.u_hi[i]);
    if (wants_window_tag(tc))
        push_norm(tc.ranges.window_start_lo, tc.ranges.window_start_hi);
    return base;
}

WindowSample sample_window(const DaeSystem& sys, const TrainConfig& tc, util::Rng& rng) {
    WindowSample ws;
    Vec xs(sys.n_slow());
    const bool log_draw =
        tc.ranges.log_anchor &&
        (tc.ranges.mix_uniform <= 0.0 || rng.uniform01() >= tc.ranges.mix_uniform);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double lo = tc.ranges.anchor_lo[i], hi = tc.ranges.anchor_hi[i];
        xs[i] = log_draw ? std::exp(rng.uniform(std::log(lo), std::log(hi)))
                         : rng.uniform(lo, hi);
    }
    ws.u.resize(sys.n_u);
    for (std::size_t i = 0; i < sys.n_u; ++i)
        ws.u[i] = rng.uniform(tc.ranges.u_lo[i], tc.ranges.u_hi[i]);
    ws.t_start = rng.uniform(tc.ranges.window_start_lo, tc.ranges.window_start_hi);

    if (tc.time_scale == TimeScale::log10 && tc.max_log_slope > 0.0 && sys.qss_warm_start) {
        // resample the window start until the state is representable there
        const Vec y = sys.qss_warm_start(xs, sys.mu0, ws.u);
        const Vec xf(y.begin(), y.begin() + sys.n_fast());
        const Vec x = sys.assemble_state(xs, xf);
        const Vec z(y.begin() + sys.n_fast(), y.end());
        const double f_norm = linalg::norm_inf(sys.f_slow(x, z, sys.mu0, ws.u));
        if (f_norm > 0.0) {
            const double lam_max =
                std::log10(tc.max_log_slope / (kLn10 * f_norm)) - tc.window_length;
            for (int attempt = 0; attempt < 64 && ws.t_start > lam_max; ++attempt)
                ws.t_start =
                    rng.uniform(tc.ranges.window_start_lo, tc.ranges.window_start_hi);
            if (ws.t_start > lam_max)
                ws.t_start = std::max(tc.ranges.window_start_lo,
                                      std::min(lam_max, tc.ranges.window_start_hi));
        }
    }

    ws.win.x_s0 = anchor_for_mode(sys, tc.mode, xs, ws.u);
    ws.win.extra = window_extra(sys, tc, ws.u, ws.t_start);
    ws.win.tau.resize(tc.collocation);
    for (auto& t : ws.win.tau) t = rng.uniform01();
    std::sort(ws.win.tau.begin(), ws.win.tau.end());
    return ws;
}

LossReport physics_loss(const op::OperatorNet& net, const DaeSystem& sys,
                        const std::vector<WindowSample>& batch, const TrainConfig& cfg,
                        std::size_t epoch, const Vec& lambda_s,
                        std::vector<double>* grad_theta) {
    const std::size_t n_res = residual_states(sys, cfg.mode);
    const std::size_t n_win = batch.size();
    const std::size_t nf = sys.n_fast(), nz = sys.n_z;
    require(lambda_s.size() == n_res, "physics_loss: lambda size mismatch");
    require(net.config().n_out == n_out_for(sys, cfg.mode),
            "physics_loss: net output dimension does not match the loss mode");

    struct PerWindow {
        op::OperatorNet::Eval ev;
        std::vector<Vec> residual;               // [K][n_res]
        std::vector<newton::NewtonResult> solve; // per collocation point
        std::vector<Vec> g_val;                  // penalty mode
        std::vector<double> scale;
        std::vector<bool> ok;
    };
    std::vector<PerWindow> work(n_win);

    std::size_t newton_iters = 0, newton_solves = 0, newton_failures = 0;

    // pass 1: forward + in-loop solves + raw residuals
    util::parallel_for(n_win, cfg.threads, [&](std::size_t widx) {
        const auto& ws = batch[widx];
        auto& pw = work[widx];
        const std::size_t K = ws.win.tau.size();
        pw.ev = net.forward(ws.win, true);
        pw.residual.assign(K, Vec(n_res, 0.0));
        pw.scale.assign(K, 0.0);
        pw.ok.assign(K, true);
        if (cfg.mode != LossMode::penalty) pw.solve.resize(K);
        if (cfg.mode == LossMode::penalty) pw.g_val.assign(K, Vec(nz, 0.0));

        for (std::size_t k = 0; k < K; ++k) {
            const double tau = ws.win.tau[k];
            const double scale = time_scale_factor(cfg, ws.t_start, tau);
            pw.scale[k] = scale;
            const Vec& u = ws.u;
            if (cfg.mode == LossMode::extended_newton) {
                const Vec& xs_hat = pw.ev.values[k];
                auto res = newton::solve_extended(sys, xs_hat, {}, sys.mu0, u, cfg.newton_cfg);
                if (!res.converged) {
                    pw.ok[k] = false;
                    pw.solve[k] = std::move(res);
                    continue;
                }
                const Vec x_hat = sys.assemble_state(xs_hat, res.fast_part());
                const Vec fs = sys.f_slow(x_hat, res.alg_part(), sys.mu0, u);
                for (std::size_t s = 0; s < n_res; ++s)
                    pw.residual[k][s] = pw.ev.dtau[k][s] - scale * fs[s];
                pw.solve[k] = std::move(res);
            } else if (cfg.mode == LossMode::standard_newton) {
                const Vec& x_hat = pw.ev.values[k];
                Vec z0 = sys.z_closed_form ? sys.z_closed_form(x_hat, sys.mu0, u)
                                           : Vec(nz, 0.0);
                auto res = nz > 0 ? newton::solve_algebraic(sys, x_hat, z0, sys.mu0, u,
                                                            cfg.newton_cfg)
                                  : newton::NewtonResult{};
                if (nz == 0) res.converged = true;
                if (!res.converged) {
                    pw.ok[k] = false;
                    pw.solve[k] = std::move(res);
                    continue;
                }
                const Vec f = sys.f(x_hat, res.y_star, sys.mu0, u);
                for (std::size_t s = 0; s < n_res; ++s)
                    pw.residual[k][s] = pw.ev.dtau[k][s] - scale * f[s];
                pw.solve[k] = std::move(res);
            } else {
                const Vec x_hat(pw.ev.values[k].begin(), pw.ev.values[k].begin() + sys.n_x);
                const Vec z_hat(pw.ev.values[k].begin() + sys.n_x, pw.ev.values[k].end());
                const Vec f = sys.f(x_hat, z_hat, sys.mu0, u);
                for (std::size_t s = 0; s < n_res; ++s)
                    pw.residual[k][s] = pw.ev.dtau[k][s] - scale * f[s];
                if (nz > 0) pw.g_val[k] = sys.g(x_hat, z_hat, sys.mu0, u);
            }
        }
    });

    for (const auto& pw : work) {
        for (std::size_t k = 0; k < pw.ok.size(); ++k) {
            if (cfg.mode != LossMode::penalty) {
                ++newton_solves;
                newton_iters += pw.solve[k].iterations;
                if (!pw.ok[k]) ++newton_failures;
            }
        }
    }

    // pass 2: chunk losses, causal weights, total
    const std::size_t nch = std::max<std::size_t>(1, cfg.n_chunks);
    std::vector<Vec> chunk_state_sq(nch, Vec(n_res, 0.0));
    std::vector<std::size_t> chunk_count(nch, 0);
    double g_sq_sum = 0.0;
    std::size_t g_count = 0;
    for (std::size_t widx = 0; widx < n_win; ++widx) {
        const auto& ws = batch[widx];
        const auto& pw = work[widx];
        for (std::size_t k = 0; k < pw.residual.size(); ++k) {
            if (!pw.ok[k]) continue;
            const std::size_t j =
                std::min(nch - 1, std::size_t(ws.win.tau[k] * double(nch)));
            ++chunk_count[j];
            for (std::size_t s = 0; s < n_res; ++s)
                chunk_state_sq[j][s] += pw.residual[k][s] * pw.residual[k][s];
            if (cfg.mode == LossMode::penalty && nz > 0) {
                for (double gv : pw.g_val[k]) g_sq_sum += gv * gv;
                ++g_count;
            }
        }
    }

    Vec chunk_loss(nch, 0.0);
    for (std::size_t j = 0; j < nch; ++j) {
        if (chunk_count[j] == 0) continue;
        for (std::size_t s = 0; s < n_res; ++s)
            chunk_loss[j] += lambda_s[s] * chunk_state_sq[j][s] / double(chunk_count[j]);
    }
    Vec w(nch, 1.0);
    double acc = 0.0;
    for (std::size_t j = 0; j < nch; ++j) {
        w[j] = std::exp(-cfg.causal_eps * acc);
        acc += chunk_loss[j];
    }

    LossReport rep;
    rep.chunk_weights = w;
    rep.lambda_s = lambda_s;
    rep.per_state_rms.assign(n_res, 0.0);
    std::size_t used_pts = 0;
    for (std::size_t j = 0; j < nch; ++j) {
        rep.total += w[j] * chunk_loss[j];
        used_pts += chunk_count[j];
        for (std::size_t s = 0; s < n_res; ++s) rep.per_state_rms[s] += chunk_state_sq[j][s];
    }
    for (std::size_t s = 0; s < n_res; ++s)
        rep.per_state_rms[s] =
            used_pts > 0 ? std::sqrt(rep.per_state_rms[s] / double(used_pts)) : 0.0;
    const double w_pen = penalty_weight(cfg, epoch);
    if (cfg.mode == LossMode::penalty && g_count > 0) {
        rep.penalty_g_rms = std::sqrt(g_sq_sum / double(g_count));
        rep.total += w_pen * g_sq_sum / double(g_count);
    }
    rep.newton_solves = newton_solves;
    rep.newton_iterations = newton_iters;
    rep.newton_failure_fraction =
        newton_solves > 0 ? double(newton_failures) / double(newton_solves) : 0.0;

    if (!grad_theta) return rep;

    // pass 3: cotangents through the residual (direct + implicit) and the net
    std::vector<std::vector<double>> grads(n_win);
    util::parallel_for(n_win, cfg.threads, [&](std::size_t widx) {
        const auto& ws = batch[widx];
        auto& pw = work[widx];
        const std::size_t K = ws.win.tau.size();
        grads[widx].assign(grad_theta->size(), 0.0);
        std::vector<Vec> cot_values(K, Vec(net.config().n_out, 0.0));
        std::vector<Vec> cot_dtau(K, Vec(net.config().n_out, 0.0));

        for (std::size_t k = 0; k < K; ++k) {
            if (!pw.ok[k]) continue;
            const std::size_t j =
                std::min(nch - 1, std::size_t(ws.win.tau[k] * double(nch)));
            if (chunk_count[j] == 0) continue;
            Vec cot_r(n_res);
            bool anynz = false;
            for (std::size_t s = 0; s < n_res; ++s) {
                cot_r[s] =
                    2.0 * lambda_s[s] * w[j] * pw.residual[k][s] / double(chunk_count[j]);
                anynz = anynz || cot_r[s] != 0.0;
            }
            const double scale = pw.scale[k];
            const Vec& u = ws.u;

            if (cfg.mode == LossMode::extended_newton) {
                if (!anynz) continue;
                const Vec& xs_hat = pw.ev.values[k];
                const auto& res = pw.solve[k];
                const Vec x_hat = sys.assemble_state(xs_hat, res.fast_part());
                const Vec z_hat = res.alg_part();
                const DenseMatrix dfs_dxs = sys.d_fslow_dxs(x_hat, z_hat, sys.mu0, u);
                const DenseMatrix dfs_dxf = sys.d_fslow_dxf(x_hat, z_hat, sys.mu0, u);
                const DenseMatrix dfs_dz = sys.d_fslow_dz(x_hat, z_hat, sys.mu0, u);
                Vec cv(n_res, 0.0);
                for (std::size_t c = 0; c < n_res; ++c) {
                    double s_acc = 0.0;
                    for (std::size_t r = 0; r < n_res; ++r) s_acc += dfs_dxs(r, c) * cot_r[r];
                    cv[c] = -scale * s_acc;
                }
                if (nf + nz > 0) {
                    Vec uy(nf + nz, 0.0);
                    for (std::size_t c = 0; c < nf; ++c)
                        for (std::size_t r = 0; r < n_res; ++r)
                            uy[c] += dfs_dxf(r, c) * cot_r[r];
                    for (std::size_t c = 0; c < nz; ++c)
                        for (std::size_t r = 0; r < n_res; ++r)
                            uy[nf + c] += dfs_dz(r, c) * cot_r[r];
                    const Vec ind =
                        newton::vjp_through_layer(sys, xs_hat, res, uy, sys.mu0, u);
                    for (std::size_t c = 0; c < n_res; ++c) cv[c] -= scale * ind[c];
                }
                cot_values[k] = cv;
                cot_dtau[k] = cot_r;
            } else if (cfg.mode == LossMode::standard_newton) {
                if (!anynz) continue;
                const Vec& x_hat = pw.ev.values[k];
                const auto& res = pw.solve[k];
                const Vec& z_hat = res.y_star;
                const DenseMatrix dfdx = sys.dfdx(x_hat, z_hat, sys.mu0, u);
                Vec cv(sys.n_x, 0.0);
                for (std::size_t c = 0; c < sys.n_x; ++c) {
                    double s_acc = 0.0;
                    for (std::size_t r = 0; r < sys.n_x; ++r) s_acc += dfdx(r, c) * cot_r[r];
                    cv[c] = -scale * s_acc;
                }
                if (nz > 0) {
                    const DenseMatrix dfdz = sys.dfdz(x_hat, z_hat, sys.mu0, u);
                    Vec uz(nz, 0.0);
                    for (std::size_t c = 0; c < nz; ++c)
                        for (std::size_t r = 0; r < sys.n_x; ++r)
                            uz[c] += dfdz(r, c) * cot_r[r];
                    const Vec ind = newton::vjp_through_layer_standard(sys, x_hat, res, uz,
                                                                       sys.mu0, u);
                    for (std::size_t c = 0; c < sys.n_x; ++c) cv[c] -= scale * ind[c];
                }
                cot_values[k] = cv;
                cot_dtau[k] = cot_r;
            } else {
                const Vec x_hat(pw.ev.values[k].begin(), pw.ev.values[k].begin() + sys.n_x);
                const Vec z_hat(pw.ev.values[k].begin() + sys.n_x, pw.ev.values[k].end());
                const DenseMatrix dfdx = sys.dfdx(x_hat, z_hat, sys.mu0, u);
                Vec cv(sys.n_x + nz, 0.0);
                for (std::size_t c = 0; c < sys.n_x; ++c) {
                    double s_acc = 0.0;
                    for (std::size_t r = 0; r < sys.n_x; ++r) s_acc += dfdx(r, c) * cot_r[r];
                    cv[c] = -scale * s_acc;
                }
                if (nz > 0) {
                    const DenseMatrix dfdz = sys.dfdz(x_hat, z_hat, sys.mu0, u);
                    for (std::size_t c = 0; c < nz; ++c) {
                        double s_acc = 0.0;
                        for (std::size_t r = 0; r < sys.n_x; ++r)
                            s_acc += dfdz(r, c) * cot_r[r];
                        cv[sys.n_x + c] = -scale * s_acc;
                    }
                    // ramped ||g||^2 penalty
                    const DenseMatrix dgdx = sys.dgdx(x_hat, z_hat, sys.mu0, u);
                    const DenseMatrix dgdz = sys.dgdz(x_hat, z_hat, sys.mu0, u);
                    const double pc = 2.0 * w_pen / double(std::max<std::size_t>(1, g_count));
                    for (std::size_t c = 0; c < sys.n_x; ++c)
                        for (std::size_t r = 0; r < nz; ++r)
                            cv[c] += pc * dgdx(r, c) * pw.g_val[k][r];
                    for (std::size_t c = 0; c < nz; ++c)
                        for (std::size_t r = 0; r < nz; ++r)
                            cv[sys.n_x + c] += pc * dgdz(r, c) * pw.g_val[k][r];
                }
                cot_values[k] = cv;
                for (std::size_t s = 0; s < sys.n_x; ++s) cot_dtau[k][s] = cot_r[s];
            }
        }
        net.backward(ws.win, pw.ev, cot_values, cot_dtau, grads[widx]);
    });
    for (std::size_t widx = 0; widx < n_win; ++widx)
        for (std::size_t i = 0; i < grad_theta->size(); ++i)
            (*grad_theta)[i] += grads[widx][i];
    return rep;
}

std::string history_to_csv(const std::vector<HistoryRow>& rows) {
    std::ostringstream out;
    const std::size_t ns = rows.empty() ? 0 : rows[0].per_state_rms.size();
    out << "epoch,total";
    for (std::size_t s = 0; s < ns; ++s) out << ",rms_state" << s;
    out << ",newton_failure_fraction,penalty_g_rms,lr\n";
    for (const auto& r : rows) {
        out << r.epoch << "," << util::format_f64(r.total);
        for (double v : r.per_state_rms) out << "," << util::format_f64(v);
        out << "," << util::format_f64(r.newton_failure_fraction) << ","
            << util::format_f64(r.penalty_g_rms) << "," << util::format_f64(r.lr) << "\n";
    }
    return out.str();
}

TrainResult train(op::OperatorNet net, const DaeSystem& sys, const TrainConfig& cfg,
                  const std::function<void(std::size_t, const op::OperatorNet&)>&
                      checkpoint_hook) {
    const std::size_t n_res = residual_states(sys, cfg.mode);
    util::Rng rng(cfg.seed);
    Vec lambda(n_res, 1.0);
    Vec rms_ema(n_res, 0.0);

    std::vector<double> theta = net.parameters();
    std::vector<double> m(theta.size(), 0.0), v(theta.size(), 0.0);
    std::vector<double> grad(theta.size(), 0.0);
    double lr = cfg.adam.lr;

    TrainResult out{std::move(net), {}, lambda};
    out.history.reserve(cfg.epochs);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::vector<WindowSample> batch;
        batch.reserve(cfg.batch_windows);
        for (std::size_t b = 0; b < cfg.batch_windows; ++b)
            batch.push_back(sample_window(sys, cfg, rng));

        std::fill(grad.begin(), grad.end(), 0.0);
        const LossReport rep =
            physics_loss(out.net, sys, batch, cfg, epoch, lambda, &grad);

        if (cfg.adam.clip_norm > 0.0) {
            const double gn = linalg::norm2(grad);
            if (gn > cfg.adam.clip_norm) {
                const double f = cfg.adam.clip_norm / gn;
                for (auto& g : grad) g *= f;
            }
        }

        if (cfg.adam.decay_every > 0 && epoch > 0 && epoch % cfg.adam.decay_every == 0)
            lr *= cfg.adam.lr_decay;
        const double t = double(epoch + 1);
        const double bc1 = 1.0 - std::pow(cfg.adam.beta1, t);
        const double bc2 = 1.0 - std::pow(cfg.adam.beta2, t);
        for (std::size_t i = 0; i < theta.size(); ++i) {
            m[i] = cfg.adam.beta1 * m[i] + (1.0 - cfg.adam.beta1) * grad[i];
            v[i] = cfg.adam.beta2 * v[i] + (1.0 - cfg.adam.beta2) * grad[i] * grad[i];
            theta[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + cfg.adam.eps);
        }
        out.net.set_parameters(theta);

        for (std::size_t s = 0; s < n_res; ++s)
            rms_ema[s] = 0.9 * rms_ema[s] + 0.1 * rep.per_state_rms[s];
        if (cfg.lambda_update_every > 0 && (epoch + 1) % cfg.lambda_update_every == 0) {
            double mean = 0.0;
            for (std::size_t s = 0; s < n_res; ++s) {
                lambda[s] = 1.0 / std::max(rms_ema[s], 1e-12);
                mean += lambda[s];
            }
            mean /= double(n_res);
            for (auto& l : lambda) l /= mean;
        }

        out.history.push_back({epoch, rep.total, rep.per_state_rms,
                               rep.newton_failure_fraction, rep.penalty_g_rms, lr});
        if (checkpoint_hook && cfg.checkpoint_every > 0 &&
            (epoch + 1) % cfg.checkpoint_every == 0)
            checkpoint_hook(epoch + 1, out.net);
    }
    out.lambda_s = lambda;
    return out;
}

RolloutResult rollout(const op::OperatorNet& net, const DaeSystem& sys, const Vec& x_s0,
                      std::size_t n_windows, const RolloutOptions& opts) {
    require(net.config().n_out == sys.n_slow(),
            "rollout: network must predict exactly the slow states");
    require(x_s0.size() == sys.n_slow(), "rollout: wrong initial state size");

    RolloutResult out;
    out.trajectory.system_name = sys.name;
    out.trajectory.mu = sys.mu0;
    out.window_flagged.assign(n_windows, false);

    const bool tagged = net.config().n_branch_extra == sys.n_u + 1;

    Vec xs = x_s0;
    Vec y_prev;
    const std::size_t m = std::max<std::size_t>(1, opts.samples_per_window);
    for (std::size_t wdx = 0; wdx < n_windows; ++wdx) {
        const double t0w = opts.t_start + double(wdx) * opts.window_length;
        const double t_phys0 = physical_time(opts.time_scale, t0w, 0.0, 0.0);
        const Vec u = sys.input.at(t_phys0);

        op::WindowInput win;
        win.x_s0 = xs;
        win.extra = u;
        if (tagged) win.extra.push_back(t0w);
        win.tau.resize(m + 1);
        for (std::size_t j = 0; j <= m; ++j) win.tau[j] = double(j) / double(m);
        const auto ev = net.forward(win, false);

        for (std::size_t j = (wdx == 0 ? 0 : 1); j <= m; ++j) {
            const Vec& xs_hat = ev.values[j];
            newton::NewtonConfig nc = opts.newton_cfg;
            auto res = newton::solve_extended(sys, xs_hat, y_prev, sys.mu0, u, nc);
            if (!res.converged) out.window_flagged[wdx] = true;
            y_prev = res.y_star;
            Vec x_full = sys.assemble_state(xs_hat, res.fast_part());
            Vec z_full = res.alg_part();
            if (sys.z_closed_form && res.converged)
                z_full = sys.z_closed_form(x_full, sys.mu0, u);
            const double t = physical_time(opts.time_scale, t0w, win.tau[j],
                                           opts.window_length);
            out.trajectory.times.push_back(t);
            out.trajectory.x.push_back(x_full);
            out.trajectory.z.push_back(z_full);
            if (sys.n_z > 0)
                out.max_g_residual = std::max(
                    out.max_g_residual,
                    linalg::norm_inf(sys.g(x_full, z_full, sys.mu0, u)));
            if (sys.conservation_check)
                out.max_conservation_drift =
                    std::max(out.max_conservation_drift,
                             std::abs(sys.conservation_check(x_full, z_full)));
        }
        xs = ev.values[m];  // chain: next anchor is this window's terminal value
    }
    for (bool f : out.window_flagged)
        if (f) ++out.flagged_count;
    out.trajectory.stats["flagged_windows"] = double(out.flagged_count);
    out.trajectory.stats["max_g_residual"] = out.max_g_residual;
    out.trajectory.stats["max_conservation_drift"] = out.max_conservation_drift;
    return out;
}

RolloutResult rollout_ode_formulation(const op::OperatorNet& net,
                                      const DaeSystem& sys_ode, const Vec& x_s0,
                                      std::size_t n_windows, const RolloutOptions& opts) {
    require(sys_ode.n_z == 0,
            "rollout_ode_formulation: expects the conservation-as-ODE system");
    return rollout(net, sys_ode, x_s0, n_windows, opts);
}

}  // namespace daeops::train
