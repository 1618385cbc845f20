// Acceptance suite: exercises every gate criterion end to end and prints
// one [PASS]/[FAIL] line per criterion. Returns the number of failures.
//
// Run all:            ./acceptance
// Run a subset:       ./acceptance 1 4 9

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <set>
#include <sstream>
#include <string>

#include "daeops/cascade.hpp"
#include "daeops/conformal.hpp"
#include "daeops/integrate.hpp"
#include "daeops/train.hpp"
#include "daeops/util.hpp"
#include "support/check_log.hpp"
#include "support/probe_systems.hpp"

using namespace daeops;
using dae::DaeSystem;
using dae::DenseMatrix;
using dae::Vec;

namespace {

namespace fs = std::filesystem;


double now_seconds() {
    using clock = std::chrono::steady_clock;
    static const auto start = clock::now();
    return std::chrono::duration<double>(clock::now() - start).count();
}

std::string fmt(double v) { return util::format_f64(v); }

// --------------------------------------------------------------------------
// criterion 1: Newton precision on Robertson with the quadratic warm start
// --------------------------------------------------------------------------
bool criterion_newton_precision(CheckLog& log) {
    auto sys = dae::make_robertson();
    newton::NewtonConfig cfg;
    cfg.tol_residual = 1e-15;
    util::Rng rng(20250810);
    const auto t0 = std::chrono::steady_clock::now();
    double worst_res = 0.0;
    std::size_t worst_iters = 0;
    for (int i = 0; i < 1000; ++i) {
        const double y1 = std::exp(rng.uniform(std::log(0.01), std::log(1.0)));
        auto r = newton::solve_extended(sys, {y1}, {}, sys.mu0, {}, cfg);
        worst_res = std::max(worst_res, r.residual_norm);
        worst_iters = std::max(worst_iters, r.iterations);
        if (!r.converged || r.iterations > 2 || r.residual_norm > 1e-15) {
            log.expect(false, "y1=" + fmt(y1) + " iters=" + std::to_string(r.iterations) +
                                  " |F|=" + fmt(r.residual_norm));
            return log.ok;
        }
    }
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    log.note("1000 solves: max |F|_inf = " + fmt(worst_res) + ", max iterations = " +
             std::to_string(worst_iters) + ", wall = " + fmt(dt) + " s");
    log.expect(dt < 1.0, "runtime below 1 s");
    return log.ok;
}

// --------------------------------------------------------------------------
// criterion 2: IFT gradient correctness (layer-level and full chain)
// --------------------------------------------------------------------------
bool criterion_ift_gradients(CheckLog& log) {
    util::Rng rng(77);
    newton::NewtonConfig cfg;
    cfg.tol_residual = 1e-12;

    auto fd_column = [&](const DaeSystem& sys, const Vec& xs, std::size_t j, const Vec& u) {
        const double h = 1e-7 * (1.0 + std::abs(xs[j]));
        Vec hi = xs, lo = xs;
        hi[j] += h;
        lo[j] -= h;
        auto rh = newton::solve_extended(sys, hi, {}, sys.mu0, u, cfg);
        auto rl = newton::solve_extended(sys, lo, {}, sys.mu0, u, cfg);
        Vec col(rh.y_star.size());
        for (std::size_t i = 0; i < col.size(); ++i)
            col[i] = (rh.y_star[i] - rl.y_star[i]) / (2.0 * h);
        return col;
    };

    auto robertson = dae::make_robertson();
    auto smib = dae::make_smib();
    auto synth = dae::make_synthetic_two_timescale(200.0, 2, 2, 2);
    double worst = 0.0;
    int cases = 0;
    while (cases < 100) {
        const int pick = cases % 3;
        const DaeSystem& sys = pick == 0 ? robertson : (pick == 1 ? smib : synth.sys);
        Vec xs(sys.n_slow()), u(sys.n_u, 0.0);
        if (pick == 0) {
            xs[0] = std::exp(rng.uniform(std::log(0.05), std::log(1.0)));
        } else if (pick == 1) {
            xs = {rng.uniform(0.0, 0.7), rng.uniform(-0.02, 0.02)};
            u = {rng.uniform(0.85, 1.0)};
        } else {
            xs = {rng.uniform(-0.8, 0.8), rng.uniform(-0.8, 0.8)};
            u = {rng.uniform(0.0, 0.5)};
        }
        auto r = newton::solve_extended(sys, xs, {}, sys.mu0, u, cfg);
        if (!r.converged) {
            log.expect(false, "solve failed during case generation");
            return log.ok;
        }
        auto s = newton::ift_sensitivity(sys, xs, r, sys.mu0, u);
        for (std::size_t j = 0; j < xs.size(); ++j) {
            const Vec col = fd_column(sys, xs, j, u);
            for (std::size_t i = 0; i < col.size(); ++i) {
                const double denom = std::max(1.0, std::abs(col[i]));
                worst = std::max(worst,
                                 std::abs(s.d_ystar_d_xs(i, j) - col[i]) / denom);
            }
        }
        ++cases;
    }
    log.note("layer IFT vs FD over 100 cases: max rel err = " + fmt(worst));
    log.expect(worst <= 1e-5, "ift_sensitivity within 1e-5 of finite differences");

    // full chain through the physics loss on tiny f64 nets
    for (int which = 0; which < 2; ++which) {
        DaeSystem sys =
            which == 0 ? testsupport::make_linear_probe_coupled() : dae::make_robertson();
        train::TrainConfig tc;
        tc.mode = train::LossMode::extended_newton;
        tc.causal_eps = 0.0;
        tc.collocation = 12;
        tc.newton_cfg.tol_residual = 1e-14;
        if (which == 0) {
            tc.window_length = 0.5;
            tc.ranges.anchor_lo = {-1.0};
            tc.ranges.anchor_hi = {1.0};
        } else {
            tc.time_scale = train::TimeScale::log10;
            tc.window_length = 0.5;
            tc.max_log_slope = 1.0;
            tc.ranges.anchor_lo = {0.05};
            tc.ranges.anchor_hi = {1.0};
            tc.ranges.log_anchor = true;
            tc.ranges.window_start_lo = -2.0;
            tc.ranges.window_start_hi = 4.0;
        }
        op::NetConfig base;
        base.n_basis = 4;
        base.hidden_width = 8;
        base.depth = 2;
        base.seed = 3 + which;
        op::OperatorNet net(train::make_net_config(sys, tc, base));

        util::Rng srng(11 + which);
        std::vector<train::WindowSample> batch;
        for (int b = 0; b < 3; ++b) batch.push_back(train::sample_window(sys, tc, srng));
        std::vector<double> grad(net.param_count(), 0.0);
        const Vec lambda(1, 1.0);
        (void)train::physics_loss(net, sys, batch, tc, 0, lambda, &grad);

        const auto theta = net.parameters();
        util::Rng pick_rng(99 + which);
        double worst_chain = 0.0;
        for (int rep = 0; rep < 12; ++rep) {
            const std::size_t j = pick_rng.next_u64() % theta.size();
            auto tp = theta, tm = theta;
            tp[j] += 1e-6;
            tm[j] -= 1e-6;
            op::OperatorNet np = net, nm = net;
            np.set_parameters(tp);
            nm.set_parameters(tm);
            const double fp =
                train::physics_loss(np, sys, batch, tc, 0, lambda, nullptr).total;
            const double fm =
                train::physics_loss(nm, sys, batch, tc, 0, lambda, nullptr).total;
            const double fd = (fp - fm) / 2e-6;
            const double denom = std::max({1e-6, std::abs(fd), std::abs(grad[j])});
            worst_chain = std::max(worst_chain, std::abs(grad[j] - fd) / denom);
        }
        log.note(std::string("full-chain grad vs FD (") +
                 (which == 0 ? "linear probe" : "robertson") +
                 "): max rel err = " + fmt(worst_chain));
        log.expect(worst_chain <= 1e-4, "physics_loss gradient within 1e-4 of FD");
    }
    return log.ok;
}

// --------------------------------------------------------------------------
// criterion 3: Schur determinant factorization
// --------------------------------------------------------------------------
bool criterion_schur(CheckLog& log) {
    util::Rng rng(404);
    auto robertson = dae::make_robertson();
    auto smib = dae::make_smib();
    auto synth = dae::make_synthetic_two_timescale(300.0, 2, 3, 2);
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
        for (int pick = 0; pick < 3; ++pick) {
            const DaeSystem& sys = pick == 0 ? robertson : (pick == 1 ? smib : synth.sys);
            Vec x(sys.n_x), z(sys.n_z), u(sys.n_u, 1.0);
            if (pick == 0) {
                x = {rng.uniform(0.05, 1.0), rng.uniform(1e-6, 1e-4)};
                z = sys.z_closed_form(x, sys.mu0, {});
                u = {};
            } else if (pick == 1) {
                x = {rng.uniform(0.0, 0.8), rng.uniform(-0.02, 0.02)};
                z = sys.z_closed_form(x, sys.mu0, u);
            } else {
                for (auto& v : x) v = rng.uniform(-1.0, 1.0);
                for (auto& v : z) v = rng.uniform(-1.0, 1.0);
                u = {rng.uniform(0.0, 0.5)};
            }
            const auto d = newton::schur_determinants(sys, x, z, sys.mu0, u);
            const double err = std::abs(std::abs(d.det_extended) -
                                        std::abs(d.det_jz * d.det_schur)) /
                               std::abs(d.det_extended);
            worst = std::max(worst, err);
        }
    }
    log.note("max relative factorization error over 150 points = " + fmt(worst));
    log.expect(worst <= 1e-8, "|det dF/dy| = |det Jz||det S| to 1e-8");
    return log.ok;
}

// --------------------------------------------------------------------------
// criterion 4: QSS error bound on the boundary-layer probe
// --------------------------------------------------------------------------
bool criterion_qss_bound(CheckLog& log) {
    const double t_w = 0.05, xs0 = 0.2, xf0 = 0.9;
    for (double alpha : {10.0, 100.0, 1000.0}) {
        for (double v : {0.1, 1.0}) {
            auto sys = testsupport::make_qss_probe(alpha, v);
            integrate::IntegratorConfig ic;
            ic.t1 = t_w;
            ic.rtol = 1e-10;
            ic.atol = 1e-12;
            auto tr = integrate::integrate(sys, {xs0, xf0}, {}, ic);
            const double xs_end = tr.x.back()[0];
            const double measured = std::abs(tr.x.back()[1] - xs_end);
            const double c1 = std::abs(xf0 - xs0);
            const double bound = c1 * std::exp(-alpha * t_w) + v / alpha;
            log.note("alpha=" + fmt(alpha) + " v=" + fmt(v) + ": measured " +
                     fmt(measured) + " <= bound " + fmt(bound));
            log.expect(measured <= bound + 1e-10, "QSS bound violated");
        }
    }
    return log.ok;
}

// --------------------------------------------------------------------------
// criterion 5: cascaded convergence, safeguards and gradient equivalence
// --------------------------------------------------------------------------
dae::CoupledSystem two_scalar(double c) {
    dae::CoupledSystem cs;
    cs.n_v = 1;
    for (int i = 0; i < 2; ++i) {
        dae::CoupledComponent comp;
        auto& sys = comp.sys;
        sys.name = "sc" + std::to_string(i);
        sys.n_x = 1;
        sys.n_z = 1;
        sys.n_u = 1;
        sys.partition.slow_indices = {0};
        sys.input = dae::InputSchedule::constant({0.0});
        sys.f = [](const Vec& x, const Vec&, const Vec&, const Vec&) -> Vec {
            return {-x[0]};
        };
        sys.g = [](const Vec& x, const Vec& z, const Vec&, const Vec& u) -> Vec {
            return {z[0] - x[0] + 0.5 * u[0]};
        };
        sys.dfdx = [](const Vec&, const Vec&, const Vec&, const Vec&) {
            return DenseMatrix::from_rows({{-1.0}});
        };
        sys.dfdz = [](const Vec&, const Vec&, const Vec&, const Vec&) {
            return DenseMatrix(1, 1);
        };
        sys.dgdx = [](const Vec&, const Vec&, const Vec&, const Vec&) {
            return DenseMatrix::from_rows({{-1.0}});
        };
        sys.dgdz = [](const Vec&, const Vec&, const Vec&, const Vec&) {
            return DenseMatrix::from_rows({{1.0}});
        };
        comp.v_offset = 0;
        comp.dfdv = [](const Vec&, const Vec&, const Vec&, const Vec&) {
            return DenseMatrix(1, 1);
        };
        comp.dgdv = [](const Vec&, const Vec&, const Vec&, const Vec&) {
            return DenseMatrix::from_rows({{0.5}});
        };
        cs.components.push_back(std::move(comp));
    }
    cs.g_net = [c](const std::vector<Vec>& z, const Vec& v) -> Vec {
        return {v[0] - c * (z[0][0] + z[1][0])};
    };
    cs.dgnet_dv = [](const std::vector<Vec>&, const Vec&) {
        return DenseMatrix::from_rows({{1.0}});
    };
    for (int i = 0; i < 2; ++i)
        cs.dgnet_dz.push_back([c](const std::vector<Vec>&, const Vec&) {
            return DenseMatrix::from_rows({{-c}});
        });
    return cs;
}

bool criterion_cascade(CheckLog& log) {
    const std::vector<Vec> xs = {{0.8}, {0.3}};
    const std::vector<Vec> u = {{}, {}};
    {
        auto cs = two_scalar(0.4);
        cascade::CascadeConfig cfg;
        auto res = cascade::cascade_solve(cs, xs, {0.0}, u, cfg);
        log.expect(res.converged, "rho = 0.4 cascade converges");
        const auto& h = res.residual_history;
        for (std::size_t i = 0; i + 1 < h.size() && h[i] > 1e-12 * h[0]; ++i)
            log.expect(h[i + 1] / h[i] <= 0.45,
                       "asymptotic residual ratio " + fmt(h[i + 1] / h[i]) + " <= 0.45");
        auto est = cascade::estimate_contraction(cs, xs, res.v_star, u, cfg);
        log.note("estimated rho = " + fmt(est.rho));
        log.expect(std::abs(est.rho - 0.4) <= 1e-9, "constructed rho recovered");

        // warm-started outer loop (rollout regime) stays within 5 iterations
        auto warm = cascade::cascade_solve(cs, xs, {res.v_star[0] + 1e-9}, u, cfg);
        log.note("warm outer iterations = " + std::to_string(warm.outer_iterations));
        log.expect(warm.converged && warm.outer_iterations <= 5,
                   "warm-started outer iterations <= 5");
    }
    {
        auto cs = two_scalar(3.0);
        cascade::CascadeConfig cfg;
        auto res = cascade::cascade_solve(cs, xs, {0.0}, u, cfg);
        log.expect(!res.converged && res.diverged, "rho = 3 diverges undamped");
        cfg.damping = 0.25;
        auto damped = cascade::cascade_solve(cs, xs, {0.0}, u, cfg);
        log.expect(damped.converged, "rho = 3 converges at eta = 0.25");
    }
    {
        dae::CoupledSyntheticParams p;
        p.n_components = 2;
        p.coupling_strength = 0.3;
        p.kappa = 60.0;
        auto cs = dae::make_coupled_synthetic(p);
        const std::vector<Vec> xs2 = {{0.4, -0.2}, {-0.1, 0.3}};
        const std::vector<Vec> u2 = {{{0.2}}, {{0.1}}};
        cascade::CascadeConfig cfg;
        cfg.outer_tol = 1e-12;
        auto res = cascade::cascade_solve(cs, xs2, {0.0}, u2, cfg);
        log.expect(res.converged, "synthetic pair cascade converges");

        util::Rng rng(8);
        std::vector<Vec> wy = {{rng.uniform(-1, 1), rng.uniform(-1, 1)},
                               {rng.uniform(-1, 1), rng.uniform(-1, 1)}};
        Vec wv = {rng.uniform(-1, 1)};
        auto grad = cascade::cascade_vjp(cs, xs2, res, wy, wv, u2, cfg);

        auto mono = cascade::make_monolithic_system(cs);
        Vec xs_mono = {0.4, -0.2, -0.1, 0.3}, u_mono = {0.2, 0.1};
        newton::NewtonConfig nc;
        nc.tol_residual = 1e-12;
        nc.warm_start = newton::NewtonConfig::WarmStart::user_supplied;
        auto mres = newton::solve_extended(mono, xs_mono, Vec(mono.n_fast() + mono.n_z, 0.0),
                                           mono.mu0, u_mono, nc);
        log.expect(mres.converged, "monolithic oracle converges");
        Vec cot = {wy[0][0], wy[1][0], wy[0][1], wy[1][1], wv[0]};
        const Vec mg = newton::vjp_through_layer(mono, xs_mono, mres, cot, mono.mu0, u_mono);
        double worst = 0.0;
        const double pairs[4][2] = {{grad[0][0], mg[0]},
                                    {grad[0][1], mg[1]},
                                    {grad[1][0], mg[2]},
                                    {grad[1][1], mg[3]}};
        for (auto& pr : pairs)
            worst = std::max(worst, std::abs(pr[0] - pr[1]) / std::max(1.0, std::abs(pr[1])));
        log.note("cascade vjp vs monolithic gradient: max rel err = " + fmt(worst));
        log.expect(worst <= 1e-9, "gradient equivalence to 1e-9");
    }
    return log.ok;
}

// --------------------------------------------------------------------------
// criterion 9: integrator order and constraint preservation
// --------------------------------------------------------------------------
bool criterion_integrator(CheckLog& log) {
    // order check on a smooth forced linear problem with known solution
    DaeSystem sys;
    sys.name = "forced";
    sys.n_x = 2;
    sys.n_z = 0;
    sys.n_u = 0;
    sys.partition.slow_indices = {0, 1};
    sys.input = dae::InputSchedule::none();
    sys.f = [](const Vec& x, const Vec&, const Vec&, const Vec&) -> Vec {
        return {1.0, -x[1] + std::sin(2.0 * x[0])};
    };
    sys.g = [](const Vec&, const Vec&, const Vec&, const Vec&) -> Vec { return {}; };
    sys.dfdx = [](const Vec& x, const Vec&, const Vec&, const Vec&) {
        return DenseMatrix::from_rows({{0.0, 0.0}, {2.0 * std::cos(2.0 * x[0]), -1.0}});
    };
    sys.dfdz = [](const Vec&, const Vec&, const Vec&, const Vec&) { return DenseMatrix(2, 0); };
    sys.dgdx = [](const Vec&, const Vec&, const Vec&, const Vec&) { return DenseMatrix(0, 2); };
    sys.dgdz = [](const Vec&, const Vec&, const Vec&, const Vec&) { return DenseMatrix(0, 0); };
    auto exact = [](double t) {
        return 1.4 * std::exp(-t) + (std::sin(2.0 * t) - 2.0 * std::cos(2.0 * t)) / 5.0;
    };
    std::vector<double> errs;
    for (double h : {0.1, 0.05, 0.025, 0.0125}) {
        integrate::IntegratorConfig ic;
        ic.fixed_step = h;
        ic.t1 = 1.0;
        auto tr = integrate::integrate(sys, {0.0, 1.0}, {}, ic);
        errs.push_back(std::abs(tr.x.back()[1] - exact(1.0)));
    }
    const double slope = std::log2(errs.front() / errs.back()) / 3.0;
    log.note("radau3 log-log slope = " + fmt(slope));
    log.expect(std::abs(slope - 5.0) <= 0.3, "radau3 order-5 slope within 0.3");

    // constraint preservation along robertson and smib trajectories
    {
        auto robertson = dae::make_robertson();
        integrate::IntegratorConfig ic;
        ic.t0 = 1e-2;
        ic.t1 = 1e4;
        ic.dense_output_times = integrate::log_time_grid(1e-2, 1e4, 4.0);
        auto [x0, z0] = integrate::project_consistent(robertson, {1.0, 0.0});
        auto tr = integrate::integrate(robertson, x0, z0, ic);
        log.note("robertson stored max |g| = " + fmt(tr.stats["max_g_residual"]));
        log.expect(tr.stats["max_g_residual"] <= 1e-8, "robertson |g| <= 1e-8");
    }
    {
        auto smib = dae::make_smib();
        smib.input = dae::InputSchedule::step({1.0}, {0.8}, 0.05);
        auto [x0, z0] = integrate::project_consistent(smib, {0.4, 0.0});
        integrate::IntegratorConfig ic;
        ic.t1 = 1.0;
        for (int i = 0; i <= 50; ++i) ic.dense_output_times.push_back(0.02 * i);
        auto tr = integrate::integrate(smib, x0, z0, ic);
        log.note("smib stored max |g| = " + fmt(tr.stats["max_g_residual"]));
        log.expect(tr.stats["max_g_residual"] <= 1e-8, "smib |g| <= 1e-8");
    }
    return log.ok;
}

// --------------------------------------------------------------------------
// criterion 10: CLI determinism under --threads 1
// --------------------------------------------------------------------------
bool criterion_determinism(CheckLog& log) {
#ifndef DAEOPS_CLI_PATH
    log.expect(false, "CLI path not configured");
    return log.ok;
#else
    const std::string bin = DAEOPS_CLI_PATH;
    fs::remove_all("acceptance_scratch");
    fs::create_directories("acceptance_scratch");
    util::write_text_file("acceptance_scratch/sys.json", R"({"system": "robertson"})");
    util::write_text_file("acceptance_scratch/integ.json", R"({
      "t0": 1e-2, "t1": 1e3, "x0": [1.0, 0.0], "z0": [0.0], "presettle_from": 0.0,
      "output": {"log_grid": {"t0": 1e-2, "t1": 1e3, "windows_per_decade": 2.0}}})");
    util::write_text_file("acceptance_scratch/net.json", R"({
      "n_basis": 4, "hidden_width": 8, "depth": 2, "seed": 5})");
    util::write_text_file("acceptance_scratch/train.json", R"({
      "epochs": 60, "collocation": 8, "batch_windows": 2, "mode": "extended",
      "time_scale": "log10", "window_length": 0.5, "max_log_slope": 1.0,
      "ranges": {"anchor_lo": [0.02], "anchor_hi": [1.0], "log_anchor": true,
                 "window_start_lo": -2.0, "window_start_hi": 2.5}, "seed": 7})");

    auto run = [&](const std::string& args) {
        const std::string cmd = bin + " --threads 1 " + args + " >/dev/null 2>&1";
        return std::system(cmd.c_str()) == 0;
    };
    bool ok = true;
    ok = ok && run("reference --system acceptance_scratch/sys.json --integrator "
                   "acceptance_scratch/integ.json --out acceptance_scratch/r1");
    ok = ok && run("reference --system acceptance_scratch/sys.json --integrator "
                   "acceptance_scratch/integ.json --out acceptance_scratch/r2");
    ok = ok && run("train --system acceptance_scratch/sys.json --net "
                   "acceptance_scratch/net.json --train acceptance_scratch/train.json "
                   "--seed 42 --out acceptance_scratch/t1");
    ok = ok && run("train --system acceptance_scratch/sys.json --net "
                   "acceptance_scratch/net.json --train acceptance_scratch/train.json "
                   "--seed 42 --out acceptance_scratch/t2");
    log.expect(ok, "CLI invocations succeed");
    if (!ok) return log.ok;
    log.expect(util::read_text_file("acceptance_scratch/r1/trajectory.csv") ==
                   util::read_text_file("acceptance_scratch/r2/trajectory.csv"),
               "reference outputs byte-identical");
    log.expect(util::read_text_file("acceptance_scratch/t1/checkpoint.json") ==
                   util::read_text_file("acceptance_scratch/t2/checkpoint.json"),
               "training checkpoints byte-identical");
    log.expect(util::read_text_file("acceptance_scratch/t1/loss_history.csv") ==
                   util::read_text_file("acceptance_scratch/t2/loss_history.csv"),
               "loss histories byte-identical");
    return log.ok;
#endif
}

}  // namespace

// criteria 6-8 live in a separate translation unit (training-heavy)
bool criterion_robertson_reproduction(CheckLog& log);
bool criterion_conformal(CheckLog& log);
bool criterion_ablation(CheckLog& log);

int main(int argc, char** argv) {
    struct Entry {
        int id;
        const char* title;
        std::function<bool(CheckLog&)> fn;
    };
    const std::vector<Entry> entries = {
        {1, "Newton precision (Robertson warm start)", criterion_newton_precision},
        {2, "IFT gradient correctness", criterion_ift_gradients},
        {3, "Schur determinant factorization", criterion_schur},
        {4, "QSS error bound", criterion_qss_bound},
        {5, "cascaded convergence and gradient equivalence", criterion_cascade},
        {6, "Robertson reproduction at desk scale", criterion_robertson_reproduction},
        {7, "conformal validity and OOD detection", criterion_conformal},
        {8, "ablation orderings", criterion_ablation},
        {9, "integrator order and constraint preservation", criterion_integrator},
        {10, "CLI determinism", criterion_determinism},
    };
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

    int failures = 0;
    for (const auto& e : entries) {
        if (!selected.empty() && !selected.count(e.id)) continue;
        CheckLog log;
        const double t0 = now_seconds();
        bool ok = false;
        try {
            ok = e.fn(log);
        } catch (const std::exception& ex) {
            log.expect(false, std::string("exception: ") + ex.what());
        }
        const double dt = now_seconds() - t0;
        std::printf("[%s] criterion %d: %s (%.1f s)\n", ok ? "PASS" : "FAIL", e.id,
                    e.title, dt);
        std::fputs(log.detail.str().c_str(), stdout);
        std::fflush(stdout);
        if (!ok) ++failures;
    }
    return failures;
}
