#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "daeops/integrate.hpp"
#include "daeops/util.hpp"
#include "support/probe_systems.hpp"

using namespace daeops;
using dae::DenseMatrix;
using dae::Vec;
using integrate::IntegratorConfig;

namespace {

dae::DaeSystem make_exp_decay() {
    dae::DaeSystem sys;
    sys.name = "exp_decay";
    sys.n_x = 1;
    sys.n_z = 0;
    sys.n_u = 0;
    sys.partition.slow_indices = {0};
    sys.mu0 = {};
    sys.input = dae::InputSchedule::none();
    sys.f = [](const Vec& x, const Vec&, const Vec&, const Vec&) -> Vec {
        return {-x[0]};
    };
    sys.g = [](const Vec&, const Vec&, const Vec&, const Vec&) -> Vec { return {}; };
    sys.dfdx = [](const Vec&, const Vec&, const Vec&, const Vec&) {
        return DenseMatrix::from_rows({{-1.0}});
    };
    sys.dfdz = [](const Vec&, const Vec&, const Vec&, const Vec&) { return DenseMatrix(1, 0); };
    sys.dgdx = [](const Vec&, const Vec&, const Vec&, const Vec&) { return DenseMatrix(0, 1); };
    sys.dgdz = [](const Vec&, const Vec&, const Vec&, const Vec&) { return DenseMatrix(0, 0); };
    return sys;
}

// smooth nonstiff scalar problem with known solution, for order checks:
// x' = -x + sin(2t) treated autonomously via an extra clock state
dae::DaeSystem make_forced_decay() {
    dae::DaeSystem sys;
    sys.name = "forced_decay";
    sys.n_x = 2;  // (clock, x)
    sys.n_z = 0;
    sys.n_u = 0;
    sys.partition.slow_indices = {0, 1};
    sys.mu0 = {};
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
    return sys;
}

double forced_decay_exact(double t) {
    // x' = -x + sin 2t, x(0) = 1: x = c e^{-t} + (sin 2t - 2 cos 2t)/5
    const double c = 1.0 + 2.0 / 5.0;
    return c * std::exp(-t) + (std::sin(2.0 * t) - 2.0 * std::cos(2.0 * t)) / 5.0;
}

}  // namespace

TEST_CASE("linear decay hits e^{-1} within tolerance") {
    auto sys = make_exp_decay();
    IntegratorConfig cfg;
    cfg.t1 = 1.0;
    auto tr = integrate::integrate(sys, {1.0}, {}, cfg);
    CHECK(std::abs(tr.x.back()[0] - std::exp(-1.0)) <= 1e-8);
}

TEST_CASE("radau3 and trapezoid show their nominal convergence orders") {
    auto sys = make_forced_decay();
    auto run = [&](IntegratorConfig::Method m, double h) {
        IntegratorConfig cfg;
        cfg.method = m;
        cfg.fixed_step = h;
        cfg.t1 = 1.0;
        auto tr = integrate::integrate(sys, {0.0, 1.0}, {}, cfg);
        return std::abs(tr.x.back()[1] - forced_decay_exact(1.0));
    };
    for (auto [method, nominal] :
         {std::pair{IntegratorConfig::Method::radau3, 5.0},
          std::pair{IntegratorConfig::Method::trapezoid, 2.0}}) {
        std::vector<double> errs;
        for (double h : {0.1, 0.05, 0.025, 0.0125}) errs.push_back(run(method, h));
        // log-log slope over 3 halvings
        const double slope =
            std::log2(errs.front() / errs.back()) / double(errs.size() - 1);
        CHECK(std::abs(slope - nominal) <= 0.3);
    }
}

TEST_CASE("L-stability smoke test: x' = -1e6 x with h = 0.1 decays") {
    dae::DaeSystem sys = make_exp_decay();
    sys.f = [](const Vec& x, const Vec&, const Vec&, const Vec&) -> Vec {
        return {-1e6 * x[0]};
    };
    sys.dfdx = [](const Vec&, const Vec&, const Vec&, const Vec&) {
        return DenseMatrix::from_rows({{-1e6}});
    };
    IntegratorConfig cfg;
    cfg.fixed_step = 0.1;
    cfg.t1 = 0.5;
    auto tr = integrate::integrate(sys, {1.0}, {}, cfg);
    for (const auto& row : tr.x) CHECK(std::abs(row[0]) <= 1.0);
    CHECK(std::abs(tr.x.back()[0]) <= 1e-10);
}

TEST_CASE("robertson short run: self-convergence under tolerance halving") {
    auto sys = dae::make_robertson();
    IntegratorConfig cfg;
    cfg.t0 = 0.0;
    cfg.t1 = 1e-2;
    cfg.rtol = 1e-8;
    cfg.atol = 1e-12;
    auto tr = integrate::integrate(sys, {1.0, 0.0}, {0.0}, cfg);

    IntegratorConfig cfg2 = cfg;
    cfg2.rtol = 1e-10;
    cfg2.atol = 1e-14;
    auto tr2 = integrate::integrate(sys, {1.0, 0.0}, {0.0}, cfg2);

    for (std::size_t k = 0; k < 2; ++k) {
        const double a = tr.x.back()[k], b = tr2.x.back()[k];
        CHECK(std::abs(a - b) <= cfg.rtol * std::max(std::abs(b), 1e-4) + 10 * cfg.atol);
    }
}

TEST_CASE("robertson long run: physical shape and conservation") {
    auto sys = dae::make_robertson();
    IntegratorConfig cfg;
    cfg.t0 = 1e-2;
    cfg.t1 = 1e5;
    cfg.dense_output_times = integrate::log_time_grid(1e-2, 1e5, 2.0);
    auto [x0, z0] = integrate::project_consistent(sys, {1.0, 0.0});
    auto tr = integrate::integrate(sys, x0, z0, cfg);

    REQUIRE(tr.size() == 15);
    double y2_peak = 0.0;
    for (std::size_t i = 1; i < tr.size(); ++i) {
        CHECK(tr.x[i][0] < tr.x[i - 1][0]);  // y1 strictly decreasing
        y2_peak = std::max(y2_peak, tr.x[i][1]);
    }
    CHECK(y2_peak > 1e-6);
    CHECK(y2_peak < 1e-4);  // the fast intermediate stays at the 1e-5 scale
    CHECK(tr.stats["max_g_residual"] <= 1e-8);
}

TEST_CASE("project_consistent: robertson and smib") {
    auto robertson = dae::make_robertson();
    {
        auto [x0, z0] = integrate::project_consistent(robertson, {1.0, 0.0}, false);
        CHECK(x0 == Vec{1.0, 0.0});
        CHECK(z0[0] == 0.0);
    }
    {
        auto [x0, z0] = integrate::project_consistent(robertson, {0.9, 0.0}, true);
        const Vec ws = robertson.qss_warm_start({0.9}, robertson.mu0, {});
        CHECK(x0[1] == doctest::Approx(ws[0]).epsilon(1e-10));
        CHECK(z0[0] == doctest::Approx(ws[1]).epsilon(1e-10));
    }
    auto smib = dae::make_smib();
    {
        auto [x0, z0] = integrate::project_consistent(smib, {0.4, 0.0});
        CHECK(z0[0] == doctest::Approx(dae::smib_voltage_root(0.4, {})).epsilon(1e-12));
    }
}

TEST_CASE("inconsistent initial condition is rejected with the g residual") {
    auto sys = dae::make_robertson();
    IntegratorConfig cfg;
    cfg.t1 = 1.0;
    CHECK_THROWS_AS((void)integrate::integrate(sys, {0.5, 0.0}, {0.1}, cfg),
                    integrate::InconsistentIc);
}

TEST_CASE("log_time_grid: boundary counts and exact geometry") {
    const auto g1 = integrate::log_time_grid(1.0, 100.0, 1.0);
    REQUIRE(g1.size() == 3);
    CHECK(g1[0] == doctest::Approx(1.0));
    CHECK(g1[1] == doctest::Approx(10.0));
    CHECK(g1[2] == doctest::Approx(100.0));

    const auto g2 = integrate::log_time_grid(1e-2, 1e5, 2.0);
    CHECK(g2.size() == 15);

    for (std::size_t i = 2; i < g2.size(); ++i) {
        const double r1 = g2[i] / g2[i - 1], r0 = g2[i - 1] / g2[i - 2];
        CHECK(std::abs(r1 - r0) <= 1e-12 * r0);
    }
}

TEST_CASE("stiff synthetic system integrates through the boundary layer") {
    auto ss = dae::make_synthetic_two_timescale(1000.0, 2, 2, 2);
    // start off the slow manifold: the fast states must relax
    Vec x0 = ss.sys.assemble_state({0.5, -0.3}, {0.4, 0.4});
    auto [xc, zc] = integrate::project_consistent(ss.sys, x0, false);
    IntegratorConfig cfg;
    cfg.t1 = 1.0;
    auto tr = integrate::integrate(ss.sys, xc, zc, cfg);
    const Vec xs_end = ss.sys.slow_of(tr.x.back());
    const Vec xf_end = ss.sys.fast_of(tr.x.back());
    const Vec xf_qss = ss.internals.xf_star(xs_end);
    // after t >> 1/alpha the fast states ride the manifold
    for (std::size_t k = 0; k < 2; ++k)
        CHECK(std::abs(xf_end[k] - xf_qss[k]) <= 1e-4);
    CHECK(tr.stats["max_g_residual"] <= 1e-8);
}

TEST_CASE("qss probe: radau measurement obeys the boundary-layer bound") {
    for (double alpha : {10.0, 100.0}) {
        const double v = 0.5, t_w = 0.08;
        auto sys = testsupport::make_qss_probe(alpha, v);
        IntegratorConfig cfg;
        cfg.t1 = t_w;
        cfg.rtol = 1e-10;
        cfg.atol = 1e-12;
        auto tr = integrate::integrate(sys, {0.2, 0.9}, {}, cfg);
        const double measured = std::abs(tr.x.back()[1] - tr.x.back()[0]);
        const double exact = std::abs(
            testsupport::qss_probe_fast_exact(alpha, v, 0.2, 0.9, t_w) - (0.2 + v * t_w));
        CHECK(std::abs(measured - exact) <= 1e-8);
        CHECK(measured <= std::abs(0.9 - 0.2) * std::exp(-alpha * t_w) + v / alpha + 1e-10);
    }
}

TEST_CASE("trajectory csv and json round-trip at 17 significant digits") {
    auto sys = dae::make_robertson();
    IntegratorConfig cfg;
    cfg.t0 = 1e-2;
    cfg.t1 = 1.0;
    cfg.dense_output_times = {0.1, 0.5};
    auto [x0, z0] = integrate::project_consistent(sys, {1.0, 0.0});
    auto tr = integrate::integrate(sys, x0, z0, cfg);

    const auto csv = integrate::to_csv(tr);
    const auto back = integrate::from_csv(csv);
    REQUIRE(back.size() == tr.size());
    for (std::size_t i = 0; i < tr.size(); ++i) {
        CHECK(back.times[i] == tr.times[i]);
        for (std::size_t k = 0; k < tr.x[i].size(); ++k) CHECK(back.x[i][k] == tr.x[i][k]);
        for (std::size_t k = 0; k < tr.z[i].size(); ++k) CHECK(back.z[i][k] == tr.z[i][k]);
    }

    const auto js = integrate::to_json(tr);
    const auto jback = integrate::from_json(js);
    for (std::size_t i = 0; i < tr.size(); ++i) {
        CHECK(jback.times[i] == tr.times[i]);
        for (std::size_t k = 0; k < tr.x[i].size(); ++k) CHECK(jback.x[i][k] == tr.x[i][k]);
    }
}

TEST_CASE("piecewise input steps are honored at the breakpoint") {
    auto sys = dae::make_smib();
    sys.input = dae::InputSchedule::step({1.0}, {0.7}, 0.05);
    auto [x0, z0] = integrate::project_consistent(sys, {0.4, 0.0});
    IntegratorConfig cfg;
    cfg.t1 = 0.1;
    cfg.dense_output_times = {0.049, 0.051};
    auto tr = integrate::integrate(sys, x0, z0, cfg);
    // voltage drops discontinuously when the sag hits
    const double v_before = tr.z[1][0];
    const double v_after = tr.z[2][0];
    CHECK(v_before > v_after + 0.05);
    CHECK(tr.stats["max_g_residual"] <= 1e-8);
}
