#pragma once

#include "daeops/newton.hpp"
#include "daeops/trajectory.hpp"

namespace daeops::integrate {

using dae::DaeSystem;
using dae::Vec;

struct IntegratorConfig {
    enum class Method { radau3, trapezoid };
    Method method = Method::radau3;
    double rtol = 1e-8;
    double atol = 1e-10;
    double fixed_step = 0.0;  // > 0 disables adaptivity (order studies)
    double t0 = 0.0, t1 = 1.0;
    std::vector<double> dense_output_times;  // landed on exactly and stored
    bool store_all_steps = false;
    double initial_step = 0.0;  // 0 -> heuristic
    std::size_t max_steps = 2000000;
    double stage_newton_tol = 0.0;  // 0 -> derived from atol
    bool project_initial = false;   // consistency projection on the IC
};

struct StepFailure : std::runtime_error {
    double t;
    explicit StepFailure(double at)
        : std::runtime_error("integrator step failure at t = " + std::to_string(at)),
          t(at) {}
};

struct InconsistentIc : std::runtime_error {
    double g_norm;
    explicit InconsistentIc(double gn)
        : std::runtime_error("initial condition violates g = 0 (|g| = " +
                             std::to_string(gn) + "); pass project_initial"),
          g_norm(gn) {}
};

/// Reference implicit integration of the full DAE (stage equations include
/// g = 0). Training never calls this; validation and conformal calibration do.
Trajectory integrate(const DaeSystem& sys, const Vec& x0, const Vec& z0,
                     const IntegratorConfig& cfg);

/// Solve g = 0 for z (and, when qss_fast is set, [f_fast; g] = 0 for the
/// fast states too) given the slow entries of x0_guess. The tolerance must
/// respect the system's stiffness-scaled residual floor.
std::pair<Vec, Vec> project_consistent(const DaeSystem& sys, const Vec& x0_guess,
                                       bool qss_fast = true,
                                       const newton::NewtonConfig& cfg = {});

/// Geometric time grid: boundaries t0 * 10^(k / windows_per_decade).
std::vector<double> log_time_grid(double t0, double t1, double windows_per_decade);

// --- serialization (17 significant digits; parse(emit(x)) == x) -----------
std::string to_csv(const Trajectory& tr);
Trajectory from_csv(const std::string& text);
std::string to_json(const Trajectory& tr);
Trajectory from_json(const std::string& text);

}  // namespace daeops::integrate
