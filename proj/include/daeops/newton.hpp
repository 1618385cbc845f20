#pragma once

#include <optional>

#include "daeops/dae.hpp"

namespace daeops::newton {

using dae::DaeSystem;
using dae::DenseMatrix;
using dae::Vec;

struct NewtonConfig {
    double tol_residual = 1e-12;  // on ||F||_inf
    std::size_t max_iters = 25;
    double min_step = 1.0 / 64.0;  // halving line-search floor
    enum class WarmStart { previous_solution, user_supplied, heuristic };
    /// heuristic uses the system's qss_warm_start when available and the
    /// supplied y0 otherwise; the other two take y0 as given.
    WarmStart warm_start = WarmStart::heuristic;
};

/// Outcome of a Newton solve. Non-convergence is reported through the
/// converged flag (rollout surfaces it as an online reliability signal);
/// only structural failures throw.
struct NewtonResult {
    Vec y_star;  // (x_f, z) for the extended layer, z for the algebraic layer
    double residual_norm = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    std::size_t n_fast = 0, n_alg = 0;
    /// LU of the Jacobian at y_star, kept for IFT reuse; absent only when
    /// the final Jacobian is singular.
    std::optional<linalg::LuFactorization> jacobian_lu;

    Vec fast_part() const { return Vec(y_star.begin(), y_star.begin() + n_fast); }
    Vec alg_part() const { return Vec(y_star.begin() + n_fast, y_star.end()); }
};

/// Extended Jacobian singular: reports the Schur factors det(Jz), det(S)
/// so the failing side of the factorization is visible.
struct SingularExtendedJacobian : std::runtime_error {
    double det_jz, det_schur;
    SingularExtendedJacobian(double jz, double s)
        : std::runtime_error("extended Jacobian singular (det Jz = " +
                             std::to_string(jz) + ", det S = " + std::to_string(s) + ")"),
          det_jz(jz),
          det_schur(s) {}
};

struct SingularJacobian : std::runtime_error {
    SingularJacobian() : std::runtime_error("algebraic Jacobian singular") {}
};

/// Newton on g(x, z) = 0 over z with the full state held fixed
/// (standard-Newton mode: the network would predict all of x).
NewtonResult solve_algebraic(const DaeSystem& sys, const Vec& x_full, const Vec& z0,
                             const Vec& mu, const Vec& u, const NewtonConfig& cfg = {});

/// Newton on the extended residual F = [f_fast; g] = 0 over y = (x_f, z)
/// given the slow states. Damped steps accept only residual decreases.
NewtonResult solve_extended(const DaeSystem& sys, const Vec& xs, const Vec& y0,
                            const Vec& mu, const Vec& u, const NewtonConfig& cfg = {});

struct IftSensitivity {
    DenseMatrix d_ystar_d_xs;  // (n_f + n_z) x n_s
};

/// d y* / d x_s = -(dF/dy)^{-1} dF/dx_s from the retained factorization.
IftSensitivity ift_sensitivity(const DaeSystem& sys, const Vec& xs,
                               const NewtonResult& result, const Vec& mu, const Vec& u);

/// Standard-mode analogue: d z* / d x = -Jz^{-1} dg/dx over the full state.
DenseMatrix ift_sensitivity_standard(const DaeSystem& sys, const Vec& x_full,
                                     const NewtonResult& result, const Vec& mu,
                                     const Vec& u);

/// cotangent^T (d y*/d x_s) via one adjoint solve with the retained LU
/// transpose; never materializes the sensitivity matrix.
Vec vjp_through_layer(const DaeSystem& sys, const Vec& xs, const NewtonResult& result,
                      const Vec& cotangent_on_ystar, const Vec& mu, const Vec& u);

/// Standard-mode VJP: cotangent on z* pulled back to the full state.
Vec vjp_through_layer_standard(const DaeSystem& sys, const Vec& x_full,
                               const NewtonResult& result, const Vec& cotangent_on_z,
                               const Vec& mu, const Vec& u);

struct SchurDeterminants {
    double det_jz = 1.0;
    double det_schur = 1.0;
    double det_extended = 1.0;
};

/// det(dF/dy), det(Jz) and det(S): the two sides of the Schur factorization.
SchurDeterminants schur_determinants(const DaeSystem& sys, const Vec& x, const Vec& z,
                                     const Vec& mu, const Vec& u);

struct ContaminationReport {
    double L_s_est = 0.0;       // manifold slope of f_slow w.r.t. x_s
    double L_kappa_est = 0.0;   // fast-to-slow coupling, direct + through g
    double rhs_error_standard = 0.0;
    double rhs_error_extended = 0.0;
};

/// Perturbs slow states by eps_s (both modes) and fast states by eps_f
/// (standard mode only), re-solves the respective constraint system and
/// measures the slow vector-field error against the unperturbed truth.
ContaminationReport contamination_probe(const DaeSystem& sys, const Vec& x_true,
                                        const Vec& mu, const Vec& u, double eps_s,
                                        double eps_f, const NewtonConfig& cfg = {});

}  // namespace daeops::newton
