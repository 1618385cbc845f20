#pragma once

#include <complex>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "daeops/linalg.hpp"

namespace daeops::dae {

using linalg::DenseMatrix;
using linalg::Vec;

/// Slow/fast split of the differential states. Index lists refer to the
/// full state vector x and must be disjoint and exhaustive.
struct DaePartition {
    std::vector<std::size_t> slow_indices;
    std::vector<std::size_t> fast_indices;

    std::size_t n_slow() const { return slow_indices.size(); }
    std::size_t n_fast() const { return fast_indices.size(); }
    std::size_t n_x() const { return slow_indices.size() + fast_indices.size(); }

    void validate() const;  // throws on overlap / gaps
};

/// Piecewise-constant external input u(t). values[i] applies on
/// [times[i], times[i+1]); queries before the first breakpoint return
/// values"[0]". A zero-dimensional schedule models autonomous systems.
struct InputSchedule {
    std::size_t dim = 0;
    std::vector<double> times;
    std::vector<Vec> values;

    static InputSchedule none() { return {}; }
    static InputSchedule constant(const Vec& value);
    static InputSchedule step(const Vec& before, const Vec& after, double t_switch);

    Vec at(double t) const;
};

using ResidualFn =
    std::function<Vec(const Vec& x, const Vec& z, const Vec& mu, const Vec& u)>;
using JacobianFn =
    std::function<DenseMatrix(const Vec& x, const Vec& z, const Vec& mu, const Vec& u)>;

/// Semi-explicit index-1 DAE
///     x' = f(x, z, mu, u(t)),   0 = g(x, z, mu, u(t))
/// with analytic Jacobians and a slow/fast partition of x. Systems are
/// immutable after construction; all callbacks are pure.
struct DaeSystem {
    std::string name;
    DaePartition partition;
    std::size_t n_x = 0, n_z = 0, n_u = 0;

    std::vector<std::string> param_names;
    Vec mu0;  // default parameter vector

    ResidualFn f, g;
    JacobianFn dfdx, dfdz, dgdx, dgdz;

    InputSchedule input;

    /// Optional closed-form solve of g(x, z) = 0 for z given the full x.
    /// When present, rollout re-emits algebraic states through it so that
    /// constraints evaluated on emitted points hit the arithmetic-identity
    /// floor (exactly zero for Robertson).
    std::function<Vec(const Vec& x, const Vec& mu, const Vec& u)> z_closed_form;

    /// Optional warm start for the extended solve: (x_s, mu, u) -> y0 = (x_f, z).
    std::function<Vec(const Vec& xs, const Vec& mu, const Vec& u)> qss_warm_start;

    /// Optional conserved-quantity residual for drift reporting (used by the
    /// Robertson ODE-vs-DAE comparison, where the constraint is not enforced).
    std::function<double(const Vec& x, const Vec& z)> conservation_check;

    // --- partition-aware views ------------------------------------------
    std::size_t n_slow() const { return partition.n_slow(); }
    std::size_t n_fast() const { return partition.n_fast(); }

    Vec assemble_state(const Vec& xs, const Vec& xf) const;
    Vec slow_of(const Vec& x) const;
    Vec fast_of(const Vec& x) const;

    Vec f_slow(const Vec& x, const Vec& z, const Vec& mu, const Vec& u) const;
    Vec f_fast(const Vec& x, const Vec& z, const Vec& mu, const Vec& u) const;

    // Jacobian blocks gathered from dfdx/dfdz/dgdx/dgdz
    DenseMatrix d_fslow_dxs(const Vec& x, const Vec& z, const Vec& mu, const Vec& u) const;
    DenseMatrix d_fslow_dxf(const Vec& x, const Vec& z, const Vec& mu, const Vec& u) const;
    DenseMatrix d_fslow_dz(const Vec& x, const Vec& z, const Vec& mu, const Vec& u) const;
    DenseMatrix d_ffast_dxs(const Vec& x, const Vec& z, const Vec& mu, const Vec& u) const;
    DenseMatrix d_ffast_dxf(const Vec& x, const Vec& z, const Vec& mu, const Vec& u) const;
    DenseMatrix d_ffast_dz(const Vec& x, const Vec& z, const Vec& mu, const Vec& u) const;
    DenseMatrix d_g_dxs(const Vec& x, const Vec& z, const Vec& mu, const Vec& u) const;
    DenseMatrix d_g_dxf(const Vec& x, const Vec& z, const Vec& mu, const Vec& u) const;
    DenseMatrix d_g_dz(const Vec& x, const Vec& z, const Vec& mu, const Vec& u) const;

    /// Jacobian of the extended residual F = [f_fast; g] w.r.t. y = (x_f, z).
    DenseMatrix extended_jacobian(const Vec& x, const Vec& z, const Vec& mu,
                                  const Vec& u) const;
    /// Jacobian of F w.r.t. the slow states.
    DenseMatrix extended_jacobian_xs(const Vec& x, const Vec& z, const Vec& mu,
                                     const Vec& u) const;
};

/// Thrown when J_z = dg/dz is singular at the query point (index-1 failure).
struct SingularJz : std::runtime_error {
    SingularJz() : std::runtime_error("algebraic Jacobian J_z is singular") {}
};

/// Thrown by the SMIB voltage solve when the quadratic has no real root.
struct NoRealRoot : std::runtime_error {
    double discriminant;
    explicit NoRealRoot(double d)
        : std::runtime_error("algebraic constraint has no real root"), discriminant(d) {}
};

/// Central finite-difference validation of every analytic Jacobian at one
/// point; step 1e-6*(1+|x|), tolerance 1e-5 relative. Every built-in
/// constructor runs this before returning.
void check_jacobians(const DaeSystem& sys, const Vec& x, const Vec& z, const Vec& mu,
                     const Vec& u, double rel_tol = 1e-5);

struct SpectralGapReport {
    std::vector<std::complex<double>> fast_eigs;  // eigenvalues of S
    std::vector<std::complex<double>> slow_eigs;  // reduced slow Jacobian
    double alpha = 0.0;        // min |Re eig(S)|, the fast decay rate
    bool fast_stable = false;  // all Re eig(S) < 0
    double gap = 0.0;          // min|Re fast| / max|Re slow|
    double sigma_min_S = 0.0;
    double sigma_min_extJ = 0.0;
};

/// Schur-complement diagnostics at a state: S = A - B Jz^{-1} C, its
/// spectrum, the slow spectrum after eliminating (x_f, z), and the
/// singular-value margins. Throws SingularJz when index-1 regularity fails.
SpectralGapReport spectral_gap_report(const DaeSystem& sys, const Vec& x, const Vec& z,
                                      const Vec& mu, const Vec& u);

// ---------------------------------------------------------------------------
// Built-in systems
// ---------------------------------------------------------------------------

/// Robertson kinetics as an index-1 DAE: slow y1, fast y2, algebraic y3
/// with the mass-balance constraint. k1 = 0.04, k2 = 1e4, k3 = 3e7.
DaeSystem make_robertson();

/// Robertson with conservation treated as an ODE: states (y1, y3) slow,
/// y2 fast, no algebraic constraint. The comparison twin for rollouts.
DaeSystem make_robertson_ode();

struct SmibParams {
    double inertia_h = 3.5;     // machine inertia constant [s]
    double damping = 2.0;       // damping coefficient [pu]
    double p_mech = 0.8;        // mechanical power [pu]
    double emf = 1.2;           // internal EMF magnitude [pu]
    double reactance = 0.65;    // transfer reactance [pu]
    double v_ref = 0.25;        // infinite-bus contribution to the bus quadratic
    double k_e = 0.875;         // EMF contribution coefficient
    double q_load = 0.1;        // reactive load term
    double omega_base = 2.0 * M_PI * 60.0;
};

/// Classical single-machine infinite-bus model: states (delta, omega),
/// scalar algebraic bus voltage V from a quadratic constraint. The external
/// input scales the infinite-bus term (voltage sag disturbance).
DaeSystem make_smib(const SmibParams& p = {});

/// Positive root of the SMIB bus-voltage quadratic at angle delta.
/// Throws NoRealRoot past the maximum-transfer angle.
double smib_voltage_root(double delta, const SmibParams& p, double u_scale = 1.0);

struct SyntheticParams {
    double kappa = 100.0;
    std::size_t n_slow = 2;
    std::size_t n_fast = 2;
    std::size_t n_alg = 2;
    double coupling_fast = 0.6;   // scale of df_slow/dx_f
    double coupling_alg = 0.4;    // scale of df_slow/dz
    std::uint64_t seed = 0x5EEDDAE5ULL;
};

/// Closed-form pieces of the synthetic system, usable as oracles.
struct SyntheticInternals {
    Vec a_slow;        // diagonal slow rates, in [-1.9, -0.8]
    Vec fast_rates;    // r_i in [2, 20]; fast eigenvalues are -kappa * r_i
    double c_nl = 0.3, gamma = 0.3, beta = 0.2;
    DenseMatrix L, C_s, W_s, P, Q, W_f, K_f, K_z, B_u;
    double kappa = 0.0;

    Vec z_star(const Vec& xs) const;
    Vec xf_star(const Vec& xs) const;
    DenseMatrix dz_star_dxs(const Vec& xs) const;
    DenseMatrix dxf_star_dxs(const Vec& xs) const;
};

struct SyntheticSystem {
    DaeSystem sys;
    SyntheticInternals internals;
};

/// Two-timescale synthetic DAE with configurable stiffness: slow Jacobian
/// in [-2, -0.5], fast rates -kappa*[2, 20] (log spread), unit
/// lower-triangular J_z, and a closed-form slow manifold. The extended
/// residual is linear in (x_f, z), so Newton lands in one step.
SyntheticSystem make_synthetic_two_timescale(const SyntheticParams& p = {});

inline SyntheticSystem make_synthetic_two_timescale(double kappa, std::size_t n_slow,
                                                    std::size_t n_fast,
                                                    std::size_t n_alg) {
    SyntheticParams p;
    p.kappa = kappa;
    p.n_slow = n_slow;
    p.n_fast = n_fast;
    p.n_alg = n_alg;
    return make_synthetic_two_timescale(p);
}

// ---------------------------------------------------------------------------
// Coupled systems
// ---------------------------------------------------------------------------

/// One component of a coupled system. The shared network variables v are
/// appended to the component's input vector u (v_offset marks where), so
/// the plain DaeSystem callbacks stay reusable; the extra partials cover
/// the v-dependence.
struct CoupledComponent {
    DaeSystem sys;
    std::size_t v_offset = 0;  // v occupies u[v_offset .. v_offset+n_v)
    JacobianFn dfdv, dgdv;
};

struct CoupledSystem {
    std::vector<CoupledComponent> components;
    std::size_t n_v = 0;

    using NetResidualFn =
        std::function<Vec(const std::vector<Vec>& z_list, const Vec& v)>;
    using NetJacobianFn =
        std::function<DenseMatrix(const std::vector<Vec>& z_list, const Vec& v)>;

    NetResidualFn g_net;
    NetJacobianFn dgnet_dv;
    std::vector<NetJacobianFn> dgnet_dz;  // one per component
};

struct CoupledSyntheticParams {
    std::size_t n_components = 2;
    double coupling_strength = 0.4;  // contraction ratio scale
    double kappa = 100.0;
    std::uint64_t seed = 0xC0501EDULL;
};

/// N small synthetic components sharing a scalar network variable through
/// their local constraints; the constructed contraction ratio is close to
/// coupling_strength.
CoupledSystem make_coupled_synthetic(const CoupledSyntheticParams& p = {});

// ---------------------------------------------------------------------------
// JSON configuration (External Interface)
// ---------------------------------------------------------------------------

/// Build a system from a configuration object:
///   {"system": "robertson"|"robertson_ode"|"smib"|"synthetic",
///    "params": {...}, "partition_override": {...}, "input_schedule": {...}}
DaeSystem load_system_config(const std::string& json_text);

}  // namespace daeops::dae
