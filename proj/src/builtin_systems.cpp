#include <cmath>
#include <memory>

#include "daeops/dae.hpp"
#include "daeops/util.hpp"

namespace daeops::dae {

using util::require;

namespace {

double sech2(double t) {
    const double c = std::cosh(t);
    return 1.0 / (c * c);
}

Vec tanh_vec(const Vec& v) {
    Vec out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::tanh(v[i]);
    return out;
}

DenseMatrix diag_sech2_times(const Vec& arg, const DenseMatrix& w) {
    // diag(sech^2(arg)) * w
    DenseMatrix out = w;
    for (std::size_t i = 0; i < out.rows(); ++i) {
        const double s = sech2(arg[i]);
        for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) *= s;
    }
    return out;
}

Vec linspace(double lo, double hi, std::size_t n) {
    Vec v(n);
    if (n == 1) {
        v[0] = 0.5 * (lo + hi);
        return v;
    }
    for (std::size_t i = 0; i < n; ++i)
        v[i] = lo + (hi - lo) * double(i) / double(n - 1);
    return v;
}

Vec logspace(double lo, double hi, std::size_t n) {
    // geometric spacing between lo and hi
    Vec v(n);
    if (n == 1) {
        v[0] = lo;
        return v;
    }
    const double ratio = std::log(hi / lo) / double(n - 1);
    for (std::size_t i = 0; i < n; ++i) v[i] = lo * std::exp(ratio * double(i));
    return v;
}

/// Numerically stable positive root of a*y^2 + b*y + c = 0 used by the
/// Robertson warm starts. Falls back to the root of larger value when no
/// positive root exists (network predictions can wander outside [0,1]).
double quadratic_root_positive(double a, double b, double c) {
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) return 0.0;
    const double sq = std::sqrt(disc);
    const double q = -0.5 * (b + (b >= 0.0 ? sq : -sq));
    double r1 = (a != 0.0) ? q / a : -c / b;
    double r2 = (q != 0.0) ? c / q : r1;
    const double hi = std::max(r1, r2), lo = std::min(r1, r2);
    return hi > 0.0 ? (lo > 0.0 ? lo : hi) : hi;
}

}  // namespace

// ---------------------------------------------------------------------------
// Robertson
// ---------------------------------------------------------------------------

DaeSystem make_robertson() {
    DaeSystem sys;
    sys.name = "robertson";
    sys.n_x = 2;
    sys.n_z = 1;
    sys.n_u = 0;
    sys.partition.slow_indices = {0};
    sys.partition.fast_indices = {1};
    sys.param_names = {"k1", "k2", "k3"};
    sys.mu0 = {0.04, 1.0e4, 3.0e7};
    sys.input = InputSchedule::none();

    sys.f = [](const Vec& x, const Vec& z, const Vec& mu, const Vec&) -> Vec {
        const double y1 = x[0], y2 = x[1], y3 = z[0];
        return {-mu[0] * y1 + mu[1] * y2 * y3, mu[0] * y1 - mu[1] * y2 * y3 - mu[2] * y2 * y2};
    };
    // conservation written as ((1 - y1) - y2) - y3 so that the closed-form
    // y3 emission cancels it bit-exactly
    sys.g = [](const Vec& x, const Vec& z, const Vec&, const Vec&) -> Vec {
        return {((1.0 - x[0]) - x[1]) - z[0]};
    };
    sys.dfdx = [](const Vec& x, const Vec& z, const Vec& mu, const Vec&) {
        const double y2 = x[1], y3 = z[0];
        return DenseMatrix::from_rows(
            {{-mu[0], mu[1] * y3}, {mu[0], -mu[1] * y3 - 2.0 * mu[2] * y2}});
    };
    sys.dfdz = [](const Vec& x, const Vec&, const Vec& mu, const Vec&) {
        const double y2 = x[1];
        return DenseMatrix::from_rows({{mu[1] * y2}, {-mu[1] * y2}});
    };
    sys.dgdx = [](const Vec&, const Vec&, const Vec&, const Vec&) {
        return DenseMatrix::from_rows({{-1.0, -1.0}});
    };
    sys.dgdz = [](const Vec&, const Vec&, const Vec&, const Vec&) {
        return DenseMatrix::from_rows({{-1.0}});
    };
    sys.z_closed_form = [](const Vec& x, const Vec&, const Vec&) -> Vec {
        return {(1.0 - x[0]) - x[1]};
    };
    // quadratic warm start: substitute y3 = 1 - y1 - y2 into f_fast = 0
    sys.qss_warm_start = [](const Vec& xs, const Vec& mu, const Vec&) -> Vec {
        const double y1 = xs[0];
        const double a = mu[1] - mu[2];
        const double b = -mu[1] * (1.0 - y1);
        const double c = mu[0] * y1;
        const double y2 = quadratic_root_positive(a, b, c);
        return {y2, (1.0 - y1) - y2};
    };

    sys.conservation_check = [](const Vec& x, const Vec& z) {
        return ((1.0 - x[0]) - x[1]) - z[0];
    };

    check_jacobians(sys, {0.7, 1e-5}, {0.3 - 1e-5}, sys.mu0, {});
    return sys;
}

DaeSystem make_robertson_ode() {
    DaeSystem sys;
    sys.name = "robertson_ode";
    sys.n_x = 3;
    sys.n_z = 0;
    sys.n_u = 0;
    sys.partition.slow_indices = {0, 2};  // (y1, y3) predicted
    sys.partition.fast_indices = {1};
    sys.param_names = {"k1", "k2", "k3"};
    sys.mu0 = {0.04, 1.0e4, 3.0e7};
    sys.input = InputSchedule::none();

    sys.f = [](const Vec& x, const Vec&, const Vec& mu, const Vec&) -> Vec {
        const double y1 = x[0], y2 = x[1], y3 = x[2];
        return {-mu[0] * y1 + mu[1] * y2 * y3,
                mu[0] * y1 - mu[1] * y2 * y3 - mu[2] * y2 * y2, mu[2] * y2 * y2};
    };
    sys.g = [](const Vec&, const Vec&, const Vec&, const Vec&) -> Vec { return {}; };
    sys.dfdx = [](const Vec& x, const Vec&, const Vec& mu, const Vec&) {
        const double y2 = x[1], y3 = x[2];
        return DenseMatrix::from_rows(
            {{-mu[0], mu[1] * y3, mu[1] * y2},
             {mu[0], -mu[1] * y3 - 2.0 * mu[2] * y2, -mu[1] * y2},
             {0.0, 2.0 * mu[2] * y2, 0.0}});
    };
    sys.dfdz = [](const Vec&, const Vec&, const Vec&, const Vec&) {
        return DenseMatrix(3, 0);
    };
    sys.dgdx = [](const Vec&, const Vec&, const Vec&, const Vec&) {
        return DenseMatrix(0, 3);
    };
    sys.dgdz = [](const Vec&, const Vec&, const Vec&, const Vec&) {
        return DenseMatrix(0, 0);
    };
    sys.qss_warm_start = [](const Vec& xs, const Vec& mu, const Vec&) -> Vec {
        // solve f_fast(y1, y2, y3) = 0 for y2 given (y1, y3)
        const double y1 = xs[0], y3 = xs[1];
        return {quadratic_root_positive(-mu[2], -mu[1] * y3, mu[0] * y1)};
    };

    sys.conservation_check = [](const Vec& x, const Vec&) {
        return x[0] + x[1] + x[2] - 1.0;
    };

    check_jacobians(sys, {0.7, 1e-5, 0.3}, {}, sys.mu0, {});
    return sys;
}

// ---------------------------------------------------------------------------
// SMIB
// ---------------------------------------------------------------------------

double smib_voltage_root(double delta, const SmibParams& p, double u_scale) {
    const double b = p.v_ref * u_scale + p.k_e * p.emf * std::cos(delta);
    const double disc = b * b - 4.0 * p.q_load;
    if (disc < 0.0) throw NoRealRoot(disc);
    return 0.5 * (b + std::sqrt(disc));
}

DaeSystem make_smib(const SmibParams& p) {
    DaeSystem sys;
    sys.name = "smib";
    sys.n_x = 2;
    sys.n_z = 1;
    sys.n_u = 1;
    sys.partition.slow_indices = {0, 1};
    sys.partition.fast_indices = {};
    sys.param_names = {"inertia_h", "damping", "p_mech", "emf",      "reactance",
                       "v_ref",     "k_e",     "q_load", "omega_base"};
    sys.mu0 = {p.inertia_h, p.damping, p.p_mech, p.emf,      p.reactance,
               p.v_ref,     p.k_e,     p.q_load, p.omega_base};
    sys.input = InputSchedule::constant({1.0});

    auto uval = [](const Vec& u) { return u.empty() ? 1.0 : u[0]; };

    sys.f = [uval](const Vec& x, const Vec& z, const Vec& mu, const Vec& u) -> Vec {
        (void)u;
        const double delta = x[0], omega = x[1], v = z[0];
        const double h = mu[0], d = mu[1], pm = mu[2], e = mu[3], xr = mu[4], wb = mu[8];
        const double pe = e * v * std::sin(delta) / xr;
        return {wb * omega, (pm - pe - d * omega) / (2.0 * h)};
    };
    sys.g = [uval](const Vec& x, const Vec& z, const Vec& mu, const Vec& u) -> Vec {
        const double delta = x[0], v = z[0];
        const double b = mu[5] * uval(u) + mu[6] * mu[3] * std::cos(delta);
        return {v * v - b * v + mu[7]};
    };
    sys.dfdx = [](const Vec& x, const Vec& z, const Vec& mu, const Vec&) {
        const double delta = x[0], v = z[0];
        const double h = mu[0], d = mu[1], e = mu[3], xr = mu[4], wb = mu[8];
        return DenseMatrix::from_rows(
            {{0.0, wb}, {-e * v * std::cos(delta) / (xr * 2.0 * h), -d / (2.0 * h)}});
    };
    sys.dfdz = [](const Vec& x, const Vec&, const Vec& mu, const Vec&) {
        const double delta = x[0];
        const double h = mu[0], e = mu[3], xr = mu[4];
        return DenseMatrix::from_rows({{0.0}, {-e * std::sin(delta) / (xr * 2.0 * h)}});
    };
    sys.dgdx = [](const Vec& x, const Vec& z, const Vec& mu, const Vec&) {
        const double delta = x[0], v = z[0];
        return DenseMatrix::from_rows({{mu[6] * mu[3] * std::sin(delta) * v, 0.0}});
    };
    sys.dgdz = [uval](const Vec& x, const Vec& z, const Vec& mu, const Vec& u) {
        const double delta = x[0], v = z[0];
        const double b = mu[5] * uval(u) + mu[6] * mu[3] * std::cos(delta);
        return DenseMatrix::from_rows({{2.0 * v - b}});
    };
    sys.z_closed_form = [uval](const Vec& x, const Vec& mu, const Vec& u) -> Vec {
        SmibParams q;
        q.v_ref = mu[5];
        q.k_e = mu[6];
        q.emf = mu[3];
        q.q_load = mu[7];
        return {smib_voltage_root(x[0], q, uval(u))};
    };
    sys.qss_warm_start = [sys_zcf = sys.z_closed_form](const Vec& xs, const Vec& mu,
                                                       const Vec& u) -> Vec {
        SmibParams q;
        q.v_ref = mu[5];
        q.k_e = mu[6];
        q.emf = mu[3];
        q.q_load = mu[7];
        return {smib_voltage_root(xs[0], q, u.empty() ? 1.0 : u[0])};
    };

    check_jacobians(sys, {0.4, 0.01}, {smib_voltage_root(0.4, p, 1.0)}, sys.mu0, {1.0});
    return sys;
}

// ---------------------------------------------------------------------------
// Synthetic two-timescale system
// ---------------------------------------------------------------------------

Vec SyntheticInternals::z_star(const Vec& xs) const {
    const std::size_t nz = L.rows();
    if (nz == 0) return {};
    Vec rhs = C_s * xs;
    if (gamma != 0.0) {
        const Vec t = tanh_vec(W_s * xs);
        for (std::size_t i = 0; i < nz; ++i) rhs[i] += gamma * t[i];
    }
    // L unit lower triangular: forward substitution
    Vec z(nz);
    for (std::size_t i = 0; i < nz; ++i) {
        double s = rhs[i];
        for (std::size_t j = 0; j < i; ++j) s -= L(i, j) * z[j];
        z[i] = s;
    }
    return z;
}

Vec SyntheticInternals::xf_star(const Vec& xs) const {
    const std::size_t nf = fast_rates.size();
    if (nf == 0) return {};
    Vec out = P * xs;
    const Vec zs = z_star(xs);
    if (!zs.empty()) {
        const Vec qz = Q * zs;
        for (std::size_t i = 0; i < nf; ++i) out[i] += qz[i];
    }
    const Vec t = tanh_vec(W_f * xs);
    for (std::size_t i = 0; i < nf; ++i) out[i] += beta * t[i];
    return out;
}

DenseMatrix SyntheticInternals::dz_star_dxs(const Vec& xs) const {
    const std::size_t nz = L.rows();
    if (nz == 0) return DenseMatrix(0, xs.size());
    DenseMatrix rhs = C_s + diag_sech2_times(W_s * xs, W_s).scaled(gamma);
    // forward substitution column-wise against unit lower triangular L
    DenseMatrix out(nz, xs.size());
    for (std::size_t c = 0; c < xs.size(); ++c) {
        for (std::size_t i = 0; i < nz; ++i) {
            double s = rhs(i, c);
            for (std::size_t j = 0; j < i; ++j) s -= L(i, j) * out(j, c);
            out(i, c) = s;
        }
    }
    return out;
}

DenseMatrix SyntheticInternals::dxf_star_dxs(const Vec& xs) const {
    const std::size_t nf = fast_rates.size();
    if (nf == 0) return DenseMatrix(0, xs.size());
    DenseMatrix out = P + diag_sech2_times(W_f * xs, W_f).scaled(beta);
    if (L.rows() > 0) out = out + Q * dz_star_dxs(xs);
    return out;
}

SyntheticSystem make_synthetic_two_timescale(const SyntheticParams& p) {
    require(p.kappa >= 1.0, "synthetic: kappa must be >= 1");
    require(p.n_slow >= 1, "synthetic: need at least one slow state");
    const std::size_t ns = p.n_slow, nf = p.n_fast, nz = p.n_alg;

    auto I = std::make_shared<SyntheticInternals>();
    I->kappa = p.kappa;
    I->a_slow = linspace(-1.9, -0.8, ns);
    I->fast_rates = nf > 0 ? logspace(2.0, 20.0, nf) : Vec{};

    util::Rng rng(p.seed);
    auto fill = [&rng](DenseMatrix& m, double lo, double hi) {
        for (std::size_t i = 0; i < m.rows(); ++i)
            for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) = rng.uniform(lo, hi);
    };
    I->L = DenseMatrix::identity(nz);
    for (std::size_t i = 0; i < nz; ++i)
        for (std::size_t j = 0; j < i; ++j) I->L(i, j) = 0.4 / double(i - j + 1);
    I->C_s = DenseMatrix(nz, ns);
    fill(I->C_s, -0.8, 0.8);
    I->W_s = DenseMatrix(nz, ns);
    fill(I->W_s, -0.5, 0.5);
    // fast states track slow states with near-uniform gain (as converter
    // currents track their references); the spread stays mild so induced
    // uncertainty bands scale consistently across directions
    I->P = DenseMatrix(nf, ns);
    fill(I->P, -0.12, 0.12);
    for (std::size_t i = 0; i < nf; ++i) I->P(i, i % std::max<std::size_t>(ns, 1)) += 0.45;
    I->Q = DenseMatrix(nf, nz);
    fill(I->Q, -0.15, 0.15);
    I->W_f = DenseMatrix(nf, ns);
    fill(I->W_f, -0.3, 0.3);
    I->K_f = DenseMatrix(ns, nf);
    fill(I->K_f, -1.0, 1.0);
    if (nf > 0) I->K_f = I->K_f.scaled(p.coupling_fast / std::sqrt(double(nf)));
    I->K_z = DenseMatrix(ns, nz);
    fill(I->K_z, -1.0, 1.0);
    if (nz > 0) I->K_z = I->K_z.scaled(p.coupling_alg / std::sqrt(double(nz)));
    I->B_u = DenseMatrix(ns, 1, 0.5);

    DaeSystem sys;
    sys.name = "synthetic";
    sys.n_x = ns + nf;
    sys.n_z = nz;
    sys.n_u = 1;
    sys.partition.slow_indices.resize(ns);
    for (std::size_t i = 0; i < ns; ++i) sys.partition.slow_indices[i] = i;
    sys.partition.fast_indices.resize(nf);
    for (std::size_t i = 0; i < nf; ++i) sys.partition.fast_indices[i] = ns + i;
    sys.param_names = {"kappa"};
    sys.mu0 = {p.kappa};
    sys.input = InputSchedule::constant({0.0});

    sys.f = [I, ns, nf, nz](const Vec& x, const Vec& z, const Vec& mu, const Vec& u) -> Vec {
        const Vec xs(x.begin(), x.begin() + ns);
        const Vec xf(x.begin() + ns, x.end());
        const double u0 = u.empty() ? 0.0 : u[0];
        const Vec zstar = I->z_star(xs);
        const Vec xfstar = I->xf_star(xs);
        Vec out(ns + nf);
        for (std::size_t i = 0; i < ns; ++i) {
            double v = I->a_slow[i] * xs[i] + I->c_nl * std::tanh(xs[i]) +
                       I->B_u(i, 0) * u0;
            for (std::size_t j = 0; j < nf; ++j) v += I->K_f(i, j) * (xf[j] - xfstar[j]);
            for (std::size_t j = 0; j < nz; ++j) v += I->K_z(i, j) * (z[j] - zstar[j]);
            out[i] = v;
        }
        if (nf > 0) {
            const Vec pxs = I->P * xs;
            const Vec tf = tanh_vec(I->W_f * xs);
            Vec qz(nf, 0.0);
            if (nz > 0) qz = I->Q * z;
            for (std::size_t i = 0; i < nf; ++i) {
                const double dev = xf[i] - pxs[i] - qz[i] - I->beta * tf[i];
                out[ns + i] = -mu[0] * I->fast_rates[i] * dev;
            }
        }
        return out;
    };
    sys.g = [I, ns, nz](const Vec& x, const Vec& z, const Vec&, const Vec&) -> Vec {
        if (nz == 0) return {};
        const Vec xs(x.begin(), x.begin() + ns);
        const Vec cx = I->C_s * xs;
        const Vec t = tanh_vec(I->W_s * xs);
        Vec lz = I->L * z;
        Vec out(nz);
        for (std::size_t i = 0; i < nz; ++i) out[i] = lz[i] - cx[i] - I->gamma * t[i];
        return out;
    };
    sys.dfdx = [I, ns, nf, nz](const Vec& x, const Vec&, const Vec& mu, const Vec&) {
        const Vec xs(x.begin(), x.begin() + ns);
        DenseMatrix J(ns + nf, ns + nf);
        const DenseMatrix dxf = I->dxf_star_dxs(xs);
        const DenseMatrix dz = I->dz_star_dxs(xs);
        for (std::size_t i = 0; i < ns; ++i) {
            J(i, i) = I->a_slow[i] + I->c_nl * sech2(xs[i]);
            for (std::size_t j = 0; j < ns; ++j) {
                double v = 0.0;
                for (std::size_t k = 0; k < nf; ++k) v += I->K_f(i, k) * dxf(k, j);
                for (std::size_t k = 0; k < nz; ++k) v += I->K_z(i, k) * dz(k, j);
                J(i, j) -= v;
            }
            for (std::size_t j = 0; j < nf; ++j) J(i, ns + j) = I->K_f(i, j);
        }
        if (nf > 0) {
            const DenseMatrix dff_dxs =
                (I->P + diag_sech2_times(I->W_f * xs, I->W_f).scaled(I->beta));
            for (std::size_t i = 0; i < nf; ++i) {
                const double scale = mu[0] * I->fast_rates[i];
                for (std::size_t j = 0; j < ns; ++j) J(ns + i, j) = scale * dff_dxs(i, j);
                J(ns + i, ns + i) = -scale;
            }
        }
        return J;
    };
    sys.dfdz = [I, ns, nf, nz](const Vec&, const Vec&, const Vec& mu, const Vec&) {
        DenseMatrix J(ns + nf, nz);
        for (std::size_t i = 0; i < ns; ++i)
            for (std::size_t j = 0; j < nz; ++j) J(i, j) = I->K_z(i, j);
        for (std::size_t i = 0; i < nf; ++i) {
            const double scale = mu[0] * I->fast_rates[i];
            for (std::size_t j = 0; j < nz; ++j) J(ns + i, j) = scale * I->Q(i, j);
        }
        return J;
    };
    sys.dgdx = [I, ns, nf, nz](const Vec& x, const Vec&, const Vec&, const Vec&) {
        DenseMatrix J(nz, ns + nf);
        if (nz == 0) return J;
        const Vec xs(x.begin(), x.begin() + ns);
        const DenseMatrix dws = diag_sech2_times(I->W_s * xs, I->W_s).scaled(I->gamma);
        for (std::size_t i = 0; i < nz; ++i)
            for (std::size_t j = 0; j < ns; ++j) J(i, j) = -I->C_s(i, j) - dws(i, j);
        return J;
    };
    sys.dgdz = [I, nz](const Vec&, const Vec&, const Vec&, const Vec&) {
        return nz > 0 ? I->L : DenseMatrix(0, 0);
    };
    sys.z_closed_form = [I, ns](const Vec& x, const Vec&, const Vec&) -> Vec {
        return I->z_star(Vec(x.begin(), x.begin() + ns));
    };
    sys.qss_warm_start = [I](const Vec& xs, const Vec&, const Vec&) -> Vec {
        const Vec xf = I->xf_star(xs);
        const Vec z = I->z_star(xs);
        Vec y(xf);
        y.insert(y.end(), z.begin(), z.end());
        return y;
    };

    Vec x_chk(ns + nf);
    for (std::size_t i = 0; i < ns + nf; ++i) x_chk[i] = 0.3 + 0.1 * double(i);
    Vec z_chk(nz);
    for (std::size_t i = 0; i < nz; ++i) z_chk[i] = 0.2 - 0.05 * double(i);
    check_jacobians(sys, x_chk, z_chk, sys.mu0, {0.2});

    SyntheticSystem out;
    out.sys = std::move(sys);
    out.internals = *I;
    return out;
}

// ---------------------------------------------------------------------------
// Coupled synthetic components
// ---------------------------------------------------------------------------

CoupledSystem make_coupled_synthetic(const CoupledSyntheticParams& p) {
    require(p.n_components >= 1, "coupled: need at least one component");
    CoupledSystem cs;
    cs.n_v = 1;
    const double c = p.coupling_strength;
    const std::size_t n_comp = p.n_components;

    for (std::size_t i = 0; i < n_comp; ++i) {
        SyntheticParams sp;
        sp.kappa = p.kappa;
        sp.n_slow = 2;
        sp.n_fast = 1;
        sp.n_alg = 1;
        sp.seed = p.seed + 1000 * (i + 1);
        SyntheticSystem base = make_synthetic_two_timescale(sp);
        auto I = std::make_shared<SyntheticInternals>(base.internals);

        CoupledComponent comp;
        comp.sys = base.sys;
        comp.sys.name = "coupled_synthetic_" + std::to_string(i);
        comp.v_offset = comp.sys.n_u;  // v appended after the external input
        comp.sys.n_u += 1;
        comp.sys.input = InputSchedule::constant({0.0, 0.0});

        // local constraint gains a -E*v term with E = -1, so dg/dv = +1 and
        // the outer iteration matrix has positive sign (see cascade tests)
        auto base_g = base.sys.g;
        const std::size_t voff = comp.v_offset;
        comp.sys.g = [base_g, voff](const Vec& x, const Vec& z, const Vec& mu,
                                    const Vec& u) -> Vec {
            Vec out = base_g(x, z, mu, u);
            const double v = u.size() > voff ? u[voff] : 0.0;
            for (auto& gi : out) gi += v;
            return out;
        };
        auto base_zcf = base.sys.z_closed_form;
        comp.sys.z_closed_form = [base_zcf, voff](const Vec& x, const Vec& mu,
                                                  const Vec& u) -> Vec {
            Vec z = base_zcf(x, mu, u);
            const double v = u.size() > voff ? u[voff] : 0.0;
            for (auto& zi : z) zi -= v;  // L z = rhs - v per row, L unit diag
            return z;
        };
        auto base_ws = base.sys.qss_warm_start;
        comp.sys.qss_warm_start = [base_ws, I, voff](const Vec& xs, const Vec& mu,
                                                     const Vec& u) -> Vec {
            Vec y = base_ws(xs, mu, u);
            const double v = u.size() > voff ? u[voff] : 0.0;
            // z shifts by -v (unit L, scalar z); x_f by Q * dz
            y[1] -= v;
            y[0] -= I->Q(0, 0) * v;
            return y;
        };
        comp.dfdv = [](const Vec&, const Vec&, const Vec&, const Vec&) {
            return DenseMatrix(3, 1);  // f does not read v directly
        };
        comp.dgdv = [](const Vec&, const Vec&, const Vec&, const Vec&) {
            return DenseMatrix::from_rows({{1.0}});
        };
        cs.components.push_back(std::move(comp));
    }

    const double weight = c / double(n_comp);
    cs.g_net = [weight](const std::vector<Vec>& z_list, const Vec& v) -> Vec {
        double acc = 0.0;
        for (const auto& z : z_list) acc += z[0];
        return {v[0] - weight * acc - 0.1};
    };
    cs.dgnet_dv = [](const std::vector<Vec>&, const Vec&) {
        return DenseMatrix::from_rows({{1.0}});
    };
    for (std::size_t i = 0; i < n_comp; ++i) {
        cs.dgnet_dz.push_back([weight](const std::vector<Vec>&, const Vec&) {
            return DenseMatrix::from_rows({{-weight}});
        });
    }
    return cs;
}

}  // namespace daeops::dae
