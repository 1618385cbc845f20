#include "daeops/operator_net.hpp"

#include <cmath>
#include <sstream>
#include <variant>

#include <json.hpp>

namespace daeops::op {

using util::require;

std::string NetConfig::canonical_string() const {
    std::ostringstream s;
    s << "n_out=" << n_out << ";p=" << n_basis << ";w=" << hidden_width
      << ";d=" << depth << ";act=" << int(activation) << ";prec=" << int(precision)
      << ";extra=" << n_branch_extra << ";freq=";
    for (double f : fourier_frequencies) s << util::format_f64(f) << ",";
    s << ";shift=";
    for (double v : branch_shift) s << util::format_f64(v) << ",";
    s << ";scale=";
    for (double v : branch_scale) s << util::format_f64(v) << ",";
    return s.str();
}

std::uint64_t NetConfig::hash() const { return util::fnv1a(canonical_string()); }

namespace {

struct Layout {
    std::size_t bW0, bb0, bWout, bbout;
    std::vector<std::size_t> bWl, bbl;
    std::size_t tW0, tb0, tWout, tbout;
    std::vector<std::size_t> tWl, tbl;
    std::size_t total;
    std::size_t nb_in, nt_in, width, depth, p, n_out;
};

Layout make_layout(const NetConfig& cfg) {
    Layout L{};
    L.nb_in = cfg.branch_inputs();
    L.nt_in = 2 * cfg.fourier_frequencies.size() + 1;
    L.width = cfg.hidden_width;
    L.depth = cfg.depth;
    L.p = cfg.n_basis;
    L.n_out = cfg.n_out;
    std::size_t cur = 0;
    auto take = [&cur](std::size_t n) {
        const std::size_t at = cur;
        cur += n;
        return at;
    };
    L.bW0 = take(L.width * L.nb_in);
    L.bb0 = take(L.width);
    for (std::size_t l = 1; l < L.depth; ++l) {
        L.bWl.push_back(take(L.width * L.width));
        L.bbl.push_back(take(L.width));
    }
    L.bWout = take(L.p * L.n_out * L.width);
    L.bbout = take(L.p * L.n_out);
    L.tW0 = take(L.width * L.nt_in);
    L.tb0 = take(L.width);
    for (std::size_t l = 1; l < L.depth; ++l) {
        L.tWl.push_back(take(L.width * L.width));
        L.tbl.push_back(take(L.width));
    }
    L.tWout = take(L.p * L.width);
    L.tbout = take(L.p);
    L.total = cur;
    return L;
}

template <class Real>
struct Tape {
    std::vector<Real> xin;
    std::vector<std::vector<Real>> bz, bh;
    std::vector<Real> B;
    bool with_dtau = false;
    struct PerTau {
        std::vector<Real> phi, phidot;
        std::vector<std::vector<Real>> z, h, hdot, e;
        std::vector<Real> T, Tdot;
    };
    std::vector<PerTau> taus;
};

template <class Real>
struct Core {
    NetConfig cfg;
    Layout L;
    std::vector<Real> theta;

    explicit Core(const NetConfig& c) : cfg(c), L(make_layout(c)), theta(L.total, Real(0)) {
        init_params();
    }

    // --- activations -----------------------------------------------------
    static Real act_v(Real z, NetConfig::Activation a) {
        if (a == NetConfig::Activation::tanh_act) return std::tanh(z);
        const Real phi = Real(0.5) * (Real(1) + std::erf(z * Real(M_SQRT1_2)));
        return z * phi;
    }
    static Real act_d1(Real z, NetConfig::Activation a) {
        if (a == NetConfig::Activation::tanh_act) {
            const Real t = std::tanh(z);
            return Real(1) - t * t;
        }
        const Real cdf = Real(0.5) * (Real(1) + std::erf(z * Real(M_SQRT1_2)));
        const Real pdf = std::exp(Real(-0.5) * z * z) * Real(0.3989422804014327);
        return cdf + z * pdf;
    }
    static Real act_d2(Real z, NetConfig::Activation a) {
        if (a == NetConfig::Activation::tanh_act) {
            const Real t = std::tanh(z);
            return Real(-2) * t * (Real(1) - t * t);
        }
        const Real pdf = std::exp(Real(-0.5) * z * z) * Real(0.3989422804014327);
        return pdf * (Real(2) - z * z);
    }

    void init_params() {
        util::Rng rng(cfg.seed);
        auto fill = [&](std::size_t off, std::size_t rows, std::size_t cols, double scale) {
            const double s = scale / std::sqrt(double(cols));
            for (std::size_t i = 0; i < rows * cols; ++i)
                theta[off + i] = Real(rng.normal() * s);
        };
        fill(L.bW0, L.width, L.nb_in, 1.0);
        for (std::size_t l = 0; l + 1 < L.depth; ++l) fill(L.bWl[l], L.width, L.width, 1.0);
        // small output init keeps the anchored prediction near x_s0 at start
        fill(L.bWout, L.p * L.n_out, L.width, 0.1);
        fill(L.tW0, L.width, L.nt_in, 1.0);
        for (std::size_t l = 0; l + 1 < L.depth; ++l) fill(L.tWl[l], L.width, L.width, 1.0);
        fill(L.tWout, L.p, L.width, 1.0);
    }

    void matvec(std::size_t w_off, std::size_t rows, std::size_t cols,
                const std::vector<Real>& x, std::size_t b_off, std::vector<Real>& out) const {
        out.assign(rows, Real(0));
        const Real* w = theta.data() + w_off;
        for (std::size_t r = 0; r < rows; ++r) {
            Real acc = theta[b_off + r];
            const Real* wr = w + r * cols;
            for (std::size_t c = 0; c < cols; ++c) acc += wr[c] * x[c];
            out[r] = acc;
        }
    }
    void matvec_nobias(std::size_t w_off, std::size_t rows, std::size_t cols,
                       const std::vector<Real>& x, std::vector<Real>& out) const {
        out.assign(rows, Real(0));
        const Real* w = theta.data() + w_off;
        for (std::size_t r = 0; r < rows; ++r) {
            Real acc = Real(0);
            const Real* wr = w + r * cols;
            for (std::size_t c = 0; c < cols; ++c) acc += wr[c] * x[c];
            out[r] = acc;
        }
    }
    // out[c] += W^T y
    void matvec_t(std::size_t w_off, std::size_t rows, std::size_t cols,
                  const std::vector<Real>& y, std::vector<Real>& out) const {
        const Real* w = theta.data() + w_off;
        for (std::size_t r = 0; r < rows; ++r) {
            const Real yr = y[r];
            if (yr == Real(0)) continue;
            const Real* wr = w + r * cols;
            for (std::size_t c = 0; c < cols; ++c) out[c] += wr[c] * yr;
        }
    }
    static void outer_acc(std::vector<Real>& g, std::size_t w_off, std::size_t rows,
                          std::size_t cols, const std::vector<Real>& y,
                          const std::vector<Real>& x) {
        for (std::size_t r = 0; r < rows; ++r) {
            const Real yr = y[r];
            if (yr == Real(0)) continue;
            Real* gr = g.data() + w_off + r * cols;
            for (std::size_t c = 0; c < cols; ++c) gr[c] += yr * x[c];
        }
    }

    std::vector<Real> branch_input(const WindowInput& w) const {
        std::vector<Real> xin(L.nb_in);
        std::size_t k = 0;
        for (double v : w.x_s0) xin[k++] = Real(v);
        for (double v : w.extra) xin[k++] = Real(v);
        if (!cfg.branch_shift.empty()) {
            for (std::size_t i = 0; i < L.nb_in; ++i)
                xin[i] = (xin[i] - Real(cfg.branch_shift[i])) / Real(cfg.branch_scale[i]);
        }
        return xin;
    }

    void run_branch(const WindowInput& w, Tape<Real>& tape) const {
        tape.xin = branch_input(w);
        tape.bz.resize(L.depth);
        tape.bh.resize(L.depth);
        matvec(L.bW0, L.width, L.nb_in, tape.xin, L.bb0, tape.bz[0]);
        tape.bh[0].resize(L.width);
        for (std::size_t i = 0; i < L.width; ++i)
            tape.bh[0][i] = act_v(tape.bz[0][i], cfg.activation);
        for (std::size_t l = 1; l < L.depth; ++l) {
            matvec(L.bWl[l - 1], L.width, L.width, tape.bh[l - 1], L.bbl[l - 1], tape.bz[l]);
            tape.bh[l].resize(L.width);
            for (std::size_t i = 0; i < L.width; ++i)
                tape.bh[l][i] = tape.bh[l - 1][i] + act_v(tape.bz[l][i], cfg.activation);
        }
        matvec(L.bWout, L.p * L.n_out, L.width, tape.bh[L.depth - 1], L.bbout, tape.B);
    }

    void run_trunk(double tau, bool with_dtau, typename Tape<Real>::PerTau& pt) const {
        const std::size_t nf = cfg.fourier_frequencies.size();
        pt.phi.resize(L.nt_in);
        pt.phi[0] = Real(tau);
        for (std::size_t k = 0; k < nf; ++k) {
            const Real w = Real(cfg.fourier_frequencies[k]);
            pt.phi[1 + 2 * k] = std::sin(w * Real(tau));
            pt.phi[2 + 2 * k] = std::cos(w * Real(tau));
        }
        if (with_dtau) {
            pt.phidot.resize(L.nt_in);
            pt.phidot[0] = Real(1);
            for (std::size_t k = 0; k < nf; ++k) {
                const Real w = Real(cfg.fourier_frequencies[k]);
                pt.phidot[1 + 2 * k] = w * std::cos(w * Real(tau));
                pt.phidot[2 + 2 * k] = -w * std::sin(w * Real(tau));
            }
        }
        pt.z.resize(L.depth);
        pt.h.resize(L.depth);
        if (with_dtau) {
            pt.hdot.resize(L.depth);
            pt.e.resize(L.depth);
        }
        matvec(L.tW0, L.width, L.nt_in, pt.phi, L.tb0, pt.z[0]);
        pt.h[0].resize(L.width);
        for (std::size_t i = 0; i < L.width; ++i)
            pt.h[0][i] = act_v(pt.z[0][i], cfg.activation);
        if (with_dtau) {
            matvec_nobias(L.tW0, L.width, L.nt_in, pt.phidot, pt.e[0]);
            pt.hdot[0].resize(L.width);
            for (std::size_t i = 0; i < L.width; ++i)
                pt.hdot[0][i] = act_d1(pt.z[0][i], cfg.activation) * pt.e[0][i];
        }
        for (std::size_t l = 1; l < L.depth; ++l) {
            matvec(L.tWl[l - 1], L.width, L.width, pt.h[l - 1], L.tbl[l - 1], pt.z[l]);
            pt.h[l].resize(L.width);
            for (std::size_t i = 0; i < L.width; ++i)
                pt.h[l][i] = pt.h[l - 1][i] + act_v(pt.z[l][i], cfg.activation);
            if (with_dtau) {
                matvec_nobias(L.tWl[l - 1], L.width, L.width, pt.hdot[l - 1], pt.e[l]);
                pt.hdot[l].resize(L.width);
                for (std::size_t i = 0; i < L.width; ++i)
                    pt.hdot[l][i] =
                        pt.hdot[l - 1][i] + act_d1(pt.z[l][i], cfg.activation) * pt.e[l][i];
            }
        }
        matvec(L.tWout, L.p, L.width, pt.h[L.depth - 1], L.tbout, pt.T);
        if (with_dtau) matvec_nobias(L.tWout, L.p, L.width, pt.hdot[L.depth - 1], pt.Tdot);
    }

    OperatorNet::Eval forward(const WindowInput& w, bool with_dtau) const {
        require(w.x_s0.size() == L.n_out, "forward: anchor size != n_out");
        require(w.extra.size() == cfg.n_branch_extra, "forward: extra size mismatch");
        auto tape = std::make_shared<Tape<Real>>();
        tape->with_dtau = with_dtau;
        run_branch(w, *tape);
        tape->taus.resize(w.tau.size());

        OperatorNet::Eval ev;
        ev.values.resize(w.tau.size());
        if (with_dtau) ev.dtau.resize(w.tau.size());
        for (std::size_t k = 0; k < w.tau.size(); ++k) {
            const double tau = w.tau[k];
            require(tau >= 0.0 && tau <= 1.0, "forward: tau outside [0,1]");
            run_trunk(tau, with_dtau, tape->taus[k]);
            const auto& pt = tape->taus[k];
            ev.values[k].resize(L.n_out);
            if (with_dtau) ev.dtau[k].resize(L.n_out);
            for (std::size_t i = 0; i < L.n_out; ++i) {
                Real s = Real(0), sd = Real(0);
                const Real* Bi = tape->B.data() + i * L.p;
                for (std::size_t m = 0; m < L.p; ++m) s += Bi[m] * pt.T[m];
                ev.values[k][i] = w.x_s0[i] + tau * double(s);
                if (with_dtau) {
                    for (std::size_t m = 0; m < L.p; ++m) sd += Bi[m] * pt.Tdot[m];
                    ev.dtau[k][i] = double(s) + tau * double(sd);
                }
            }
        }
        ev.tape = tape;
        return ev;
    }

    void backward(const WindowInput& w, const OperatorNet::Eval& ev,
                  const std::vector<Vec>& cot_values, const std::vector<Vec>& cot_dtau,
                  std::vector<double>& grad_theta, Vec* grad_xs0) const {
        require(grad_theta.size() == L.total, "backward: grad buffer size mismatch");
        const auto* tape = static_cast<const Tape<Real>*>(ev.tape.get());
        require(tape != nullptr, "backward: evaluation has no tape");
        const bool has_dtau_cot = !cot_dtau.empty();
        require(!has_dtau_cot || tape->with_dtau,
                "backward: dtau cotangent without tangent forward");

        std::vector<Real> g(L.total, Real(0));
        std::vector<Real> cot_B(L.p * L.n_out, Real(0));

        std::vector<Real> cT(L.p), cTd(L.p);
        std::vector<Real> ch(L.width), cd(L.width), cz(L.width), ce(L.width), tmp(L.width);

        for (std::size_t k = 0; k < w.tau.size(); ++k) {
            const Real tau = Real(w.tau[k]);
            const auto& pt = tape->taus[k];
            bool any = false;
            std::fill(cT.begin(), cT.end(), Real(0));
            std::fill(cTd.begin(), cTd.end(), Real(0));
            for (std::size_t i = 0; i < L.n_out; ++i) {
                const Real cv = Real(cot_values[k][i]);
                const Real cdt = has_dtau_cot ? Real(cot_dtau[k][i]) : Real(0);
                if (grad_xs0) (*grad_xs0)[i] += double(cv);  // direct anchor term
                const Real cs = cv * tau + cdt;
                const Real csd = cdt * tau;
                if (cs == Real(0) && csd == Real(0)) continue;
                any = true;
                const Real* Bi = tape->B.data() + i * L.p;
                for (std::size_t m = 0; m < L.p; ++m) {
                    cot_B[i * L.p + m] += cs * pt.T[m] + (tape->with_dtau ? csd * pt.Tdot[m] : Real(0));
                    cT[m] += cs * Bi[m];
                    cTd[m] += csd * Bi[m];
                }
            }
            if (!any) continue;

            // trunk output layer: T = Wout h + b; Tdot = Wout hdot
            outer_acc(g, L.tWout, L.p, L.width, cT, pt.h[L.depth - 1]);
            if (tape->with_dtau) outer_acc(g, L.tWout, L.p, L.width, cTd, pt.hdot[L.depth - 1]);
            for (std::size_t m = 0; m < L.p; ++m) g[L.tbout + m] += cT[m];
            std::fill(ch.begin(), ch.end(), Real(0));
            std::fill(cd.begin(), cd.end(), Real(0));
            matvec_t(L.tWout, L.p, L.width, cT, ch);
            if (tape->with_dtau) matvec_t(L.tWout, L.p, L.width, cTd, cd);

            for (std::size_t l = L.depth - 1; l >= 1; --l) {
                for (std::size_t i = 0; i < L.width; ++i) {
                    const Real a1 = act_d1(pt.z[l][i], cfg.activation);
                    if (tape->with_dtau) {
                        const Real a2 = act_d2(pt.z[l][i], cfg.activation);
                        cz[i] = a1 * ch[i] + a2 * pt.e[l][i] * cd[i];
                        ce[i] = a1 * cd[i];
                    } else {
                        cz[i] = a1 * ch[i];
                        ce[i] = Real(0);
                    }
                }
                outer_acc(g, L.tWl[l - 1], L.width, L.width, cz, pt.h[l - 1]);
                if (tape->with_dtau)
                    outer_acc(g, L.tWl[l - 1], L.width, L.width, ce, pt.hdot[l - 1]);
                for (std::size_t i = 0; i < L.width; ++i) g[L.tbl[l - 1] + i] += cz[i];
                matvec_t(L.tWl[l - 1], L.width, L.width, cz, ch);
                if (tape->with_dtau) matvec_t(L.tWl[l - 1], L.width, L.width, ce, cd);
            }
            // first trunk layer
            for (std::size_t i = 0; i < L.width; ++i) {
                const Real a1 = act_d1(pt.z[0][i], cfg.activation);
                if (tape->with_dtau) {
                    const Real a2 = act_d2(pt.z[0][i], cfg.activation);
                    cz[i] = a1 * ch[i] + a2 * pt.e[0][i] * cd[i];
                    ce[i] = a1 * cd[i];
                } else {
                    cz[i] = a1 * ch[i];
                    ce[i] = Real(0);
                }
            }
            outer_acc(g, L.tW0, L.width, L.nt_in, cz, pt.phi);
            if (tape->with_dtau) outer_acc(g, L.tW0, L.width, L.nt_in, ce, pt.phidot);
            for (std::size_t i = 0; i < L.width; ++i) g[L.tb0 + i] += cz[i];
        }

        // branch backward
        outer_acc(g, L.bWout, L.p * L.n_out, L.width, cot_B, tape->bh[L.depth - 1]);
        for (std::size_t m = 0; m < L.p * L.n_out; ++m) g[L.bbout + m] += cot_B[m];
        std::fill(ch.begin(), ch.end(), Real(0));
        matvec_t(L.bWout, L.p * L.n_out, L.width, cot_B, ch);
        for (std::size_t l = L.depth - 1; l >= 1; --l) {
            for (std::size_t i = 0; i < L.width; ++i)
                cz[i] = act_d1(tape->bz[l][i], cfg.activation) * ch[i];
            outer_acc(g, L.bWl[l - 1], L.width, L.width, cz, tape->bh[l - 1]);
            for (std::size_t i = 0; i < L.width; ++i) g[L.bbl[l - 1] + i] += cz[i];
            matvec_t(L.bWl[l - 1], L.width, L.width, cz, ch);
        }
        for (std::size_t i = 0; i < L.width; ++i)
            cz[i] = act_d1(tape->bz[0][i], cfg.activation) * ch[i];
        outer_acc(g, L.bW0, L.width, L.nb_in, cz, tape->xin);
        for (std::size_t i = 0; i < L.width; ++i) g[L.bb0 + i] += cz[i];
        if (grad_xs0) {
            std::vector<Real> cxin(L.nb_in, Real(0));
            matvec_t(L.bW0, L.width, L.nb_in, cz, cxin);
            for (std::size_t i = 0; i < L.n_out; ++i) {
                double v = double(cxin[i]);
                if (!cfg.branch_scale.empty()) v /= cfg.branch_scale[i];
                (*grad_xs0)[i] += v;
            }
        }

        for (std::size_t i = 0; i < L.total; ++i) grad_theta[i] += double(g[i]);
    }
};

using CoreVariant = std::variant<Core<double>, Core<float>>;

}  // namespace

struct OperatorNet::Impl {
    CoreVariant core;
    explicit Impl(const NetConfig& cfg)
        : core(cfg.precision == NetConfig::Precision::f64
                   ? CoreVariant(Core<double>(cfg))
                   : CoreVariant(Core<float>(cfg))) {}
};

OperatorNet::OperatorNet(const NetConfig& cfg) : impl_(std::make_unique<Impl>(cfg)) {
    require(cfg.n_out >= 1 && cfg.n_basis >= 1 && cfg.depth >= 1 && cfg.hidden_width >= 1,
            "net config: positive sizes required");
    if (!cfg.branch_shift.empty()) {
        require(cfg.branch_shift.size() == cfg.branch_inputs() &&
                    cfg.branch_scale.size() == cfg.branch_inputs(),
                "net config: normalization size mismatch");
        for (double s : cfg.branch_scale) require(s > 0.0, "net config: scale must be > 0");
    }
}

OperatorNet::OperatorNet(const OperatorNet& o) : impl_(std::make_unique<Impl>(*o.impl_)) {}
OperatorNet& OperatorNet::operator=(const OperatorNet& o) {
    impl_ = std::make_unique<Impl>(*o.impl_);
    return *this;
}
OperatorNet::OperatorNet(OperatorNet&&) noexcept = default;
OperatorNet& OperatorNet::operator=(OperatorNet&&) noexcept = default;
OperatorNet::~OperatorNet() = default;

const NetConfig& OperatorNet::config() const {
    return std::visit([](const auto& c) -> const NetConfig& { return c.cfg; }, impl_->core);
}

std::size_t OperatorNet::param_count() const {
    return std::visit([](const auto& c) { return c.L.total; }, impl_->core);
}

std::vector<double> OperatorNet::parameters() const {
    return std::visit(
        [](const auto& c) {
            std::vector<double> out(c.theta.size());
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = double(c.theta[i]);
            return out;
        },
        impl_->core);
}

void OperatorNet::set_parameters(const std::vector<double>& theta) {
    std::visit(
        [&](auto& c) {
            require(theta.size() == c.theta.size(), "set_parameters: size mismatch");
            using R = typename std::decay_t<decltype(c.theta)>::value_type;
            for (std::size_t i = 0; i < theta.size(); ++i) c.theta[i] = R(theta[i]);
        },
        impl_->core);
}

OperatorNet::Eval OperatorNet::forward(const WindowInput& w, bool with_dtau) const {
    return std::visit([&](const auto& c) { return c.forward(w, with_dtau); }, impl_->core);
}

void OperatorNet::backward(const WindowInput& w, const Eval& eval,
                           const std::vector<Vec>& cot_values,
                           const std::vector<Vec>& cot_dtau,
                           std::vector<double>& grad_theta, Vec* grad_xs0) const {
    std::visit(
        [&](const auto& c) { c.backward(w, eval, cot_values, cot_dtau, grad_theta, grad_xs0); },
        impl_->core);
}

std::string OperatorNet::checkpoint_json() const {
    const NetConfig& cfg = config();
    nlohmann::json j;
    j["format_version"] = 1;
    j["config"]["n_out"] = cfg.n_out;
    j["config"]["n_basis"] = cfg.n_basis;
    j["config"]["hidden_width"] = cfg.hidden_width;
    j["config"]["depth"] = cfg.depth;
    j["config"]["fourier_frequencies"] = cfg.fourier_frequencies;
    j["config"]["activation"] =
        cfg.activation == NetConfig::Activation::tanh_act ? "tanh" : "gelu";
    j["config"]["seed"] = cfg.seed;
    j["config"]["precision"] =
        cfg.precision == NetConfig::Precision::f64 ? "f64" : "f32";
    j["config"]["n_branch_extra"] = cfg.n_branch_extra;
    j["config"]["branch_shift"] = cfg.branch_shift;
    j["config"]["branch_scale"] = cfg.branch_scale;
    j["config_hash"] = cfg.hash();
    j["params"] = parameters();
    return j.dump(1);
}

NetConfig net_config_from_json(const nlohmann::json& jc) {
    NetConfig cfg;
    cfg.n_out = jc.at("n_out").get<std::size_t>();
    cfg.n_basis = jc.at("n_basis").get<std::size_t>();
    cfg.hidden_width = jc.at("hidden_width").get<std::size_t>();
    cfg.depth = jc.at("depth").get<std::size_t>();
    cfg.fourier_frequencies = jc.at("fourier_frequencies").get<std::vector<double>>();
    cfg.activation = jc.at("activation").get<std::string>() == "gelu"
                         ? NetConfig::Activation::gelu_act
                         : NetConfig::Activation::tanh_act;
    cfg.seed = jc.at("seed").get<std::uint64_t>();
    cfg.precision = jc.at("precision").get<std::string>() == "f32"
                        ? NetConfig::Precision::f32_params_f64_boundary
                        : NetConfig::Precision::f64;
    cfg.n_branch_extra = jc.at("n_branch_extra").get<std::size_t>();
    cfg.branch_shift = jc.at("branch_shift").get<Vec>();
    cfg.branch_scale = jc.at("branch_scale").get<Vec>();
    return cfg;
}

OperatorNet OperatorNet::load_checkpoint(const std::string& json_text) {
    const nlohmann::json j = nlohmann::json::parse(json_text);
    require(j.at("format_version").get<int>() == 1, "checkpoint: unknown format version");
    NetConfig cfg = net_config_from_json(j.at("config"));
    const auto stored_hash = j.at("config_hash").get<std::uint64_t>();
    require(stored_hash == cfg.hash(), "checkpoint: config hash mismatch");
    OperatorNet net(cfg);
    net.set_parameters(j.at("params").get<std::vector<double>>());
    return net;
}

}  // namespace daeops::op
