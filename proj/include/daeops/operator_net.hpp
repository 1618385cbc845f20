#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "daeops/util.hpp"

namespace daeops::op {

using Vec = std::vector<double>;

struct NetConfig {
    std::size_t n_out = 1;        // predicted states per time point
    std::size_t n_basis = 24;     // p
    std::size_t hidden_width = 48;
    std::size_t depth = 3;        // hidden layers (first + depth-1 residual)
    std::vector<double> fourier_frequencies = {M_PI, 2.0 * M_PI, 4.0 * M_PI, 8.0 * M_PI};
    enum class Activation { tanh_act, gelu_act };
    Activation activation = Activation::tanh_act;
    std::uint64_t seed = 1;
    enum class Precision { f32_params_f64_boundary, f64 };
    Precision precision = Precision::f64;
    std::size_t n_branch_extra = 0;  // mu / input-descriptor / window-tag dims
    /// optional affine normalization of raw branch inputs; empty = identity
    Vec branch_shift, branch_scale;

    std::size_t branch_inputs() const { return n_out + n_branch_extra; }
    std::string canonical_string() const;
    std::uint64_t hash() const;
};

/// One prediction window: anchor value (what the net predicts at tau = 0),
/// extra branch descriptors, and the collocation points.
struct WindowInput {
    Vec x_s0;    // size n_out: anchor
    Vec extra;   // size n_branch_extra: mu ++ u descriptor ++ window tag
    std::vector<double> tau;  // in [0, 1]
};

struct ShapeMismatch : std::invalid_argument {
    explicit ShapeMismatch(const std::string& what) : std::invalid_argument(what) {}
};

/// Branch-trunk operator network with hard initial-condition anchoring:
///   out_i(tau) = x_s0_i + tau * sum_m B[i,m] T_m(tau)
/// The branch maps (x_s0, extra) to the p*n_out coefficients B; the trunk
/// maps tau through Fourier features and a residual MLP to the p basis
/// values T. Anchoring makes out(0) = x_s0 bit-exact for any parameters.
class OperatorNet {
public:
    explicit OperatorNet(const NetConfig& cfg);
    OperatorNet(const OperatorNet&);
    OperatorNet& operator=(const OperatorNet&);
    OperatorNet(OperatorNet&&) noexcept;
    OperatorNet& operator=(OperatorNet&&) noexcept;
    ~OperatorNet();

    const NetConfig& config() const;
    std::size_t param_count() const;
    std::vector<double> parameters() const;
    void set_parameters(const std::vector<double>& theta);

    struct Eval {
        std::vector<Vec> values;  // [n_tau][n_out]
        std::vector<Vec> dtau;    // same shape; empty unless requested
        std::shared_ptr<void> tape;
    };

    Eval forward(const WindowInput& w, bool with_dtau = false) const;

    /// Reverse-mode accumulation into grad_theta (+=). cot_dtau may be empty
    /// when the tangent outputs were not requested. grad_xs0, when given,
    /// receives the cotangent on the anchor (+=), including both the direct
    /// anchoring term and the branch-input path.
    void backward(const WindowInput& w, const Eval& eval,
                  const std::vector<Vec>& cot_values, const std::vector<Vec>& cot_dtau,
                  std::vector<double>& grad_theta, Vec* grad_xs0 = nullptr) const;

    std::string checkpoint_json() const;
    static OperatorNet load_checkpoint(const std::string& json_text);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace daeops::op
