#pragma once

#include "daeops/trajectory.hpp"
#include "daeops/newton.hpp"
#include "daeops/operator_net.hpp"

namespace daeops::train {

using dae::DaeSystem;
using dae::Vec;

enum class LossMode { extended_newton, standard_newton, penalty };
enum class TimeScale { linear, log10 };

struct AdamConfig {
    double lr = 3e-3;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    double lr_decay = 1.0;  // multiplied in every decay_every steps
    std::size_t decay_every = 1000;
    double clip_norm = 100.0;  // global gradient-norm clip; 0 disables
};

struct SamplingRanges {
    Vec anchor_lo, anchor_hi;  // slow-state IC box (log-uniform when log_anchor)
    bool log_anchor = false;
    double mix_uniform = 0.0;  // with log_anchor: probability of a uniform draw
    Vec u_lo, u_hi;  // disturbance descriptor box (dim n_u)
    double window_start_lo = 0.0, window_start_hi = 0.0;  // window tag range
};

struct TrainConfig {
    std::size_t epochs = 2000;
    std::size_t collocation = 32;  // points per window, resampled each epoch
    std::size_t batch_windows = 8;
    std::size_t n_chunks = 8;
    double causal_eps = 1.0;
    std::size_t lambda_update_every = 500;
    AdamConfig adam;
    LossMode mode = LossMode::extended_newton;
    TimeScale time_scale = TimeScale::linear;
    double window_length = 1.0;  // T_w (seconds, or decades in log10 scale)
    /// log10 scale only: reject sampled windows whose QSS-manifold slope
    /// |dx_s/dlog10(t)| exceeds this at the window end. Physically large
    /// states at late times evolve faster than a window can represent;
    /// the filter needs one Newton solve, never a trajectory. 0 disables.
    double max_log_slope = 0.0;
    SamplingRanges ranges;
    std::uint64_t seed = 1;
    newton::NewtonConfig newton_cfg;
    double penalty_ramp_max_exp = 3.0;  // penalty weight 10^ramp over first half
    std::size_t threads = 1;
    std::size_t checkpoint_every = 0;
};

struct LossReport {
    double total = 0.0;
    Vec per_state_rms;   // residual RMS per predicted state
    Vec chunk_weights;   // w_j, w_1 = 1
    Vec lambda_s;
    double newton_failure_fraction = 0.0;
    std::size_t newton_iterations = 0, newton_solves = 0;
    double penalty_g_rms = 0.0;  // penalty mode only
};

/// One sampled training window (no trajectory data anywhere: anchors are
/// drawn from the configured box, never from an integrator).
struct WindowSample {
    op::WindowInput win;
    Vec u;           // constant external input over the window
    double t_start;  // window start (physical time, or log10 t)
};

/// Network I/O dimensions and normalization for a (system, mode) pair.
op::NetConfig make_net_config(const DaeSystem& sys, const TrainConfig& tc,
                              op::NetConfig base);

/// Assemble the branch descriptor for a window: u ++ window tag.
Vec window_extra(const DaeSystem& sys, const TrainConfig& tc, const Vec& u,
                 double t_start);

/// Draw one training window from the configured ranges.
WindowSample sample_window(const DaeSystem& sys, const TrainConfig& tc, util::Rng& rng);

/// Causal physics-informed loss over a batch of windows, with the Newton
/// layer in the loop. Gradients (accumulated +=) combine the direct
/// df/dx term with the implicit path through the solve.
LossReport physics_loss(const op::OperatorNet& net, const DaeSystem& sys,
                        const std::vector<WindowSample>& batch, const TrainConfig& cfg,
                        std::size_t epoch, const Vec& lambda_s,
                        std::vector<double>* grad_theta);

struct HistoryRow {
    std::size_t epoch;
    double total;
    Vec per_state_rms;
    double newton_failure_fraction;
    double penalty_g_rms;
    double lr;
};

struct TrainResult {
    op::OperatorNet net;
    std::vector<HistoryRow> history;
    Vec lambda_s;
};

std::string history_to_csv(const std::vector<HistoryRow>& rows);

/// Simulation-free training: Adam over freshly sampled IC batches each
/// epoch. Deterministic under a fixed seed in single-threaded mode.
TrainResult train(op::OperatorNet net, const DaeSystem& sys, const TrainConfig& cfg,
                  const std::function<void(std::size_t, const op::OperatorNet&)>&
                      checkpoint_hook = {});

struct RolloutOptions {
    std::size_t samples_per_window = 16;
    TimeScale time_scale = TimeScale::linear;
    double t_start = 0.0;  // physical time, or log10 t in log scale
    double window_length = 1.0;
    newton::NewtonConfig newton_cfg;
};

struct RolloutResult {
    integrate::Trajectory trajectory;
    std::vector<bool> window_flagged;  // Newton reliability per window
    double max_g_residual = 0.0;
    double max_conservation_drift = 0.0;
    std::size_t flagged_count = 0;
};

/// Recursive windowed inference: each window's terminal slow state seeds the
/// next; every emitted point carries the solved (x_f*, z*). Failed solves
/// flag the window, never fill values silently.
RolloutResult rollout(const op::OperatorNet& net, const DaeSystem& sys, const Vec& x_s0,
                      std::size_t n_windows, const RolloutOptions& opts);

/// The conservation-as-ODE comparison twin; identical mechanics, but the
/// system carries no algebraic constraint so drift is free to accumulate.
RolloutResult rollout_ode_formulation(const op::OperatorNet& net, const DaeSystem& sys_ode,
                                      const Vec& x_s0, std::size_t n_windows,
                                      const RolloutOptions& opts);

}  // namespace daeops::train
