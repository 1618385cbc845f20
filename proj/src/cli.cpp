#include "daeops/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "daeops/cascade.hpp"
#include "daeops/conformal.hpp"
#include "daeops/integrate.hpp"
#include "daeops/train.hpp"
#include "daeops/util.hpp"

namespace daeops::cli {

namespace fs = std::filesystem;
using dae::DaeSystem;
using dae::Vec;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "daeops 0.1.0";

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};
struct QualityGate : std::runtime_error {
    explicit QualityGate(const std::string& what) : std::runtime_error(what) {}
};

json parse_json_file(const std::string& path) {
    std::string text;
    try {
        text = util::read_text_file(path);
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        // translate the byte offset into a line/column diagnostic
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ConfigError(path + ":" + std::to_string(line) + ":" + std::to_string(col) +
                          ": " + e.what());
    }
}

struct Manifest {
    json j;
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

    Manifest(const std::string& command, const std::vector<std::string>& argv) {
        j["version"] = kVersion;
        j["command"] = command;
        j["argv"] = argv;
        j["configs"] = json::object();
        j["outputs"] = json::array();
    }
    void config(const std::string& name, const std::string& path) {
        j["configs"][name] = {{"path", path},
                              {"fnv1a", util::fnv1a(util::read_text_file(path))}};
    }
    void output(const std::string& path) { j["outputs"].push_back(path); }
    void write(const fs::path& dir) {
        const auto dt =
            std::chrono::duration_cast<std::chrono::milliseconds>(
                std::chrono::steady_clock::now() - t0)
                .count();
        j["wall_clock_ms"] = dt;
        util::write_text_file((dir / "manifest.json").string(), j.dump(1) + "\n");
    }
};

fs::path prepare_out_dir(std::string out) {
    if (out.empty()) {
        const char* env = std::getenv("DAEOPS_OUT");
        out = env ? env : "out";
    }
    fs::create_directories(out);
    return out;
}

DaeSystem load_system(const std::string& path) {
    try {
        return dae::load_system_config(util::read_text_file(path));
    } catch (const json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

train::TrainConfig parse_train_config(const json& j, const DaeSystem& sys) {
    train::TrainConfig tc;
    tc.epochs = j.value("epochs", tc.epochs);
    tc.collocation = j.value("collocation", tc.collocation);
    tc.batch_windows = j.value("batch_windows", tc.batch_windows);
    tc.n_chunks = j.value("n_chunks", tc.n_chunks);
    tc.causal_eps = j.value("causal_eps", tc.causal_eps);
    tc.lambda_update_every = j.value("lambda_update_every", tc.lambda_update_every);
    if (j.contains("adam")) {
        const auto& a = j["adam"];
        tc.adam.lr = a.value("lr", tc.adam.lr);
        tc.adam.beta1 = a.value("beta1", tc.adam.beta1);
        tc.adam.beta2 = a.value("beta2", tc.adam.beta2);
        tc.adam.lr_decay = a.value("lr_decay", tc.adam.lr_decay);
        tc.adam.decay_every = a.value("decay_every", tc.adam.decay_every);
        tc.adam.clip_norm = a.value("clip_norm", tc.adam.clip_norm);
    }
    const std::string mode = j.value("mode", std::string("extended"));
    if (mode == "extended") {
        tc.mode = train::LossMode::extended_newton;
    } else if (mode == "standard") {
        tc.mode = train::LossMode::standard_newton;
    } else if (mode == "penalty") {
        tc.mode = train::LossMode::penalty;
    } else {
        throw ConfigError("unknown loss mode: " + mode);
    }
    tc.time_scale = j.value("time_scale", std::string("linear")) == "log10"
                        ? train::TimeScale::log10
                        : train::TimeScale::linear;
    tc.window_length = j.value("window_length", tc.window_length);
    tc.max_log_slope = j.value("max_log_slope", tc.max_log_slope);
    const auto& r = j.at("ranges");
    tc.ranges.anchor_lo = r.at("anchor_lo").get<Vec>();
    tc.ranges.anchor_hi = r.at("anchor_hi").get<Vec>();
    tc.ranges.log_anchor = r.value("log_anchor", false);
    tc.ranges.mix_uniform = r.value("mix_uniform", 0.0);
    tc.ranges.u_lo = r.value("u_lo", Vec(sys.n_u, 0.0));
    tc.ranges.u_hi = r.value("u_hi", Vec(sys.n_u, 0.0));
    tc.ranges.window_start_lo = r.value("window_start_lo", 0.0);
    tc.ranges.window_start_hi = r.value("window_start_hi", 0.0);
    tc.seed = j.value("seed", tc.seed);
    tc.newton_cfg.tol_residual = j.value("newton_tol", tc.newton_cfg.tol_residual);
    tc.penalty_ramp_max_exp = j.value("penalty_ramp_max_exp", tc.penalty_ramp_max_exp);
    tc.checkpoint_every = j.value("checkpoint_every", tc.checkpoint_every);
    return tc;
}

op::NetConfig parse_net_config(const json& j) {
    op::NetConfig base;
    base.n_basis = j.value("n_basis", base.n_basis);
    base.hidden_width = j.value("hidden_width", base.hidden_width);
    base.depth = j.value("depth", base.depth);
    if (j.contains("fourier_frequencies"))
        base.fourier_frequencies = j["fourier_frequencies"].get<Vec>();
    base.activation = j.value("activation", std::string("tanh")) == "gelu"
                          ? op::NetConfig::Activation::gelu_act
                          : op::NetConfig::Activation::tanh_act;
    base.seed = j.value("seed", base.seed);
    base.precision = j.value("precision", std::string("f64")) == "f32"
                         ? op::NetConfig::Precision::f32_params_f64_boundary
                         : op::NetConfig::Precision::f64;
    return base;
}

struct Scenario {
    Vec x_s0;
    std::size_t n_windows = 1;
    double window_length = 1.0;
    train::TimeScale time_scale = train::TimeScale::linear;
    double t_start = 0.0;
    std::size_t samples_per_window = 16;
    Vec u_constant;  // optional constant input override
    bool has_u = false;
};

Scenario parse_scenario(const json& j) {
    Scenario sc;
    sc.x_s0 = j.at("x_s0").get<Vec>();
    sc.n_windows = j.at("n_windows").get<std::size_t>();
    sc.window_length = j.at("window_length").get<double>();
    sc.time_scale = j.value("time_scale", std::string("linear")) == "log10"
                        ? train::TimeScale::log10
                        : train::TimeScale::linear;
    sc.t_start = j.value("t_start", 0.0);
    sc.samples_per_window = j.value("samples_per_window", sc.samples_per_window);
    if (j.contains("u_constant")) {
        sc.u_constant = j["u_constant"].get<Vec>();
        sc.has_u = true;
    }
    return sc;
}

train::RolloutOptions rollout_options(const Scenario& sc) {
    train::RolloutOptions opts;
    opts.samples_per_window = sc.samples_per_window;
    opts.time_scale = sc.time_scale;
    opts.t_start = sc.t_start;
    opts.window_length = sc.window_length;
    return opts;
}

/// Radau reference sharing the exact emission grid of a surrogate rollout.
integrate::Trajectory reference_for(const DaeSystem& sys,
                                    const integrate::Trajectory& predicted) {
    integrate::IntegratorConfig ic;
    ic.t0 = predicted.times.front();
    ic.t1 = predicted.times.back();
    ic.dense_output_times = predicted.times;
    auto [x0, z0] = integrate::project_consistent(sys, predicted.x.front(), true);
    return integrate::integrate(sys, x0, z0, ic);
}

Vec per_state_rel_l2(const integrate::Trajectory& pred, const integrate::Trajectory& ref) {
    const std::size_t nx = ref.x.empty() ? 0 : ref.x[0].size();
    const std::size_t nz = ref.z.empty() ? 0 : ref.z[0].size();
    Vec err(nx + nz, 0.0), norm(nx + nz, 0.0);
    for (std::size_t i = 0; i < ref.size(); ++i) {
        for (std::size_t s = 0; s < nx; ++s) {
            const double d = pred.x[i][s] - ref.x[i][s];
            err[s] += d * d;
            norm[s] += ref.x[i][s] * ref.x[i][s];
        }
        for (std::size_t s = 0; s < nz; ++s) {
            const double d = pred.z[i][s] - ref.z[i][s];
            err[nx + s] += d * d;
            norm[nx + s] += ref.z[i][s] * ref.z[i][s];
        }
    }
    for (std::size_t s = 0; s < err.size(); ++s)
        err[s] = std::sqrt(err[s] / std::max(norm[s], 1e-300));
    return err;
}

// ---------------------------------------------------------------------------
// scenario pools for calibration / coverage
// ---------------------------------------------------------------------------

struct Pool {
    std::size_t n = 0;
    std::uint64_t seed = 1;
    Vec x_lo, x_hi, u_lo, u_hi;
    Scenario base;
};

Pool parse_pool(const json& j) {
    Pool p;
    p.n = j.at("n_trajectories").get<std::size_t>();
    p.seed = j.value("seed", 1);
    p.x_lo = j.at("x_s0_lo").get<Vec>();
    p.x_hi = j.at("x_s0_hi").get<Vec>();
    p.u_lo = j.value("u_lo", Vec{});
    p.u_hi = j.value("u_hi", Vec{});
    json base = j;
    base["x_s0"] = p.x_lo;
    p.base = parse_scenario(base);
    return p;
}

void generate_pool(const op::OperatorNet& net, const DaeSystem& sys, const Pool& pool,
                   std::size_t threads, std::vector<integrate::Trajectory>& preds,
                   std::vector<integrate::Trajectory>& refs) {
    preds.resize(pool.n);
    refs.resize(pool.n);
    // draw all scenarios up front so threading cannot reorder the stream
    std::vector<Scenario> scenarios(pool.n);
    std::vector<DaeSystem> systems(pool.n, sys);
    util::Rng rng(pool.seed);
    for (std::size_t i = 0; i < pool.n; ++i) {
        Scenario sc = pool.base;
        sc.x_s0.resize(pool.x_lo.size());
        for (std::size_t k = 0; k < sc.x_s0.size(); ++k)
            sc.x_s0[k] = rng.uniform(pool.x_lo[k], pool.x_hi[k]);
        Vec u(pool.u_lo.size());
        for (std::size_t k = 0; k < u.size(); ++k)
            u[k] = rng.uniform(pool.u_lo[k], pool.u_hi[k]);
        if (!u.empty()) systems[i].input = dae::InputSchedule::constant(u);
        scenarios[i] = sc;
    }
    util::parallel_for(pool.n, threads, [&](std::size_t i) {
        auto rr = train::rollout(net, systems[i], scenarios[i].x_s0,
                                 scenarios[i].n_windows, rollout_options(scenarios[i]));
        refs[i] = reference_for(systems[i], rr.trajectory);
        preds[i] = std::move(rr.trajectory);
    });
}

conformal::StateGroups groups_of(const DaeSystem& sys) {
    conformal::StateGroups g;
    g.slow = sys.partition.slow_indices;
    g.fast = sys.partition.fast_indices;
    g.alg.resize(sys.n_z);
    for (std::size_t i = 0; i < sys.n_z; ++i) g.alg[i] = i;
    return g;
}

// ---------------------------------------------------------------------------
// subcommands
// ---------------------------------------------------------------------------

int cmd_reference(const std::string& system_path, const std::string& integ_path,
                  const std::string& out, const std::vector<std::string>& argv) {
    Manifest man("reference", argv);
    const fs::path dir = prepare_out_dir(out);
    man.config("system", system_path);
    man.config("integrator", integ_path);

    DaeSystem sys = load_system(system_path);
    const json ij = parse_json_file(integ_path);

    integrate::IntegratorConfig ic;
    ic.method = ij.value("method", std::string("radau3")) == "trapezoid"
                    ? integrate::IntegratorConfig::Method::trapezoid
                    : integrate::IntegratorConfig::Method::radau3;
    ic.rtol = ij.value("rtol", ic.rtol);
    ic.atol = ij.value("atol", ic.atol);
    ic.fixed_step = ij.value("fixed_step", 0.0);
    ic.t0 = ij.at("t0").get<double>();
    ic.t1 = ij.at("t1").get<double>();
    if (ij.contains("output")) {
        const auto& o = ij["output"];
        if (o.contains("log_grid")) {
            const auto& g = o["log_grid"];
            ic.dense_output_times = integrate::log_time_grid(
                g.at("t0").get<double>(), g.at("t1").get<double>(),
                g.at("windows_per_decade").get<double>());
        } else if (o.contains("times")) {
            ic.dense_output_times = o["times"].get<Vec>();
        } else if (o.contains("uniform")) {
            const auto n = o["uniform"].get<std::size_t>();
            for (std::size_t i = 0; i <= n; ++i)
                ic.dense_output_times.push_back(ic.t0 + (ic.t1 - ic.t0) * double(i) /
                                                            double(n));
        }
    }

    Vec x0 = ij.at("x0").get<Vec>();
    Vec z0 = ij.value("z0", Vec{});
    const std::string project = ij.value("project", std::string("none"));
    if (ij.contains("presettle_from")) {
        // short settling integration before the main span (boundary layer)
        integrate::IntegratorConfig pre = ic;
        pre.t0 = ij["presettle_from"].get<double>();
        pre.t1 = ic.t0;
        pre.dense_output_times.clear();
        auto tr0 = integrate::integrate(sys, x0, z0, pre);
        x0 = tr0.x.back();
        z0 = tr0.z.back();
    } else if (project == "qss") {
        std::tie(x0, z0) = integrate::project_consistent(sys, x0, true);
    } else if (project == "algebraic") {
        std::tie(x0, z0) = integrate::project_consistent(sys, x0, false);
    }

    auto tr = integrate::integrate(sys, x0, z0, ic);
    util::write_text_file((dir / "trajectory.csv").string(), integrate::to_csv(tr));
    util::write_text_file((dir / "trajectory.json").string(), integrate::to_json(tr));
    man.output("trajectory.csv");
    man.output("trajectory.json");
    man.write(dir);
    return 0;
}

int cmd_train(const std::string& system_path, const std::string& net_path,
              const std::string& train_path, const std::string& out,
              const std::string& mode_override, bool ode_formulation,
              std::int64_t seed_override, std::size_t threads,
              const std::vector<std::string>& argv) {
    Manifest man("train", argv);
    const fs::path dir = prepare_out_dir(out);
    man.config("system", system_path);
    man.config("net", net_path);
    man.config("train", train_path);

    DaeSystem sys = load_system(system_path);
    if (ode_formulation) {
        if (sys.name != "robertson" && sys.name != "robertson_ode")
            throw ConfigError("--ode-formulation applies to the robertson system");
        sys = dae::make_robertson_ode();
    }
    json tj = parse_json_file(train_path);
    if (ode_formulation && tj.contains("ode_ranges")) tj["ranges"] = tj["ode_ranges"];
    train::TrainConfig tc = parse_train_config(tj, sys);
    if (!mode_override.empty()) {
        if (mode_override == "extended") tc.mode = train::LossMode::extended_newton;
        else if (mode_override == "standard") tc.mode = train::LossMode::standard_newton;
        else if (mode_override == "penalty") tc.mode = train::LossMode::penalty;
        else throw ConfigError("unknown --mode: " + mode_override);
    }
    if (seed_override >= 0) tc.seed = std::uint64_t(seed_override);
    tc.threads = threads;
    man.j["seed"] = tc.seed;
    man.j["threads"] = threads;

    op::NetConfig base = parse_net_config(parse_json_file(net_path));
    op::OperatorNet net(train::make_net_config(sys, tc, base));
    man.j["param_count"] = net.param_count();

    auto hook = [&](std::size_t epoch, const op::OperatorNet& n) {
        util::write_text_file(
            (dir / ("checkpoint_" + std::to_string(epoch) + ".json")).string(),
            n.checkpoint_json());
    };
    auto result = train::train(std::move(net), sys, tc, hook);

    util::write_text_file((dir / "checkpoint.json").string(),
                          result.net.checkpoint_json());
    util::write_text_file((dir / "loss_history.csv").string(),
                          train::history_to_csv(result.history));
    man.output("checkpoint.json");
    man.output("loss_history.csv");
    man.write(dir);
    return 0;
}

int cmd_rollout(const std::string& checkpoint_path, const std::string& system_path,
                const std::string& scenario_path, const std::string& reference_path,
                bool make_reference, const std::string& out,
                const std::vector<std::string>& argv) {
    Manifest man("rollout", argv);
    const fs::path dir = prepare_out_dir(out);
    man.config("checkpoint", checkpoint_path);
    man.config("system", system_path);
    man.config("scenario", scenario_path);

    DaeSystem sys = load_system(system_path);
    op::OperatorNet net =
        op::OperatorNet::load_checkpoint(util::read_text_file(checkpoint_path));
    if (net.config().n_out != sys.n_slow())
        throw ConfigError("checkpoint predicts " + std::to_string(net.config().n_out) +
                          " states but the system has " + std::to_string(sys.n_slow()) +
                          " slow states");
    const Scenario sc = parse_scenario(parse_json_file(scenario_path));
    DaeSystem run_sys = sys;
    if (sc.has_u) run_sys.input = dae::InputSchedule::constant(sc.u_constant);

    auto rr = train::rollout(net, run_sys, sc.x_s0, sc.n_windows, rollout_options(sc));
    util::write_text_file((dir / "predicted.csv").string(),
                          integrate::to_csv(rr.trajectory));
    man.output("predicted.csv");

    json rep;
    rep["max_g_residual"] = rr.max_g_residual;
    rep["max_conservation_drift"] = rr.max_conservation_drift;
    rep["flagged_windows"] = rr.flagged_count;
    rep["n_windows"] = sc.n_windows;

    if (make_reference || !reference_path.empty()) {
        integrate::Trajectory ref;
        if (make_reference) {
            ref = reference_for(run_sys, rr.trajectory);
            util::write_text_file((dir / "reference.csv").string(), integrate::to_csv(ref));
            man.output("reference.csv");
        } else {
            ref = integrate::from_csv(util::read_text_file(reference_path));
        }
        rep["per_state_rel_l2"] = per_state_rel_l2(rr.trajectory, ref);
    }
    util::write_text_file((dir / "report.json").string(), rep.dump(1) + "\n");
    man.output("report.json");
    man.write(dir);

    if (sc.n_windows > 0 && 2 * rr.flagged_count > sc.n_windows)
        throw QualityGate("more than half of the rollout windows flagged by Newton");
    return 0;
}

int cmd_calibrate(const std::string& checkpoint_path, const std::string& system_path,
                  const std::string& pool_path, double alpha, std::size_t threads,
                  const std::string& out, const std::vector<std::string>& argv) {
    Manifest man("calibrate", argv);
    const fs::path dir = prepare_out_dir(out);
    man.config("checkpoint", checkpoint_path);
    man.config("system", system_path);
    man.config("pool", pool_path);

    DaeSystem sys = load_system(system_path);
    op::OperatorNet net =
        op::OperatorNet::load_checkpoint(util::read_text_file(checkpoint_path));
    const Pool pool = parse_pool(parse_json_file(pool_path));

    std::vector<integrate::Trajectory> preds, refs;
    generate_pool(net, sys, pool, threads, preds, refs);
    const auto groups = groups_of(sys);
    auto cal = conformal::calibrate(preds, refs, groups, alpha);

    // amplification from the first half of the calibration pool only
    const std::size_t half = std::max<std::size_t>(1, preds.size() / 2);
    const std::vector<integrate::Trajectory> sub_p(preds.begin(), preds.begin() + half);
    const std::vector<integrate::Trajectory> sub_r(refs.begin(), refs.begin() + half);
    const auto amp = conformal::estimate_amplification(sub_p, sub_r, groups);

    json artifact = json::parse(conformal::calibration_to_json(cal));
    artifact["amplification"] = {{"fast", amp.fast}, {"alg", amp.alg}};
    util::write_text_file((dir / "calibration.json").string(), artifact.dump(1) + "\n");
    man.output("calibration.json");
    man.write(dir);
    return 0;
}

int cmd_coverage(const std::string& checkpoint_path, const std::string& system_path,
                 const std::string& calibration_path, const std::string& pool_path,
                 const std::string& ood_pool_path, std::size_t threads,
                 const std::string& out, const std::vector<std::string>& argv) {
    Manifest man("coverage", argv);
    const fs::path dir = prepare_out_dir(out);
    man.config("checkpoint", checkpoint_path);
    man.config("system", system_path);
    man.config("calibration", calibration_path);
    man.config("pool", pool_path);

    DaeSystem sys = load_system(system_path);
    op::OperatorNet net =
        op::OperatorNet::load_checkpoint(util::read_text_file(checkpoint_path));
    const json cal_art = parse_json_file(calibration_path);
    auto cal = conformal::calibration_from_json(cal_art.dump());
    conformal::Amplification amp;
    if (cal_art.contains("amplification")) {
        amp.fast = cal_art["amplification"].value("fast", 1.0);
        amp.alg = cal_art["amplification"].value("alg", 1.0);
    }

    auto run_pool = [&](const std::string& path, const char* tag) {
        const Pool pool = parse_pool(parse_json_file(path));
        std::vector<integrate::Trajectory> preds, refs;
        generate_pool(net, sys, pool, threads, preds, refs);
        auto rep = conformal::evaluate_coverage(cal, preds, refs);
        const auto bands = conformal::induced_fast_bands(cal, amp);
        const auto direct = conformal::evaluate_group_coverage(
            preds, refs, cal.groups, cal.q_slow_group, cal.q_fast_group, cal.q_alg_group);
        const auto induced = conformal::evaluate_group_coverage(
            preds, refs, cal.groups, bands.slow_radius, bands.fast_radius,
            bands.alg_radius);
        json j = json::parse(conformal::coverage_to_json(rep));
        j["group_direct"] = {{"slow", direct.slow}, {"fast", direct.fast}, {"alg", direct.alg}};
        j["group_induced"] = {
            {"slow", induced.slow}, {"fast", induced.fast}, {"alg", induced.alg}};
        j["induced_bands"] = {{"slow", bands.slow_radius},
                              {"fast", bands.fast_radius},
                              {"alg", bands.alg_radius}};
        util::write_text_file((dir / (std::string(tag) + "_coverage.json")).string(),
                              j.dump(1) + "\n");
        util::write_text_file((dir / (std::string(tag) + "_coverage.csv")).string(),
                              conformal::coverage_to_csv(rep));
        man.output(std::string(tag) + "_coverage.json");
        man.output(std::string(tag) + "_coverage.csv");
        return rep;
    };

    run_pool(pool_path, "test");
    if (!ood_pool_path.empty()) {
        man.config("ood_pool", ood_pool_path);
        run_pool(ood_pool_path, "ood");
    }
    man.write(dir);
    return 0;
}

int cmd_ablate(const std::string& system_path, const std::string& net_path,
               const std::string& train_path, const std::string& sweep_path,
               std::size_t threads, const std::string& out,
               const std::vector<std::string>& argv) {
    Manifest man("ablate", argv);
    const fs::path dir = prepare_out_dir(out);
    man.config("system", system_path);
    man.config("net", net_path);
    man.config("train", train_path);
    man.config("sweep", sweep_path);

    const json sweep = parse_json_file(sweep_path);
    const bool has_windows = sweep.contains("window_lengths") &&
                             !sweep["window_lengths"].empty();
    const bool has_partitions = sweep.contains("partitions") && !sweep["partitions"].empty();
    if (!has_windows && !has_partitions) throw ConfigError("sweep config lists no variants");
    const json scenario_j = sweep.at("scenario");
    const double horizon = sweep.value("horizon", 0.0);

    const json tj = parse_json_file(train_path);
    const op::NetConfig base = parse_net_config(parse_json_file(net_path));
    const json system_j = parse_json_file(system_path);

    std::ostringstream csv;
    csv << "variant,slow_rel_l2,fast_rel_l2,alg_rel_l2\n";

    auto run_variant = [&](const std::string& name, const json& sys_cfg, double t_w) {
        DaeSystem sys = dae::load_system_config(sys_cfg.dump());
        train::TrainConfig tc = parse_train_config(tj, sys);
        tc.threads = threads;
        tc.window_length = t_w;
        op::OperatorNet net(train::make_net_config(sys, tc, base));
        auto result = train::train(std::move(net), sys, tc);

        Scenario sc = parse_scenario(scenario_j);
        sc.window_length = t_w;
        if (horizon > 0.0)
            sc.n_windows = std::max<std::size_t>(1, std::size_t(std::llround(horizon / t_w)));
        DaeSystem run_sys = sys;
        if (sc.has_u) run_sys.input = dae::InputSchedule::constant(sc.u_constant);
        auto rr = train::rollout(result.net, run_sys, sc.x_s0, sc.n_windows,
                                 rollout_options(sc));
        auto ref = reference_for(run_sys, rr.trajectory);
        const Vec err = per_state_rel_l2(rr.trajectory, ref);
        double slow = 0, fast = 0, alg = 0;
        for (auto s : sys.partition.slow_indices) slow = std::max(slow, err[s]);
        for (auto s : sys.partition.fast_indices) fast = std::max(fast, err[s]);
        for (std::size_t s = 0; s < sys.n_z; ++s) alg = std::max(alg, err[sys.n_x + s]);
        csv << name << "," << util::format_f64(slow) << "," << util::format_f64(fast)
            << "," << util::format_f64(alg) << "\n";
    };

    if (has_windows) {
        for (const auto& twj : sweep["window_lengths"]) {
            const double t_w = twj.get<double>();
            run_variant("T_w=" + util::format_f64(t_w), system_j, t_w);
        }
    }
    if (has_partitions) {
        const double t_w = sweep.value("partition_window_length",
                                       scenario_j.at("window_length").get<double>());
        std::size_t idx = 0;
        for (const auto& pj : sweep["partitions"]) {
            json sys_cfg = system_j;
            sys_cfg["partition_override"] = pj;
            run_variant("partition_" + std::to_string(idx++), sys_cfg, t_w);
        }
    }

    util::write_text_file((dir / "sweep.csv").string(), csv.str());
    man.output("sweep.csv");
    man.write(dir);
    return 0;
}

int cmd_cascade_demo(const std::string& coupled_path,
                     const std::vector<std::string>& checkpoint_paths,
                     const std::string& scenario_path, std::size_t threads,
                     const std::string& out, const std::vector<std::string>& argv) {
    Manifest man("cascade-demo", argv);
    const fs::path dir = prepare_out_dir(out);
    man.config("coupled", coupled_path);
    man.config("scenario", scenario_path);

    const json cj = parse_json_file(coupled_path);
    dae::CoupledSyntheticParams cp;
    cp.n_components = cj.value("n_components", cp.n_components);
    cp.coupling_strength = cj.value("coupling_strength", cp.coupling_strength);
    cp.kappa = cj.value("kappa", cp.kappa);
    cp.seed = cj.value("seed", cp.seed);
    auto cs = dae::make_coupled_synthetic(cp);
    const std::size_t n_comp = cs.components.size();
    if (checkpoint_paths.size() != n_comp)
        throw ConfigError("need one checkpoint per component (" + std::to_string(n_comp) +
                          ")");

    std::vector<op::OperatorNet> nets;
    for (const auto& p : checkpoint_paths) {
        man.config("checkpoint_" + std::to_string(nets.size()), p);
        nets.push_back(op::OperatorNet::load_checkpoint(util::read_text_file(p)));
        if (nets.back().config().n_out != cs.components[0].sys.n_slow() ||
            nets.back().config().n_branch_extra != cs.components[0].sys.n_u)
            throw ConfigError("checkpoint shape mismatch for component nets");
    }

    const json sj = parse_json_file(scenario_path);
    const auto x_s0_list = sj.at("x_s0").get<std::vector<Vec>>();
    const auto u_ext = sj.value("u_ext", Vec(n_comp, 0.0));
    const std::size_t n_windows = sj.at("n_windows").get<std::size_t>();
    const double t_w = sj.at("window_length").get<double>();
    const std::size_t m = sj.value("samples_per_window", 8);
    if (x_s0_list.size() != n_comp) throw ConfigError("x_s0 must list one vector per component");

    cascade::CascadeConfig ccfg;
    ccfg.threads = threads;
    ccfg.fallback = cascade::CascadeConfig::Fallback::damped;

    // window-chained cascaded inference: nets predict slow states with the
    // window-start v as a frozen descriptor; the coupler re-solves (y, v) at
    // every emitted point
    std::vector<Vec> xs(n_comp);
    for (std::size_t i = 0; i < n_comp; ++i) xs[i] = x_s0_list[i];
    Vec v(cs.n_v, 0.0);
    std::vector<integrate::Trajectory> comp_traj(n_comp);
    std::vector<double> v_trace_t;
    std::vector<Vec> v_trace;
    std::size_t flagged = 0;

    for (std::size_t w = 0; w < n_windows; ++w) {
        const double t0w = double(w) * t_w;
        std::vector<op::OperatorNet::Eval> evals(n_comp);
        for (std::size_t i = 0; i < n_comp; ++i) {
            op::WindowInput win;
            win.x_s0 = xs[i];
            win.extra = {u_ext[i], v.empty() ? 0.0 : v[0]};
            win.tau.resize(m + 1);
            for (std::size_t jdx = 0; jdx <= m; ++jdx)
                win.tau[jdx] = double(jdx) / double(m);
            evals[i] = nets[i].forward(win);
        }
        for (std::size_t jdx = (w == 0 ? 0 : 1); jdx <= m; ++jdx) {
            std::vector<Vec> xs_now(n_comp);
            std::vector<Vec> u_now(n_comp);
            for (std::size_t i = 0; i < n_comp; ++i) {
                xs_now[i] = evals[i].values[jdx];
                u_now[i] = {u_ext[i]};
            }
            auto res = cascade::cascade_solve(cs, xs_now, v, u_now, ccfg);
            if (!res.converged) ++flagged;
            v = res.v_star;
            const double t = t0w + (double(jdx) / double(m)) * t_w;
            for (std::size_t i = 0; i < n_comp; ++i) {
                const auto& sys_i = cs.components[i].sys;
                comp_traj[i].times.push_back(t);
                comp_traj[i].x.push_back(
                    sys_i.assemble_state(xs_now[i], res.local_results[i].fast_part()));
                comp_traj[i].z.push_back(res.local_results[i].alg_part());
            }
            v_trace_t.push_back(t);
            v_trace.push_back(v);
        }
        for (std::size_t i = 0; i < n_comp; ++i) xs[i] = evals[i].values[m];
    }

    // monolithic Radau reference on the same grid
    DaeSystem mono = cascade::make_monolithic_system(cs);
    {
        Vec u_sched;
        for (std::size_t i = 0; i < n_comp; ++i) u_sched.push_back(u_ext[i]);
        mono.input = dae::InputSchedule::constant(u_sched);
    }
    Vec x0_mono;
    for (std::size_t i = 0; i < n_comp; ++i)
        x0_mono.insert(x0_mono.end(), comp_traj[i].x.front().begin(),
                       comp_traj[i].x.front().end());
    integrate::IntegratorConfig ic;
    ic.t0 = v_trace_t.front();
    ic.t1 = v_trace_t.back();
    ic.dense_output_times = comp_traj[0].times;
    auto [x0p, z0p] = integrate::project_consistent(mono, x0_mono, true);
    auto ref = integrate::integrate(mono, x0p, z0p, ic);

    json rep;
    rep["flagged_solves"] = flagged;
    std::size_t xo = 0, zo = 0;
    for (std::size_t i = 0; i < n_comp; ++i) {
        const auto& sys_i = cs.components[i].sys;
        integrate::Trajectory ref_i;
        ref_i.times = ref.times;
        for (std::size_t k = 0; k < ref.size(); ++k) {
            ref_i.x.emplace_back(ref.x[k].begin() + xo, ref.x[k].begin() + xo + sys_i.n_x);
            ref_i.z.emplace_back(ref.z[k].begin() + zo, ref.z[k].begin() + zo + sys_i.n_z);
        }
        xo += sys_i.n_x;
        zo += sys_i.n_z;
        const Vec err = per_state_rel_l2(comp_traj[i], ref_i);
        rep["component_" + std::to_string(i)]["per_state_rel_l2"] = err;
        util::write_text_file(
            (dir / ("component_" + std::to_string(i) + ".csv")).string(),
            integrate::to_csv(comp_traj[i]));
        man.output("component_" + std::to_string(i) + ".csv");
    }
    util::write_text_file((dir / "report.json").string(), rep.dump(1) + "\n");
    man.output("report.json");
    man.write(dir);
    return 0;
}

}  // namespace

int run(int argc, const char* const* argv) {
    std::vector<std::string> args(argv, argv + argc);
    CLI::App app{std::string(kVersion) +
                 " - neural-operator surrogates for stiff index-1 DAEs"};
    app.require_subcommand(1);

    std::string system_path, integ_path, net_path, train_path, checkpoint_path;
    std::string scenario_path, reference_path, pool_path, ood_pool_path, cal_path;
    std::string coupled_path, sweep_path, out, mode_override;
    std::vector<std::string> checkpoints;
    bool make_reference = false, ode_formulation = false;
    double alpha = 0.1;
    std::int64_t seed_override = -1;
    std::size_t threads = 1;

    app.add_option("--threads", threads, "worker threads (1 = bit-reproducible)")
        ->capture_default_str();

    auto* ref_cmd = app.add_subcommand("reference", "integrate a ground-truth trajectory");
    ref_cmd->add_option("--system", system_path)->required();
    ref_cmd->add_option("--integrator", integ_path)->required();
    ref_cmd->add_option("--out", out);

    auto* train_cmd = app.add_subcommand("train", "simulation-free training");
    train_cmd->add_option("--system", system_path)->required();
    train_cmd->add_option("--net", net_path)->required();
    train_cmd->add_option("--train", train_path)->required();
    train_cmd->add_option("--mode", mode_override, "extended | standard | penalty");
    train_cmd->add_flag("--ode-formulation", ode_formulation,
                        "robertson conservation-as-ODE twin");
    train_cmd->add_option("--seed", seed_override);
    train_cmd->add_option("--out", out);

    auto* roll_cmd = app.add_subcommand("rollout", "recursive windowed inference");
    roll_cmd->add_option("--checkpoint", checkpoint_path)->required();
    roll_cmd->add_option("--system", system_path)->required();
    roll_cmd->add_option("--scenario", scenario_path)->required();
    roll_cmd->add_option("--reference", reference_path, "reference CSV for the error table");
    roll_cmd->add_flag("--make-reference", make_reference, "integrate the reference inline");
    roll_cmd->add_option("--out", out);

    auto* cal_cmd = app.add_subcommand("calibrate", "split-conformal calibration");
    cal_cmd->add_option("--checkpoint", checkpoint_path)->required();
    cal_cmd->add_option("--system", system_path)->required();
    cal_cmd->add_option("--pool", pool_path)->required();
    cal_cmd->add_option("--alpha", alpha)->capture_default_str();
    cal_cmd->add_option("--out", out);

    auto* cov_cmd = app.add_subcommand("coverage", "coverage evaluation and OOD check");
    cov_cmd->add_option("--checkpoint", checkpoint_path)->required();
    cov_cmd->add_option("--system", system_path)->required();
    cov_cmd->add_option("--calibration", cal_path)->required();
    cov_cmd->add_option("--pool", pool_path)->required();
    cov_cmd->add_option("--ood-pool", ood_pool_path);
    cov_cmd->add_option("--out", out);

    auto* abl_cmd = app.add_subcommand("ablate", "window-length / partition sweeps");
    abl_cmd->add_option("--system", system_path)->required();
    abl_cmd->add_option("--net", net_path)->required();
    abl_cmd->add_option("--train", train_path)->required();
    abl_cmd->add_option("--sweep", sweep_path)->required();
    abl_cmd->add_option("--out", out);

    auto* casc_cmd = app.add_subcommand("cascade-demo", "zero-shot composed inference");
    casc_cmd->add_option("--coupled", coupled_path)->required();
    casc_cmd->add_option("--checkpoints", checkpoints)->required()->expected(-1);
    casc_cmd->add_option("--scenario", scenario_path)->required();
    casc_cmd->add_option("--out", out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (ref_cmd->parsed()) return cmd_reference(system_path, integ_path, out, args);
        if (train_cmd->parsed())
            return cmd_train(system_path, net_path, train_path, out, mode_override,
                             ode_formulation, seed_override, threads, args);
        if (roll_cmd->parsed())
            return cmd_rollout(checkpoint_path, system_path, scenario_path, reference_path,
                               make_reference, out, args);
        if (cal_cmd->parsed())
            return cmd_calibrate(checkpoint_path, system_path, pool_path, alpha, threads,
                                 out, args);
        if (cov_cmd->parsed())
            return cmd_coverage(checkpoint_path, system_path, cal_path, pool_path,
                                ood_pool_path, threads, out, args);
        if (abl_cmd->parsed())
            return cmd_ablate(system_path, net_path, train_path, sweep_path, threads, out,
                              args);
        if (casc_cmd->parsed())
            return cmd_cascade_demo(coupled_path, checkpoints, scenario_path, threads, out,
                                    args);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const QualityGate& e) {
        std::fprintf(stderr, "quality gate: %s\n", e.what());
        return 4;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "numeric failure: %s\n", e.what());
        return 3;
    }
    return 2;
}

}  // namespace daeops::cli
