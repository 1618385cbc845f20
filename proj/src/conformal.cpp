#include "daeops/conformal.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "daeops/util.hpp"

namespace daeops::conformal {

using util::require;

double split_quantile(std::vector<double> scores, double alpha) {
    const std::size_t n = scores.size();
    if (n == 0) throw InsufficientCalibration();
    // finite quantile requires n >= ceil(1/alpha); the guards keep the
    // ceilings exact against float round-up (e.g. 10 * 0.9 -> 9.0000...2)
    const double need = std::ceil(1.0 / alpha - 1e-9);
    if (double(n) < need) return std::numeric_limits<double>::infinity();
    const double v = (double(n) + 1.0) * (1.0 - alpha);
    const auto rank = static_cast<std::size_t>(std::ceil(v - 1e-9 * std::max(1.0, v)));
    if (rank > n) return std::numeric_limits<double>::infinity();
    std::sort(scores.begin(), scores.end());
    return scores[rank - 1];
}

TrajectoryScores score_trajectory(const Trajectory& prediction,
                                  const Trajectory& reference,
                                  const StateGroups& groups) {
    require(prediction.size() == reference.size(),
            "score_trajectory: prediction/reference length mismatch");
    for (std::size_t i = 0; i < prediction.size(); ++i) {
        require(std::abs(prediction.times[i] - reference.times[i]) <=
                    1e-9 * std::max(1.0, std::abs(reference.times[i])),
                "score_trajectory: time grids differ");
    }
    TrajectoryScores sc;
    sc.per_state.assign(groups.n_scored(), 0.0);
    std::size_t col = 0;
    for (std::size_t s : groups.slow) {
        double m = 0.0;
        for (std::size_t i = 0; i < prediction.size(); ++i)
            m = std::max(m, std::abs(prediction.x[i][s] - reference.x[i][s]));
        sc.per_state[col++] = m;
        sc.slow_group = std::max(sc.slow_group, m);
    }
    for (std::size_t s : groups.fast) {
        double m = 0.0;
        for (std::size_t i = 0; i < prediction.size(); ++i)
            m = std::max(m, std::abs(prediction.x[i][s] - reference.x[i][s]));
        sc.per_state[col++] = m;
        sc.fast_group = std::max(sc.fast_group, m);
    }
    for (std::size_t s : groups.alg) {
        double m = 0.0;
        for (std::size_t i = 0; i < prediction.size(); ++i)
            m = std::max(m, std::abs(prediction.z[i][s] - reference.z[i][s]));
        sc.per_state[col++] = m;
        sc.alg_group = std::max(sc.alg_group, m);
    }
    return sc;
}

ConformalCalibration calibrate(const std::vector<Trajectory>& predictions,
                               const std::vector<Trajectory>& references,
                               const StateGroups& groups, double alpha) {
    require(alpha > 0.0 && alpha < 1.0, "calibrate: alpha in (0,1)");
    if (predictions.empty() || predictions.size() != references.size())
        throw InsufficientCalibration();

    ConformalCalibration cal;
    cal.alpha = alpha;
    cal.n_cal = predictions.size();
    cal.groups = groups;
    cal.scores.assign(groups.n_scored(), {});
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const auto sc = score_trajectory(predictions[i], references[i], groups);
        for (std::size_t s = 0; s < sc.per_state.size(); ++s)
            cal.scores[s].push_back(sc.per_state[s]);
        cal.slow_group_scores.push_back(sc.slow_group);
        cal.fast_group_scores.push_back(sc.fast_group);
        cal.alg_group_scores.push_back(sc.alg_group);
    }
    cal.qhat.resize(cal.scores.size());
    for (std::size_t s = 0; s < cal.scores.size(); ++s) {
        cal.qhat[s] = split_quantile(cal.scores[s], alpha);
        std::sort(cal.scores[s].begin(), cal.scores[s].end());
    }
    cal.q_slow_group = split_quantile(cal.slow_group_scores, alpha);
    cal.q_fast_group = split_quantile(cal.fast_group_scores, alpha);
    cal.q_alg_group = split_quantile(cal.alg_group_scores, alpha);
    std::sort(cal.slow_group_scores.begin(), cal.slow_group_scores.end());
    std::sort(cal.fast_group_scores.begin(), cal.fast_group_scores.end());
    std::sort(cal.alg_group_scores.begin(), cal.alg_group_scores.end());
    return cal;
}

CoverageReport evaluate_coverage(const ConformalCalibration& cal,
                                 const std::vector<Trajectory>& predictions,
                                 const std::vector<Trajectory>& references) {
    require(!predictions.empty() && predictions.size() == references.size(),
            "evaluate_coverage: empty or mismatched test set");
    CoverageReport rep;
    rep.band_widths = cal.qhat;
    rep.per_state.assign(cal.qhat.size(), 0.0);
    std::size_t slow_cov = 0, fast_cov = 0, alg_cov = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const auto sc = score_trajectory(predictions[i], references[i], cal.groups);
        for (std::size_t s = 0; s < sc.per_state.size(); ++s)
            if (sc.per_state[s] <= cal.qhat[s]) rep.per_state[s] += 1.0;
        if (sc.slow_group <= cal.q_slow_group) ++slow_cov;
        if (sc.fast_group <= cal.q_fast_group) ++fast_cov;
        if (sc.alg_group <= cal.q_alg_group) ++alg_cov;
    }
    const double n = double(predictions.size());
    for (auto& c : rep.per_state) {
        c /= n;
        rep.average += c;
    }
    if (!rep.per_state.empty()) rep.average /= double(rep.per_state.size());
    rep.slow_group = double(slow_cov) / n;
    rep.fast_group = double(fast_cov) / n;
    rep.alg_group = double(alg_cov) / n;
    rep.ood_flag = rep.average < 0.5;
    return rep;
}

namespace {
double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}
}  // namespace

Amplification estimate_amplification(const std::vector<Trajectory>& predictions,
                                     const std::vector<Trajectory>& references,
                                     const StateGroups& groups) {
    require(!predictions.empty() && predictions.size() == references.size(),
            "estimate_amplification: empty or mismatched split");
    std::vector<double> slow, fast, alg;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const auto sc = score_trajectory(predictions[i], references[i], groups);
        slow.push_back(sc.slow_group);
        fast.push_back(sc.fast_group);
        alg.push_back(sc.alg_group);
    }
    const double ms = median_of(slow);
    Amplification amp;
    if (ms > 0.0) {
        if (!groups.fast.empty()) amp.fast = median_of(fast) / ms;
        if (!groups.alg.empty()) amp.alg = median_of(alg) / ms;
    }
    return amp;
}

InducedBands induced_fast_bands(const ConformalCalibration& cal,
                                const Amplification& amplification) {
    require(amplification.fast >= 0.0 && amplification.alg >= 0.0,
            "induced_fast_bands: amplification must be non-negative");
    InducedBands b;
    b.slow_radius = cal.q_slow_group;
    b.fast_radius = amplification.fast * cal.q_slow_group;
    b.alg_radius = amplification.alg * cal.q_slow_group;
    return b;
}

GroupCoverage evaluate_group_coverage(const std::vector<Trajectory>& predictions,
                                      const std::vector<Trajectory>& references,
                                      const StateGroups& groups, double slow_radius,
                                      double fast_radius, double alg_radius) {
    require(!predictions.empty() && predictions.size() == references.size(),
            "evaluate_group_coverage: empty or mismatched test set");
    GroupCoverage out;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const auto sc = score_trajectory(predictions[i], references[i], groups);
        if (sc.slow_group <= slow_radius) out.slow += 1.0;
        if (sc.fast_group <= fast_radius) out.fast += 1.0;
        if (sc.alg_group <= alg_radius) out.alg += 1.0;
    }
    const double n = double(predictions.size());
    out.slow /= n;
    out.fast /= n;
    out.alg /= n;
    return out;
}

// ---------------------------------------------------------------------------
// artifacts
// ---------------------------------------------------------------------------

namespace {
// JSON cannot carry infinities (the degenerate small-sample quantile)
double enc_inf(double v) { return std::isinf(v) ? std::numeric_limits<double>::max() : v; }
double dec_inf(double v) {
    return v == std::numeric_limits<double>::max() ? std::numeric_limits<double>::infinity()
                                                   : v;
}
}  // namespace

std::string calibration_to_json(const ConformalCalibration& cal) {
    nlohmann::json j;
    j["alpha"] = cal.alpha;
    j["n_cal"] = cal.n_cal;
    j["groups"]["slow"] = cal.groups.slow;
    j["groups"]["fast"] = cal.groups.fast;
    j["groups"]["alg"] = cal.groups.alg;
    j["scores"] = cal.scores;
    Vec q = cal.qhat;
    for (auto& v : q) v = enc_inf(v);
    j["qhat"] = q;
    j["group_scores"]["slow"] = cal.slow_group_scores;
    j["group_scores"]["fast"] = cal.fast_group_scores;
    j["group_scores"]["alg"] = cal.alg_group_scores;
    j["group_qhat"] = {enc_inf(cal.q_slow_group), enc_inf(cal.q_fast_group),
                       enc_inf(cal.q_alg_group)};
    return j.dump(1);
}

ConformalCalibration calibration_from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    ConformalCalibration cal;
    cal.alpha = j.at("alpha").get<double>();
    cal.n_cal = j.at("n_cal").get<std::size_t>();
    cal.groups.slow = j.at("groups").at("slow").get<std::vector<std::size_t>>();
    cal.groups.fast = j.at("groups").at("fast").get<std::vector<std::size_t>>();
    cal.groups.alg = j.at("groups").at("alg").get<std::vector<std::size_t>>();
    cal.scores = j.at("scores").get<std::vector<std::vector<double>>>();
    cal.qhat = j.at("qhat").get<Vec>();
    for (auto& v : cal.qhat) v = dec_inf(v);
    cal.slow_group_scores = j.at("group_scores").at("slow").get<std::vector<double>>();
    cal.fast_group_scores = j.at("group_scores").at("fast").get<std::vector<double>>();
    cal.alg_group_scores = j.at("group_scores").at("alg").get<std::vector<double>>();
    const auto gq = j.at("group_qhat").get<std::vector<double>>();
    cal.q_slow_group = dec_inf(gq[0]);
    cal.q_fast_group = dec_inf(gq[1]);
    cal.q_alg_group = dec_inf(gq[2]);
    return cal;
}

std::string coverage_to_json(const CoverageReport& rep) {
    nlohmann::json j;
    j["per_state"] = rep.per_state;
    j["average"] = rep.average;
    j["band_widths"] = rep.band_widths;
    j["ood_flag"] = rep.ood_flag;
    j["group"] = {{"slow", rep.slow_group}, {"fast", rep.fast_group}, {"alg", rep.alg_group}};
    return j.dump(1);
}

std::string coverage_to_csv(const CoverageReport& rep) {
    std::string out = "state,coverage,band_width\n";
    for (std::size_t s = 0; s < rep.per_state.size(); ++s)
        out += "s" + std::to_string(s) + "," + util::format_f64(rep.per_state[s]) + "," +
               util::format_f64(rep.band_widths[s]) + "\n";
    out += "average," + util::format_f64(rep.average) + ",\n";
    return out;
}

}  // namespace daeops::conformal
