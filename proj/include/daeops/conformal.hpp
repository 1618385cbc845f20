#pragma once

#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "daeops/trajectory.hpp"

namespace daeops::conformal {

using integrate::Trajectory;
using Vec = std::vector<double>;

/// Indices of the scored states: slow/fast refer to the differential state
/// vector, alg to the algebraic vector.
struct StateGroups {
    std::vector<std::size_t> slow, fast, alg;
    std::size_t n_scored() const { return slow.size() + fast.size() + alg.size(); }
};

struct InsufficientCalibration : std::runtime_error {
    InsufficientCalibration() : std::runtime_error("empty or mismatched calibration set") {}
};

/// Split-conformal quantile: the ceil((n+1)(1-alpha))-th smallest score,
/// +infinity when the rank exceeds n. scores need not be sorted.
double split_quantile(std::vector<double> scores, double alpha);

/// Per-trajectory nonconformity scores: max-over-time absolute error per
/// scored state, plus group-level maxima (slow / fast / algebraic).
struct TrajectoryScores {
    Vec per_state;  // ordered: slow states, fast states, algebraic states
    double slow_group = 0.0, fast_group = 0.0, alg_group = 0.0;
};

TrajectoryScores score_trajectory(const Trajectory& prediction,
                                  const Trajectory& reference, const StateGroups& groups);

struct ConformalCalibration {
    double alpha = 0.1;
    std::size_t n_cal = 0;
    StateGroups groups;
    std::vector<std::vector<double>> scores;  // per scored state, sorted ascending
    Vec qhat;                                 // per scored state
    std::vector<double> slow_group_scores, fast_group_scores, alg_group_scores;
    double q_slow_group = 0.0, q_fast_group = 0.0, q_alg_group = 0.0;
};

ConformalCalibration calibrate(const std::vector<Trajectory>& predictions,
                               const std::vector<Trajectory>& references,
                               const StateGroups& groups, double alpha);

struct CoverageReport {
    Vec per_state;  // empirical coverage per scored state
    double average = 0.0;
    Vec band_widths;  // the per-state radii used
    bool ood_flag = false;
    double slow_group = 0.0, fast_group = 0.0, alg_group = 0.0;
};

/// A trajectory is covered for a state iff its max-over-time error fits in
/// the calibrated radius. The OOD flag fires when average coverage < 0.5.
CoverageReport evaluate_coverage(const ConformalCalibration& cal,
                                 const std::vector<Trajectory>& predictions,
                                 const std::vector<Trajectory>& references);

/// Median fast/slow and algebraic/slow score ratios on a calibration
/// sub-split (never on test data).
struct Amplification {
    double fast = 1.0, alg = 1.0;
};
Amplification estimate_amplification(const std::vector<Trajectory>& predictions,
                                     const std::vector<Trajectory>& references,
                                     const StateGroups& groups);

struct InducedBands {
    double slow_radius = 0.0;  // the group-level slow quantile
    double fast_radius = 0.0;  // amplification x slow radius
    double alg_radius = 0.0;
};

InducedBands induced_fast_bands(const ConformalCalibration& cal,
                                const Amplification& amplification);

/// Group-level coverage under explicit radii (used for the induced bands).
struct GroupCoverage {
    double slow = 0.0, fast = 0.0, alg = 0.0;
};
GroupCoverage evaluate_group_coverage(const std::vector<Trajectory>& predictions,
                                      const std::vector<Trajectory>& references,
                                      const StateGroups& groups, double slow_radius,
                                      double fast_radius, double alg_radius);

// --- artifacts --------------------------------------------------------------
std::string calibration_to_json(const ConformalCalibration& cal);
ConformalCalibration calibration_from_json(const std::string& text);
std::string coverage_to_json(const CoverageReport& rep);
std::string coverage_to_csv(const CoverageReport& rep);

}  // namespace daeops::conformal
