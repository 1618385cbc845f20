#pragma once

#include <map>
#include <string>
#include <vector>

namespace daeops::integrate {

using Vec = std::vector<double>;

/// Time series of full DAE states. Produced by the reference integrator and
/// by surrogate rollouts; consumed by validation and conformal calibration.
struct Trajectory {
    std::vector<double> times;
    std::vector<Vec> x;  // differential states per stored time
    std::vector<Vec> z;  // algebraic states per stored time
    std::string system_name;
    Vec mu;
    std::string notes;
    std::map<std::string, double> stats;

    std::size_t size() const { return times.size(); }
};

}  // namespace daeops::integrate
