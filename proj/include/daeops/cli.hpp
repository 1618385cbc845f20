#pragma once

#include <string>

namespace daeops::cli {

/// Full command-line driver. Subcommands: reference, train, rollout,
/// calibrate, coverage, ablate, cascade-demo.
/// Exit codes: 0 ok, 2 configuration error, 3 numeric failure,
/// 4 quality gate tripped.
int run(int argc, const char* const* argv);

}  // namespace daeops::cli
