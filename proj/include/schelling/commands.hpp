#pragma once

#include <ostream>

#include "schelling/run_spec.hpp"

namespace schelling {

/// Process exit codes.
enum ExitCode : int {
    kExitOk = 0,
    kExitInvalidSpec = 1,
    kExitCapacity = 2,
    kExitCheckFailed = 3,
    kExitInternal = 4,
};

/// One trajectory: metrics CSV to spec.out (stdout if empty), optional event
/// JSONL and final snapshot. Returns an exit code; throws on invalid specs.
int cmd_simulate(const RunSpec& spec, std::ostream& out);

/// One summary row per (grid point, replicate), written in that order.
int cmd_sweep(const RunSpec& spec, std::ostream& out);

/// Exact absorption analysis as a JSON report.
int cmd_oracle(const RunSpec& spec, std::ostream& out);

/// Simulated versus exact law at t = tmax over `reps` replicates.
int cmd_compare(const RunSpec& spec, std::ostream& out);

/// Parses argv and dispatches; maps exceptions to exit codes with a message on `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace schelling
