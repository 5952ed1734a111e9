#pragma once

// Command implementations behind the phasenoise executable. Each returns the
// payload it would print, so tests can compare bytes directly.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "phasenoise/config.hpp"
#include "phasenoise/ensemble.hpp"

namespace phasenoise {

const char* tool_version();

/// Applies --seed / --trajectories overrides, materializing the sim block.
void apply_overrides(Scenario& s, std::optional<std::uint64_t> seed, std::optional<std::uint64_t> trajectories);

/// key = value lines.
std::string analytic_text(const Scenario& s);
/// Header plus one row, same columns as the sweep output.
std::string analytic_csv(const Scenario& s);

struct SimulateOptions {
    std::optional<Mode> mode;  // default follows sim.frame
    unsigned threads = 0;
    bool keep_first_trajectory = false;
};

struct SimulateOutput {
    std::string record;  // JSON
    std::optional<Trajectory> first;
};

SimulateOutput simulate(const Scenario& s, const SimulateOptions& options = {});

void write_trajectory_csv(std::ostream& out, const Trajectory& traj);

/// Column names of sweep rows, in order.
const std::vector<std::string>& sweep_columns();

/// Cartesian product of the sweep axes (first axis outermost) times the
/// requested modes. Rows come out in grid order.
std::string sweep_csv(const Scenario& s, unsigned threads = 0);

enum class CoupledMethod { lyapunov, spectral, both, automatic };
std::optional<CoupledMethod> parse_coupled_method(std::string_view text);

struct CoupledOutput {
    std::string record;  // JSON
    std::string csv;
};

CoupledOutput coupled(const Scenario& s, CoupledMethod method);

/// Reads a CSV with a header row and runs the Welch estimator on one column
/// (by name or zero-based index).
std::string psd_csv(std::istream& in, const std::string& column, double dt, std::size_t segment, double overlap);

/// Full command line. Returns the process exit code: 0 ok, 2 configuration
/// or usage error, 3 numerical failure.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace phasenoise
