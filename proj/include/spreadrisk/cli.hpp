#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace spreadrisk::cli {

inline constexpr const char* kToolVersion = "1.0.0";

/// Exit codes: 0 ok, 2 usage, 3 input, 4 infeasible, 5 solver failure.
enum ExitCode { kOk = 0, kUsage = 2, kInput = 3, kInfeasible = 4, kSolverFailure = 5 };

/// Runs one subcommand (risk, revisit, allocate, simulate, scenario, bench).
/// args excludes the program name. Every run writes a manifest JSON next to
/// its primary output (or at --manifest) sufficient to reproduce it.
int execute_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int execute_command(const std::vector<std::string>& args);

/// Renders per-node scalars of a grid-embedded network as a PPM heatmap.
void render_heatmap_ppm(const std::vector<double>& values, int width, int height,
                        const std::string& path);

std::string format_g12(double value);

}  // namespace spreadrisk::cli
