#pragma once

#include <iosfwd>

namespace pfc {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int solver_failure = 1;
inline constexpr int config_error = 2;
inline constexpr int check_failed = 3;
}  // namespace exit_code

/// `pfc <subcommand> --config <path> [--out <dir>] [--seed <int>]`.
/// Subcommands: solve, tangent, adjoint, gradcheck, optimize, probe <name>.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pfc
