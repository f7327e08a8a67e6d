#ifndef HOM_CLI_HPP
#define HOM_CLI_HPP

#include <ostream>

namespace hom {

enum ExitCode : int {
  exit_ok = 0,
  exit_usage = 2,
  exit_runtime = 3,
  exit_selftest_failed = 4,
};

/// Entry point of the homsim tool: analytic | simulate | analyze | selftest.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hom

#endif  // HOM_CLI_HPP
