#pragma once

#include <iosfwd>

namespace filagen {

/// Exit codes of the command-line front end.
enum ExitCode : int {
  kExitSuccess = 0,
  kExitUsage = 1,
  kExitValidation = 2,
  kExitRuntime = 3,
};

/// Parses argv and runs one subcommand: masks, train-gan, synth, train-seg,
/// eval, preview or pipeline. Results go to `out`, progress and errors to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace filagen
