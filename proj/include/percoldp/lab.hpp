#pragma once

// Command-line driver shared by the percoldp executable and the tests.

#include <iosfwd>
#include <string>
#include <vector>

namespace percoldp::lab {

enum ExitCode : int {
  kOk = 0,
  kUsage = 2,       // bad flags, parameter or admissibility errors
  kGap = 3,         // an oracle comparison exceeded its tolerance
  kNumeric = 4,     // solver failure
};

/// Runs one command. `args` excludes the program name. ResultRecords go to
/// `out` (or the --json file), diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Expands `--config FILE` into flags. Each non-blank, non-comment line of the
/// file is `key = value`; it becomes `--key value`, inserted right after the
/// subcommand. Keys whose flag already appears on the command line are
/// skipped. A value of `true` gives a bare flag and `false` omits it.
std::vector<std::string> expand_config(const std::vector<std::string>& args);

}  // namespace percoldp::lab
