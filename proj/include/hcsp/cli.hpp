#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hcsp::cli {

/// Exit codes shared by every subcommand.
enum ExitCode : int { kOk = 0, kConfig = 2, kIo = 3, kModel = 4 };

/// Runs one subcommand (synth, train, classify, eval, grid). Decisions and
/// summaries go to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace hcsp::cli
