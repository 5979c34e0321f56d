#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace creditvol::cli {

enum ExitCode : int {
  ok = 0,
  usage = 2,
  missing_input = 3,
  config_conflict = 4,
  data_error = 5,
  numerical_error = 6,
  internal_error = 70,
};

// Runs one subcommand. Help text and progress go to `out`; failures produce a
// single line on `err`:
//   error: code=<name> exit=<n> msg="<text>"
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int dispatch(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace creditvol::cli
