#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lamil::cli {

// Parses and runs one command (synth, train, cv, eval, attend, import).
// args excludes the program name. Diagnostics go to err; returns the exit
// code: 0 on success, 1 on a failed command, 2 on bad usage.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lamil::cli
