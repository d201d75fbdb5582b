#pragma once

// Command-line front end. Mode, slice and anchor indices are 1-based on the
// command line and in every report this layer prints.
//
// Exit codes: 0 ok, 2 usage or precondition, 3 file or parse error,
// 4 solver or assumption failure.

#include <iosfwd>
#include <string>
#include <vector>

namespace ntd::cli {

enum ExitCode : int { ok = 0, usage = 2, io = 3, solver = 4 };

// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ntd::cli
