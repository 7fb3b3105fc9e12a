#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace psc::cli {

/// Entry point of the command-line tool, callable in-process for tests.
/// Exit codes: 0 success, 1 analysis rejection or property violation,
/// 2 usage or parse error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace psc::cli
