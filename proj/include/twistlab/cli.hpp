#pragma once

// Command-line front end: twistlab validate | check | compare | generate.
//
// Exit codes:
//   0  success (validate/generate), or the requested verdict passed
//   1  check ran but the verdict failed
//   2  usage, file, schema or name-resolution error
//   3  math-domain error (twist positivity, degeneracy, guards, family
//      validity domain)
//   4  compare found modes disagreeing on a verdict
//
// Reports go to `out` (stdout in the binary); diagnostics and timing go to
// `err`. Identical scene + flags produce byte-identical reports.

#include <iosfwd>
#include <string>
#include <vector>

namespace twistlab {

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace twistlab
