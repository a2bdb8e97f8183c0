#pragma once

#include <iosfwd>

namespace gsa {

/// Entry point of the gsa command-line tool. Returns 0 on success, 2 for
/// usage errors (bad flags, missing input files) and 1 for domain errors.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gsa
