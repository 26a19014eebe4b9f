#pragma once

#include <iosfwd>

namespace zesrec {

/// Entry point of the `zesrec` command. Returns the process exit status;
/// failures print a single `error: ...` line to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace zesrec
