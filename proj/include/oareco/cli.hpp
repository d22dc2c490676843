#pragma once

// Command-line front end: simulate, reconstruct, analyze, evaluate, bench.
// Exit status 0 on success, 1 on invalid input or usage, 2 on numerical failure.

#include <iosfwd>

namespace oareco::cli {

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace oareco::cli
