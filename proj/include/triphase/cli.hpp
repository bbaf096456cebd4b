#pragma once

// Command-line surface. Exit codes:
//   0  success (solve, delta2y), balanced (check-balanced), within tolerance (compare)
//   1  not balanced, or solutions differ beyond tolerance
//   2  singular network matrix
//   3  unreadable or invalid input, no voltage source, or per-phase requested on an ineligible network
//   64 usage error

#include <ostream>

namespace triphase {

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace triphase
