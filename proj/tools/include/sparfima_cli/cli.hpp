#pragma once

#include <ostream>

namespace sparfima::cli {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitDegraded = 4;  // mc finished but some cell lost > 50% of fits

// Environment variable that, when set, replaces every seed (flags and mc
// configs alike).
inline constexpr const char* kSeedEnv = "SPARFIMA_SEED";

// Entry point behind the `sparfima` executable. Errors are reported on `err`
// as a single-line JSON object.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sparfima::cli
