#pragma once

#include <iosfwd>

namespace claimcheck::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;   // bad flags, unknown source, missing path
inline constexpr int kExitConfig = 3;  // provider or configuration error

/// Entry point shared by main() and the tests. Human output goes to `out`,
/// logs and diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace claimcheck::cli
