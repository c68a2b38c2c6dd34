#pragma once

#include <iosfwd>

namespace quadrl::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitIo = 2;
inline constexpr int kExitUsage = 64;

/// Subcommands: tokenize, detokenize, reward, score, train-toy, bench-async,
/// validate-schedule. Reports go to `out`, diagnostics and help to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace quadrl::cli
