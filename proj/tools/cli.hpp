#pragma once

#include <cstdint>
#include <iosfwd>
#include <string_view>

namespace stratind::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitEval = 2;

/// Entry point behind the `stratind` executable.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view data);

} // namespace stratind::cli
