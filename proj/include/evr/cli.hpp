#pragma once

#include <cstdint>
#include <ostream>

namespace evr {

inline constexpr std::uint64_t kDefaultSeed = 20240101;

// Exit codes: 0 success, 1 validation error (bad flags, bad input, missing
// prerequisites), 2 runtime or provider failure.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace evr
