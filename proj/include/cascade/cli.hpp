#pragma once

#include <string_view>

namespace cascade {

inline constexpr std::string_view kToolVersion = "0.1.0";

// Entry point for the `cascade` tool. Returns 0 on success, 1 on domain error
// (JSON error on stderr), 2 on usage error.
int cli_dispatch(int argc, const char* const* argv);

}  // namespace cascade
