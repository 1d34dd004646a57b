#pragma once

namespace aad {

// Exit codes: 0 success, 2 configuration error, 3 data-format error.
int run_cli(int argc, const char* const* argv);

} // namespace aad
