#pragma once

namespace factopt {

// Entry point behind the `factopt` binary; exposed so tests can drive the
// command surface in-process. Exit codes: 0 success, 2 configuration error,
// 3 divergence, 4 I/O error.
int cli_main(int argc, const char* const* argv);

}  // namespace factopt
