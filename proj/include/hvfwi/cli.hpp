#pragma once

namespace hvfwi {

/// Parses and dispatches the full command-line interface.
/// Returns the process exit code.
int run_cli(int argc, const char* const* argv);

}  // namespace hvfwi
