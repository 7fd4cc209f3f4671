#pragma once

namespace affedit::cli {

// Full command-line entry point; returns the process exit code. Errors are
// reported as one-line JSON objects on stderr.
int run(int argc, const char* const* argv);

}  // namespace affedit::cli
