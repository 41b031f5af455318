#pragma once

namespace ecgmon {

// Entry point behind the `ecgmon` binary; also callable in-process from
// tests. Returns 0 on success, 1 on a runtime failure (an ecgmon::Error,
// reported as one "ecgmon: error: <code>: <message>" line on stderr), and
// 2 on a usage error.
int cli_main(int argc, const char* const* argv);

}  // namespace ecgmon
