#pragma once

namespace zg {

/// Entry point of the `zerograds` tool. Returns 0 on success, 1 on a
/// runtime failure and 2 on bad arguments (usage is printed to stderr).
int cli_main(int argc, const char* const* argv);

}  // namespace zg
