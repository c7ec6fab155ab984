#ifndef QMIDX_TOOLS_CLI_HPP
#define QMIDX_TOOLS_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace qmidx::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

// Runs one command. `args` excludes the program name. Results go to `out`,
// diagnostics to `err`. Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace qmidx::cli

#endif
