#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace opclass::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitStageFailure = 2;

/// Every flag can also be set through the environment as OPCLASS_<FLAG>,
/// upper-cased with dashes turned into underscores (e.g. OPCLASS_THREADS).
/// A flag on the command line wins over the environment, which wins over
/// the built-in default.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// argv wrapper for main().
int run_cli(int argc, char** argv);

} // namespace opclass::cli
