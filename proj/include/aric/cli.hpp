#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace aric::cli {

/// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // runtime or data failure
inline constexpr int kExitUsage = 2;    // bad flags or invalid settings

/// Runs one invocation. `args` excludes the program name, e.g. {"theory", "--k", "3"}.
/// Reports go to files under --out; stdout gets a JSON payload or a short summary.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Key under which reports store wall-clock data; drop it to compare runs.
inline constexpr const char* kTimingKey = "timing";

}  // namespace aric::cli
