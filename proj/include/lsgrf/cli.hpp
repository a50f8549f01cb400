#pragma once

#include <nlohmann/json.hpp>

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace lsgrf::cli {

inline constexpr std::string_view kToolVersion = "1.0.0";
// Seed override honored only when --seed is absent.
inline constexpr const char* kSeedEnvironment = "LSGRF_SEED";

enum ExitCode : int { kOk = 0, kConditionFailure = 1, kUsageError = 2 };

struct Artifacts {
    std::vector<std::pair<std::string, std::string>> files;  // name, bytes
    std::string primary;                                      // echoed to stdout
    int exit_code = kOk;
};

// Runs `command` from fully resolved parameters. Output bytes depend only on
// `params`, never on `threads`.
Artifacts execute(const std::string& command, const nlohmann::json& params, std::size_t threads);

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lsgrf::cli
