#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "bsvie/diagnostics.hpp"
#include "bsvie/lipschitz_solver.hpp"

namespace bsvie {

// Scenario runner. The JSON schema is documented in docs/scenarios.md.

enum ExitCode : int {
  kExitPass = 0,
  kExitCheckFailed = 1,
  kExitConfigError = 2,
  kExitDiverged = 3,
};

struct RunOptions {
  std::optional<std::uint64_t> seed;  ///< overrides ensemble.seed
  std::size_t threads = 1;
  std::optional<std::filesystem::path> out;  ///< no files are written when unset
  /// Subset of the configured checks to run; unset runs all of them.
  std::optional<std::vector<std::string>> checks;
};

struct RunOutcome {
  int exit_code = kExitPass;
  std::string error;  ///< message of a config error or a divergence
  nlohmann::json report;
  VerificationReport verification;
  SolverReport solver;
  std::optional<LipschitzResult> solution;
};

/// Runs a parsed scenario. Config problems become exit 2 and divergence
/// exit 3; in both cases report.json is still written when an out dir is set.
RunOutcome run_scenario(const nlohmann::json& config, const RunOptions& opt = {});

/// `what` is a file path, or the name of a bundled scenario when no such file
/// exists. Throws ConfigError if neither resolves or the JSON is malformed.
nlohmann::json load_scenario(const std::string& what);

std::vector<std::string> builtin_scenario_names();
nlohmann::json builtin_scenario(const std::string& name);

struct CatalogEntry {
  std::string name;
  std::string description;
  std::string exercises;
  std::string source;   ///< "builtin" or the file path
  std::string warning;  ///< non-empty for files that failed to parse
};

/// Bundled scenarios followed by every *.json in `dir`, sorted by file name.
std::vector<CatalogEntry> list_scenarios(const std::optional<std::filesystem::path>& dir = std::nullopt);
std::string format_catalog(const std::vector<CatalogEntry>& entries);

/// Splits "a,b , c" into names; "none" gives an empty list.
std::vector<std::string> parse_check_list(const std::string& list);

/// Exact 17-significant-digit decimal.
std::string format_number(double v);

}  // namespace bsvie
