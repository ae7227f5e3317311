#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "chronoctl/analysis.hpp"
#include "chronoctl/realization.hpp"

namespace chronoctl {

inline constexpr const char* kVersion = "0.1.0";

/// Process exit codes of the command-line front-end.
enum ExitCode : int {
  exit_ok = 0,
  exit_config = 2,
  exit_numeric = 3,
  exit_hypothesis = 4,
};

/// Entry point of the `chronoctl` tool. Output files go where -o points,
/// otherwise to `out`; diagnostics go to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

nlohmann::json to_json(const RankReport& rep);
nlohmann::json to_json(const GramianReport& rep);
nlohmann::json to_json(const Factorization& f);

}  // namespace chronoctl
