#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace nonacc::cli {

inline constexpr const char* kSchemaVersion = "1.0";

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"check", "spectrum", "agmon", "truncate", "verify", "probe"};
  return names;
}

struct RunOptions {
  std::string subcommand;
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;  // overrides [run] seed
  int jobs = 1;
};

enum ExitCode : int { ok = 0, operational_error = 1, check_failed = 2 };

/// Runs one subcommand and writes report.json (plus CSV/JSONL bulk files) into out_dir.
/// Errors are described on `err`; the return value is the process exit status.
int run(const RunOptions& opts, std::ostream& err);

}  // namespace nonacc::cli
