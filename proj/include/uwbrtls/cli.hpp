#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "uwbrtls/metrics.hpp"
#include "uwbrtls/solver.hpp"
#include "uwbrtls/wcs.hpp"

namespace uwb::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitConfig = 2,
  kExitEmpty = 3,
  kExitIo = 4,
};

struct Options {
  std::string config;
  std::string out;  // empty: use the config's out_dir
  std::optional<std::uint64_t> seed;
  bool verbose = false;
  std::string reports;  // locate input; default <out>/reports.jsonl
  std::string fixes;    // eval input; default <out>/fixes.csv
  std::string truth;    // eval input; default <out>/truth.jsonl
  std::string tdoa;     // eval input; default <out>/tdoa.csv when present
};

int cmd_simulate(const Options& opts, std::ostream& log);
int cmd_locate(const Options& opts, std::ostream& log);
int cmd_eval(const Options& opts, std::ostream& log);
int cmd_deploy_check(const Options& opts, std::ostream& log);
int cmd_demo(const Options& opts, std::ostream& log);

/// Parses argv and dispatches to a subcommand; returns the process exit code.
int run(int argc, char** argv);

// File formats shared with tests.
std::string fixes_csv(const std::vector<Fix>& fixes);
std::vector<Fix> read_fixes_csv(const std::string& path);
std::string tdoa_csv(const std::vector<SyncedTdoa>& synced);
std::vector<SyncedTdoa> read_tdoa_csv(const std::string& path);

}  // namespace uwb::cli
