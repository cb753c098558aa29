#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace fraccond {

enum ExitCode : int {
  kExitSuccess = 0,
  kExitScientific = 1,  // identity or threshold failure
  kExitUsage = 2,       // usage or configuration error
};

struct CommandOptions {
  std::string config;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string data;     // reconstruct: DN block CSV
  std::string records;  // fit: records CSV
  std::string model;    // fit: log | loglog
};

/// --threads wins; otherwise FRACCOND_THREADS; otherwise hardware concurrency.
int resolve_threads(std::optional<int> flag);

int cmd_verify(const CommandOptions& opts, std::ostream& log);
int cmd_sweep(const CommandOptions& opts, std::ostream& log);
int cmd_fit(const CommandOptions& opts, std::ostream& log);
int cmd_reconstruct(const CommandOptions& opts, std::ostream& log);
int cmd_dnmap(const CommandOptions& opts, std::ostream& log);
int cmd_ucp_probe(const CommandOptions& opts, std::ostream& log);

/// Dispatches by subcommand name and maps exceptions to exit codes;
/// error messages go to `err`.
int run_command(const std::string& name, const CommandOptions& opts, std::ostream& log, std::ostream& err);

}  // namespace fraccond
