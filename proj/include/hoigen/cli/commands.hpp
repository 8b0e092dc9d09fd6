#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "hoigen/cli/config.hpp"

namespace hoigen::cli {

/// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

/// Each command validates and loads all inputs before it writes anything. Outputs depend only on
/// the configuration and the seed.
void cmd_extract(const RunConfig& cfg, std::ostream& log);
void cmd_interp(const RunConfig& cfg, std::ostream& log);
void cmd_synth(const RunConfig& cfg, std::ostream& log);
void cmd_train(const RunConfig& cfg, std::ostream& log);
void cmd_sample(const RunConfig& cfg, std::ostream& log);
void cmd_genlong(const RunConfig& cfg, std::ostream& log);
void cmd_rollout(const RunConfig& cfg, std::ostream& log);
void cmd_metrics(const RunConfig& cfg, std::ostream& log);
void cmd_report(const RunConfig& cfg, std::ostream& log);

/// Full command line (args[0] is the program name). Precedence: defaults < --config file <
/// HOIGEN_* environment (paths) < flags. Errors are printed to `err` and mapped to exit codes.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hoigen::cli
