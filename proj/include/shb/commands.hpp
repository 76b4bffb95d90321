#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string_view>

#include "shb/config.hpp"

namespace shb {

inline constexpr int exit_ok = 0;
inline constexpr int exit_validation = 2;
inline constexpr int exit_numeric = 3;

struct CommandContext {
  std::filesystem::path out_dir;
  std::uint64_t seed = 0;
  bool strict = false;
  std::ostream* log = nullptr;    // progress and results
  std::ostream* diag = nullptr;   // diagnostics and advisories
};

// Each command assumes a parsed config and throws shb::Error on failure;
// run_command maps those to exit codes.
void cmd_holeburn(const ExperimentConfig& cfg, const CommandContext& ctx);
void cmd_pulse(const ExperimentConfig& cfg, const CommandContext& ctx);
void cmd_zeeman(const ExperimentConfig& cfg, const CommandContext& ctx);
/// Degenerate per-field fits are reported and skipped unless ctx.strict.
void cmd_diffusion(const ExperimentConfig& cfg, const CommandContext& ctx);
void cmd_dipolar(const ExperimentConfig& cfg, const CommandContext& ctx);

struct CommandRequest {
  std::string_view command;
  std::filesystem::path config;
  std::optional<std::filesystem::path> out_dir;
  std::optional<std::uint64_t> seed;
  bool strict = false;
};

/// Loads the config, resolves output directory and seed (flags override the
/// file), runs the command and returns 0, 2 (validation) or 3 (numeric).
int run_command(const CommandRequest& request, std::ostream& log, std::ostream& diag);

} // namespace shb
