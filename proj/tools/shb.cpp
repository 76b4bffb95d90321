#include <iostream>

#include <CLI11.hpp>

#include "shb/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Spectral hole burning toolkit"};
  app.require_subcommand(1);

  struct Flags {
    std::string config;
    std::string out;
    std::uint64_t seed = 0;
    bool strict = false;
  };
  Flags flags;
  CLI::Option* out_opt = nullptr;
  CLI::Option* seed_opt = nullptr;

  const std::pair<const char*, const char*> commands[] = {
      {"holeburn", "Run a burn/wait sequence and export hole spectra"},
      {"pulse", "Synthesize chirped pulses and compare their spectra"},
      {"zeeman", "Predict hole shifts, splittings and hole patterns in a field"},
      {"diffusion", "Fit spectral-diffusion time series and the field noise"},
      {"dipolar", "Estimate host-spin dipolar fields"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", flags.config, "TOML experiment file")->required()->check(CLI::ExistingFile);
    auto* o = sub->add_option("--out", flags.out, "Output directory (overrides the config)");
    auto* s = sub->add_option("--seed", flags.seed, "RNG seed (overrides the config)");
    sub->add_flag("--strict", flags.strict, "Treat degenerate fits as errors");
    sub->callback([&, o, s] {
      out_opt = o;
      seed_opt = s;
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : shb::exit_validation;
  }

  shb::CommandRequest req;
  req.command = app.get_subcommands().front()->get_name();
  req.config = flags.config;
  if (out_opt && out_opt->count()) req.out_dir = flags.out;
  if (seed_opt && seed_opt->count()) req.seed = flags.seed;
  req.strict = flags.strict;
  return shb::run_command(req, std::cout, std::cerr);
}
