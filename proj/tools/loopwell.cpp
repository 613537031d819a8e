#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "loopwell/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"loopwell: normal forms and spectral experiments for wells on a loop"};
  app.require_subcommand(1);

  std::string config;
  std::string out = ".";
  unsigned threads = 1;
  std::uint64_t seed = 0;

  const char* commands[][2] = {
      {"sweep", "eigenvalue sweep over 1/hbar (plane, spin or circle recipe)"},
      {"bnf", "Birkhoff normal form of a formal deformation"},
      {"model-a", "oscillation profile of the lattice model over sigma in [0, 1)"},
      {"compare-bs", "Bohr-Sommerfeld model vs full circle operator (small or large energy)"},
      {"action", "action invariant of a closed curve"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config, "JSON config file")->required();
    sub->add_option("--out", out, "output directory")->capture_default_str();
    sub->add_option("--threads", threads, "worker threads for sweeps")->capture_default_str()->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "seed for randomized drivers")->capture_default_str();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : loopwell::cli::kConfigError;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  return loopwell::cli::run(command, config, out, {threads, seed}, std::cerr);
}
