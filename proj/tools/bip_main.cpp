#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "bip/harness.hpp"

int main(int argc, char** argv) {
  using namespace bip::harness;
  CLI::App app{"Bayesian inverse problems for dissipative PDEs: batch experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> out;
  for (const char* name : {"heat-rate", "stokes-lagrangian", "ns-eulerian", "metric-props", "synth"}) {
    auto* sub = app.add_subcommand(name, std::string("run the ") + name + " experiment");
    sub->add_option("--config", config_path, "INI configuration file")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "random seed (overrides BIP_SEED and run.seed)");
    sub->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--out", out, "output directory");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInvalid;
  }

  const auto* sub = app.get_subcommands().front();
  try {
    const Experiment e = experiment_from_string(sub->get_name());
    const Config cfg = Config::load(config_path);
    return run_experiment(e, cfg, RunOptions{seed, workers, out}, std::cerr);
  } catch (const ConfigError& ex) {
    std::cerr << "bip: invalid configuration: " << ex.what() << "\n";
    return kExitInvalid;
  } catch (const std::exception& ex) {
    std::cerr << "bip: " << ex.what() << "\n";
    return 1;
  }
}
