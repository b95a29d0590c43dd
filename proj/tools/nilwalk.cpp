// Batch runner: nilwalk <experiment> --config <file> --out <dir> [--seed S] [--workers W]

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "nilwalk/nilwalk.hpp"

int main(int argc, char ** argv)
{
  namespace ex = nilwalk::experiments;
  CLI::App app{"Random walks on nilpotent covering graphs"};
  app.require_subcommand(1);

  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  for (const auto & name : ex::experiment_names()) {
    auto * sub = app.add_subcommand(name, "run the " + name + " experiment");
    sub->add_option("--config", config, "JSON config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "output directory")->required();
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
  }
  CLI11_PARSE(app, argc, argv);

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    const auto cfg    = ex::ExperimentConfig::load(config, seed, workers);
    const auto result = ex::run(name, cfg, out);
    for (const auto & f : result.files) { std::cout << f.string() << "\n"; }
  } catch (const nilwalk::Error & e) {
    std::cerr << "nilwalk " << name << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception & e) {
    std::cerr << "nilwalk " << name << ": " << e.what() << "\n";
    return 1;
  }
  return 0;
}
