// Command-line front end: one subcommand per experiment, all sharing the same
// flags. Exit codes: 0 ok, 2 configuration, 3 divergence, 4 I/O or parse.

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <string>

#include "lindyn/config.hpp"
#include "lindyn/errors.hpp"
#include "lindyn/experiments.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitDivergence = 3;
constexpr int kExitIo = 4;

struct FlagHelp {
  const char* key;
  const char* help;
};

constexpr FlagHelp kFlags[] = {
    {"lambda", "eigenvalue(s), comma separated"},
    {"epsilon", "effective noise strength(s) eps, comma separated"},
    {"sigma2", "Gaussian noise variance (eps = N sigma2)"},
    {"laplace-b", "Laplace noise scale (eps = 2 N b^2)"},
    {"gamma", "weight decay in user units, 'match' or 'none'"},
    {"match-mode", "mode whose fixed point the matched decay reproduces"},
    {"n", "sample count (scalar runs) or sample limit (datasets)"},
    {"alpha", "learning rate"},
    {"epochs", "number of full-batch epochs"},
    {"hidden", "hidden width H"},
    {"init", "orthogonal or small_random"},
    {"init-scale", "initial weight scale"},
    {"seed", "random seed"},
    {"out", "output directory"},
    {"dataset", "dataset file (IDX, CIFAR-10 .bin, .csv or .f64)"},
    {"modes", "1-based modes to record, comma separated"},
    {"record-every", "recording cadence in epochs"},
    {"w1", "scalar runs: initial w1"},
    {"w2", "scalar runs: initial w2"},
    {"activation", "nonlinear runs: relu, tanh or identity"},
    {"paths", "surface: number of descent paths"},
    {"grid-min", "surface: lower grid bound"},
    {"grid-max", "surface: upper grid bound"},
    {"grid-points", "surface: points per axis"},
    {"center", "subtract per-feature means (true/false)"},
    {"scale", "divide by the largest absolute entry (true/false)"},
    {"format", "ingest cache format: f64 or csv"},
    {"threads", "OpenMP threads (0 keeps the default)"},
};

struct Command {
  const char* name;
  const char* help;
};

constexpr Command kCommands[] = {
    {"predict", "closed-form noise and decay trajectories on a lambda/eps grid"},
    {"surface", "scalar loss surface with gradient-descent paths"},
    {"simulate", "scalar gradient descent against the closed form"},
    {"compare", "noise versus weight decay on a synthetic dataset, with weight norms"},
    {"real-data", "predicted versus simulated modes on an image dataset"},
    {"nonlinear", "AE / WDAE / DAE triple with a nonlinear hidden layer"},
    {"rates", "optimal learning rates and their ratio over an eps grid"},
    {"ingest", "parse a dataset, write a matrix cache and its spectrum"},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learning dynamics of linear denoising and weight-decayed autoencoders"};
  app.require_subcommand(1);

  std::map<std::string, std::map<std::string, std::string>> values;
  std::map<std::string, std::string> config_files;
  std::map<std::string, CLI::App*> subs;
  for (const Command& cmd : kCommands) {
    CLI::App* sub = app.add_subcommand(cmd.name, cmd.help);
    subs[cmd.name] = sub;
    sub->add_option("--config", config_files[cmd.name], "key=value settings file");
    for (const FlagHelp& f : kFlags)
      sub->add_option(std::string("--") + f.key, values[cmd.name][f.key], f.help);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    for (const Command& cmd : kCommands) {
      CLI::App* sub = subs[cmd.name];
      if (!sub->parsed()) continue;
      lindyn::Settings settings;
      if (!config_files[cmd.name].empty()) settings = lindyn::load_settings(config_files[cmd.name]);
      lindyn::Settings flags;
      for (const FlagHelp& f : kFlags)
        if (sub->count(std::string("--") + f.key) > 0) flags[f.key] = values[cmd.name][f.key];
      lindyn::merge_settings(settings, flags);
      const lindyn::ExperimentConfig config =
          lindyn::resolve_config(lindyn::parse_experiment(cmd.name), settings);
      const lindyn::CommandOutput out = lindyn::run_experiment(config);
      for (const std::string& line : out.summary) std::cout << line << '\n';
      for (const auto& path : out.files) std::cout << "wrote " << path.string() << '\n';
    }
  } catch (const lindyn::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const lindyn::DivergenceError& e) {
    std::cerr << "diverged: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const lindyn::ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kExitIo;
  } catch (const lindyn::IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
