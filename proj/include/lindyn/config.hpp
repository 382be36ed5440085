#pragma once

// Experiment configuration. Settings come from a flat key=value file and from
// command-line flags with the same names; flags override the file, the file
// overrides the per-experiment defaults.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lindyn/nonlinear.hpp"
#include "lindyn/simulate.hpp"

namespace lindyn {

using Settings = std::map<std::string, std::string, std::less<>>;

/// `key = value` lines; `#` starts a comment; blank lines ignored. Throws
/// InvalidArgument with the line number for malformed or repeated keys.
Settings parse_settings(std::string_view text);
/// Throws IoError if the file cannot be read.
Settings load_settings(const std::filesystem::path& path);
/// Entries of `overrides` replace those of `base`.
void merge_settings(Settings& base, const Settings& overrides);

enum class Experiment {
  predict,
  surface,
  simulate_scalar,
  compare_decay,
  real_data,
  nonlinear,
  rates,
  ingest,
};

/// Subcommand name, e.g. "real-data".
std::string_view to_string(Experiment e) noexcept;
Experiment parse_experiment(std::string_view name);

/// Every key a settings file may contain.
const std::vector<std::string>& known_setting_keys();

/// How the decay strength for the comparison runs is chosen.
enum class DecayChoice {
  none,     ///< no weight-decay run
  value,    ///< gamma given in user units
  matched,  ///< gamma_eff = lambda eps / (lambda + eps) for the reference mode
};

struct ExperimentConfig {
  Experiment experiment = Experiment::predict;

  std::vector<double> lambdas;
  /// Effective noise strengths given directly (scalar experiments).
  std::vector<double> epsilons;
  std::optional<double> sigma2;
  std::optional<double> laplace_b;
  DecayChoice decay = DecayChoice::none;
  double gamma = 0.0;  ///< user units; multiplied by N for the dynamics
  /// Mode whose fixed point the matched decay reproduces (1-based).
  std::size_t match_mode = 1;

  std::size_t n = 1;
  double alpha = 0.01;
  std::size_t epochs = 1000;
  std::size_t hidden = 32;
  InitScheme init = InitScheme::small_random;
  double init_scale = 1e-3;
  std::uint64_t seed = 0;
  std::filesystem::path out = ".";
  std::filesystem::path dataset;
  std::vector<std::size_t> modes;
  std::size_t record_every = 10;

  /// Scalar experiments: explicit starting weights (random when unset).
  std::optional<double> w1;
  std::optional<double> w2;
  Activation activation = Activation::relu;
  std::size_t paths = 4;
  double grid_min = -2.0;
  double grid_max = 2.0;
  std::size_t grid_points = 81;
  bool center = false;
  bool scale = false;
  std::string format = "f64";
  int threads = 0;  ///< 0 keeps the OpenMP default

  /// Noise model from sigma2 / laplace-b (none if neither set).
  NoiseModel noise() const;
  /// Effective noise for a given sample count: epsilon list entry, or from
  /// the noise model.
  std::vector<double> epsilon_grid(std::size_t samples) const;
};

/// Applies defaults for the experiment, then the settings. Validates every
/// field; errors are InvalidArgument naming the field.
ExperimentConfig resolve_config(Experiment experiment, const Settings& settings);

}  // namespace lindyn
