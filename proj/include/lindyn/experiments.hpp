#pragma once

// Subcommand implementations and the building blocks they share with the
// acceptance harness. Every cmd_* validates and computes before it writes.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lindyn/analytic.hpp"
#include "lindyn/config.hpp"
#include "lindyn/nonlinear.hpp"
#include "lindyn/simulate.hpp"
#include "lindyn/spectrum.hpp"

namespace lindyn {

struct CommandOutput {
  std::vector<std::filesystem::path> files;
  /// Human-readable lines for stdout.
  std::vector<std::string> summary;
};

CommandOutput cmd_predict(const ExperimentConfig& config);
CommandOutput cmd_surface(const ExperimentConfig& config);
CommandOutput cmd_simulate(const ExperimentConfig& config);
CommandOutput cmd_compare(const ExperimentConfig& config);
CommandOutput cmd_real_data(const ExperimentConfig& config);
CommandOutput cmd_nonlinear(const ExperimentConfig& config);
CommandOutput cmd_rates(const ExperimentConfig& config);
CommandOutput cmd_ingest(const ExperimentConfig& config);
CommandOutput run_experiment(const ExperimentConfig& config);

/// Training settings shared by the dataset experiments; noise and decay are
/// set per run by the caller.
TrainingConfig training_config(const ExperimentConfig& config);

/// Root-mean-square difference over the common time points.
double rms_gap(const Trajectory& a, const Trajectory& b);

struct ModeComparison {
  std::size_t mode = 0;
  double lambda = 0.0;
  double fixed_point = 0.0;
  double rms_gap = 0.0;
  /// rms_gap / fixed_point.
  double relative_gap = 0.0;
  Trajectory predicted;
  Trajectory simulated;
};

struct Replication {
  double epsilon = 0.0;
  double gamma_eff = 0.0;
  double tau = 0.0;
  std::vector<ModeComparison> modes;
  LinearRun run;
};

/// Trains the linear autoencoder and sets each recorded mode against its
/// closed-form prediction from the effective scalar init of that mode. Uses
/// the WDAE solution when the config has decay and no noise.
Replication replicate_linear(const Dataset& dataset, const Spectrum& spectrum,
                             const TrainingConfig& config, std::span<const std::size_t> modes,
                             LinearEngine engine = LinearEngine::automatic);

struct NormPhase {
  /// First recorded epoch after which the mode stays within tolerance of its
  /// fixed point; unset if it never settles.
  std::optional<double> converged_epoch;
  double norm_at_convergence = 0.0;
  double final_norm = 0.0;
  /// 1 - final_norm / norm_at_convergence.
  double shrinkage = 0.0;
  /// Largest |w(t) - w(converged)| after convergence.
  double mode_move = 0.0;
  /// Norm never rises after convergence by more than 1e-12 relative.
  bool norm_non_increasing = true;
};

NormPhase analyze_norm_phase(const Trajectory& mode, const Trajectory& norms, double fixed_point,
                             double tolerance = 1e-3);

struct NonlinearTriple {
  std::vector<ModeEstimate> ae;
  std::vector<ModeEstimate> wdae;
  std::vector<ModeEstimate> dae;
};

/// AE, WDAE and DAE runs from the same init and noise seed. `config.noise`
/// drives the DAE run, `config.weight_decay` the WDAE run.
NonlinearTriple run_nonlinear_triple(const Dataset& dataset, const Spectrum& spectrum,
                                     const TrainingConfig& config, Activation activation,
                                     std::span<const std::size_t> modes);

/// Mean ratio of entry k over the last `tail_fraction` of the estimates.
double plateau_value(std::span<const ModeEstimate> series, std::size_t k,
                     double tail_fraction = 0.1);
/// First estimate epoch whose ratio reaches half the plateau.
std::optional<std::size_t> half_rise_epoch(std::span<const ModeEstimate> series, std::size_t k,
                                           double plateau);

}  // namespace lindyn
