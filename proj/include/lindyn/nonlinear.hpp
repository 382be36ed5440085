#pragma once

// One-hidden-layer autoencoder x_hat = W2 phi(W1 x) trained by plain
// backpropagation on freshly corrupted inputs, and the eigenmode estimator
// diag(V^T Sigma_hat V) / lambda with Sigma_hat = sum_i x_i x_hat_i^T.

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "lindyn/analytic.hpp"
#include "lindyn/dataset.hpp"
#include "lindyn/matrix.hpp"
#include "lindyn/simulate.hpp"
#include "lindyn/spectrum.hpp"

namespace lindyn {

enum class Activation { identity, relu, tanh };

std::string_view to_string(Activation a) noexcept;
/// Throws InvalidArgument for unknown names.
Activation parse_activation(std::string_view name);

struct NonlinearAE {
  Matrix w1;  ///< H x D
  Matrix w2;  ///< D x H
  Activation activation = Activation::relu;
};

/// Ratios below this fraction of the top eigenvalue are reported absent.
inline constexpr double kLambdaFloorFraction = 1e-8;

struct ModeEstimate {
  std::size_t epoch = 0;
  /// 1-based modes the ratios refer to.
  std::vector<std::size_t> modes;
  /// lambda_hat_j / lambda_j, nullopt for modes under the eigenvalue floor.
  std::vector<std::optional<double>> ratios;
};

/// Estimator on clean inputs. `modes` empty means all D modes.
ModeEstimate estimate_identity_map(const Dataset& dataset, const NonlinearAE& model,
                                   const Spectrum& spectrum,
                                   std::span<const std::size_t> modes = {});

struct BackpropResult {
  double loss;
  Matrix grad_w1;
  Matrix grad_w2;
};

/// Gradients of (1/2N) sum ||x_i - W2 phi(W1 x~_i)||^2. ReLU'(0) = 0.
BackpropResult backprop_grads(const NonlinearAE& model, const Matrix& batch,
                              const Matrix& corrupted);

struct NonlinearRunOptions {
  std::vector<std::size_t> modes;
  std::optional<NonlinearAE> initial;
};

/// Full-batch training; one fresh corruption per epoch from config.noise_seed.
/// Estimates at epoch 0, every config.record_every epochs and the last epoch.
/// config.epochs may be 0, giving a single estimate of the initial model.
std::vector<ModeEstimate> train_nonlinear(const Dataset& dataset, const Spectrum& spectrum,
                                          const TrainingConfig& config, Activation activation,
                                          const NonlinearRunOptions& options = {});

/// Per-mode series of ratios, kind = estimated. Absent values are skipped.
std::vector<Trajectory> estimates_to_trajectories(std::span<const ModeEstimate> estimates);

}  // namespace lindyn
