#pragma once

// Discrete gradient descent on the scalar mode loss and on the full linear
// autoencoder. One step is one full-batch epoch, so with tau = N / alpha the
// scalar update is w += (1/tau) * rhs.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "lindyn/analytic.hpp"
#include "lindyn/dataset.hpp"
#include "lindyn/matrix.hpp"
#include "lindyn/spectrum.hpp"

namespace lindyn {

/// Any |w| or weight entry above this aborts the run.
inline constexpr double kDivergenceThreshold = 1e12;

enum class InitScheme { orthogonal, small_random };

struct InitConfig {
  InitScheme scheme = InitScheme::small_random;
  double scale = 1e-3;
  std::uint64_t seed = 0;
};

enum class LossMode { marginalized, sampled };

struct TrainingConfig {
  double learning_rate = 0.01;
  std::size_t epochs = 1000;
  NoiseModel noise;
  /// gamma in user units; the scalar dynamics see N * gamma.
  double weight_decay = 0.0;
  InitConfig init;
  std::size_t hidden_dim = 32;
  std::size_t record_every = 10;
  LossMode loss_mode = LossMode::marginalized;
  std::size_t noise_draws_per_step = 1;
  std::uint64_t noise_seed = 0;

  /// Throws InvalidArgument naming the offending field.
  void validate() const;
  double tau(std::size_t n) const { return static_cast<double>(n) / learning_rate; }
};

struct LinearAE {
  Matrix w1;  ///< H x D
  Matrix w2;  ///< D x H

  std::size_t hidden() const noexcept { return w1.rows(); }
  std::size_t input_dim() const noexcept { return w1.cols(); }
  /// ||W1||^2 + ||W2||^2
  double squared_norm() const noexcept;
};

struct ScalarRun {
  Trajectory w;
  std::vector<double> w1;
  std::vector<double> w2;
  /// The step size exceeded the stability-optimal rate for this mode.
  bool above_optimal_rate = false;
};

/// Gradient descent on the scalar loss. Records step 0, every record_every
/// steps and the last step. Throws DivergenceError past kDivergenceThreshold.
ScalarRun run_scalar_gd(const ScalarMode& mode, std::size_t steps, std::size_t record_every,
                        double gamma_eff = 0.0);

/// Classical RK4 on tau dw1/dt = w2 lambda (1 - w) - eps w2^2 w1 - gamma_eff w1
/// (and symmetric), sampled at the given increasing times. Covers the cases
/// the closed form rejects: lambda = 0 and |w2^2 - w1^2| near zero.
Trajectory integrate_scalar_flow(const ScalarMode& mode, std::span<const double> times,
                                 double gamma_eff = 0.0, long mode_index = 0);

/// Closed-form DAE trajectory when it applies, otherwise integrate_scalar_flow.
Trajectory predict_dae(const ScalarMode& mode, std::span<const double> times, long mode_index);

/// W1 = R D1 V^T, W2 = V D2 R^T with R a seeded random h x h orthogonal matrix
/// and V the leading h eigenvectors.
LinearAE init_orthogonal(std::size_t d, std::size_t h, const Spectrum& spectrum, double scale,
                         std::uint64_t seed);
/// As above with per-mode diagonal entries (length h each).
LinearAE init_orthogonal(const Spectrum& spectrum, std::span<const double> d1,
                         std::span<const double> d2, std::uint64_t seed);
/// Entries iid uniform in [-scale, scale]; W1 is drawn before W2.
LinearAE init_small_random(std::size_t d, std::size_t h, double scale, std::uint64_t seed);
LinearAE initialize(const InitConfig& init, std::size_t d, std::size_t h, const Spectrum& spectrum);

/// Random h x h orthogonal matrix (Gram-Schmidt on a Gaussian matrix).
Matrix random_orthogonal(std::size_t h, std::mt19937_64& rng);

struct LossAndGrads {
  double loss;
  Matrix grad_w1;
  Matrix grad_w2;
};

/// Noise-marginalized objective (1/2N) sum ||x - W2 W1 x||^2
/// + (eps/2N) tr(W2 W1 W1^T W2^T) + (gamma/2)(||W1||^2 + ||W2||^2),
/// with eps = N s^2 and gamma in user units.
LossAndGrads marginalized_loss_and_grads(const LinearAE& model, const Dataset& dataset,
                                         double epsilon_eff, double weight_decay = 0.0);
/// Same objective from a precomputed unnormalized covariance.
LossAndGrads marginalized_loss_and_grads(const LinearAE& model, const Matrix& covariance,
                                         std::size_t n, double epsilon_eff,
                                         double weight_decay = 0.0);

/// In-place corruption x += noise, iid per entry.
void add_noise(Matrix& x, const NoiseModel& noise, std::mt19937_64& rng);

struct SampledLoss {
  double mean;
  /// Standard error of the mean over draws (0 for a single draw).
  double std_error;
  std::size_t draws;
};

/// Monte Carlo estimate of (1/2N) sum ||x - W2 W1 (x + noise)||^2.
SampledLoss sampled_loss(const LinearAE& model, const Dataset& dataset, const NoiseModel& noise,
                         std::size_t draws, std::uint64_t seed);

enum class LinearEngine {
  automatic,   ///< eigenbasis for marginalized runs with D > 64
  data_space,  ///< weights as given, dense covariance
  eigenbasis,  ///< train A = W1 V, B = V^T W2 against diagonal Lambda
};

struct LinearRunOptions {
  /// 1-based modes to record; empty records all.
  std::vector<std::size_t> modes;
  bool track_off_diagonal = false;
  LinearEngine engine = LinearEngine::automatic;
  /// Starting weights; config.init is used when empty.
  std::optional<LinearAE> initial;
};

struct LinearRun {
  std::vector<Trajectory> modes;
  /// ||W1||^2 + ||W2||^2 per recorded epoch, mode index -1.
  Trajectory norms;
  /// Objective value per recorded epoch (marginalized form).
  std::vector<double> losses;
  /// Largest off-diagonal seen when tracked, otherwise -1.
  double max_off_diagonal = -1.0;
  LinearAE initial_model;
  LinearAE final_model;
  bool above_optimal_rate = false;
};

LinearRun run_linear_ae(const Dataset& dataset, const Spectrum& spectrum,
                        const TrainingConfig& config, const LinearRunOptions& options = {});

/// Scalar description of each listed mode (1-based) of a model. With a the
/// j-th column of W1 V and b the j-th row of V^T W2: when a and b are parallel
/// the pair is exact. Otherwise the mode is treated as balanced with
/// w1 = w2 = |a + b| / 2, the component that grows under the flow.
std::vector<ScalarMode> effective_modes(const LinearAE& model, const Spectrum& spectrum,
                                        std::span<const std::size_t> modes, double epsilon,
                                        double tau);

}  // namespace lindyn
