#pragma once

// Closed-form learning dynamics for one eigen-direction of a linear
// autoencoder. Time t is measured in epochs and tau = N / alpha. Weight decay
// is expressed in effective units gamma_eff = N * gamma throughout.

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace lindyn {

/// Below this |w2^2 - w1^2| the hyperbolic parametrization is unusable.
inline constexpr double kMinConservedQuantity = 1e-9;
/// Beyond zeta * lambda * t / tau = 700 the closed form returns its fixed point.
inline constexpr double kOverflowHorizon = 700.0;

struct NoiseModel {
  enum class Kind { none, gaussian, laplace };

  Kind kind = Kind::none;
  /// Variance for gaussian, scale b for laplace, unused for none.
  double param = 0.0;

  static NoiseModel none() { return {}; }
  static NoiseModel gaussian(double variance);
  static NoiseModel laplace(double scale);

  /// Per-component variance s^2 of the corruption.
  double component_variance() const noexcept;
  bool is_none() const noexcept { return kind == Kind::none || param == 0.0; }
};

/// Effective noise strength: 0, N sigma^2, or 2 N b^2.
double epsilon_from_noise(const NoiseModel& model, std::size_t n);

/// One decoupled eigen-direction.
struct ScalarMode {
  double lambda = 0.0;
  double epsilon = 0.0;
  double tau = 1.0;
  double w1_0 = 0.0;
  double w2_0 = 0.0;

  /// Validates lambda >= 0, epsilon >= 0, tau > 0, finite weights.
  static ScalarMode make(double lambda, double epsilon, double tau, double w1_0, double w2_0);

  /// |w2^2 - w1^2|, conserved along the exact flow.
  double c0() const noexcept;
  /// asinh(2 w0 / c0); infinite when c0 == 0.
  double theta0() const noexcept;
  double w0() const noexcept { return w1_0 * w2_0; }
};

enum class TrajectoryKind { analytic_dae, analytic_wdae, simulated, estimated, norm };

std::string_view to_string(TrajectoryKind kind) noexcept;

struct Trajectory {
  std::vector<double> times;
  std::vector<double> values;
  TrajectoryKind kind = TrajectoryKind::simulated;
  /// 1-based eigen-direction, or -1 for the weight-norm series.
  long mode_index = 0;
};

/// Rows of `epoch,mode,kind,value`, trajectories in order.
void write_trajectories_csv(std::ostream& out, std::span<const Trajectory> trajectories);

/// w(t) = (c0/2) sinh(theta_t) for the noise-regularized flow.
/// Throws UnsupportedMode for lambda <= 0, DegenerateTrajectory for
/// c0 <= kMinConservedQuantity.
double dae_trajectory(const ScalarMode& mode, double t);

/// (w1(t), w2(t)) along the same trajectory, using the coordinate branch that
/// matches the initial condition (|w1| < |w2| or |w1| > |w2|).
std::pair<double, double> dae_weights(const ScalarMode& mode, double t);

/// Closed-form weight-decay dynamics from equal initial weights with product w0:
/// w(t) = xi E / (E - 1 + xi / w0), xi = 1 - gamma_eff / lambda,
/// E = exp(2 (lambda - gamma_eff) t / tau).
double wdae_trajectory(double lambda, double gamma_eff, double tau, double w0, double t);

double dae_fixed_point(double lambda, double epsilon);
/// max(0, 1 - gamma_eff / lambda).
double wdae_fixed_point(double lambda, double gamma_eff);
/// Decay giving the same fixed point as noise epsilon: lambda eps / (lambda + eps).
double equivalent_decay(double lambda, double epsilon);

struct OptimalRates {
  double noise;  ///< tau / (2 lambda + 3 eps)
  double decay;  ///< tau / (2 lambda + gamma_eff)
  double ratio;  ///< noise / decay
};

OptimalRates optimal_rates(double lambda, double epsilon, double gamma_eff, double tau);

struct ScalarLoss {
  double loss;
  double grad_w1;
  double grad_w2;
};

/// l = lambda/(2 tau) (1 - w2 w1)^2 + eps/(2 tau) (w2 w1)^2 + gamma_eff/(2 tau) (w1^2 + w2^2)
ScalarLoss scalar_loss_and_grad(double w1, double w2, double lambda, double epsilon, double tau,
                                double gamma_eff = 0.0);

Trajectory sample_dae(const ScalarMode& mode, std::span<const double> times, long mode_index);
Trajectory sample_wdae(double lambda, double gamma_eff, double tau, double w0,
                       std::span<const double> times, long mode_index);

/// Earliest t in [0, t_max] with w(t) >= target for a trajectory that crosses
/// once; bisection to `resolution`. Returns a negative value if never reached.
double first_crossing_time(const std::function<double(double)>& w, double target, double t_max,
                           double resolution = 1e-6);

}  // namespace lindyn
