#include "lindyn/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include "lindyn/csv.hpp"
#include "lindyn/errors.hpp"

namespace lindyn {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw InvalidArgument(what);
}

}  // namespace

NoiseModel NoiseModel::gaussian(double variance) {
  require(variance >= 0.0 && std::isfinite(variance), "gaussian noise variance must be >= 0");
  return {Kind::gaussian, variance};
}

NoiseModel NoiseModel::laplace(double scale) {
  require(scale >= 0.0 && std::isfinite(scale), "laplace noise scale must be >= 0");
  return {Kind::laplace, scale};
}

double NoiseModel::component_variance() const noexcept {
  switch (kind) {
    case Kind::none: return 0.0;
    case Kind::gaussian: return param;
    case Kind::laplace: return 2.0 * param * param;
  }
  return 0.0;
}

double epsilon_from_noise(const NoiseModel& model, std::size_t n) {
  require(n >= 1, "sample count must be >= 1");
  require(model.param >= 0.0, "noise parameter must be >= 0");
  return static_cast<double>(n) * model.component_variance();
}

ScalarMode ScalarMode::make(double lambda, double epsilon, double tau, double w1_0, double w2_0) {
  require(lambda >= 0.0, "lambda must be >= 0");
  require(epsilon >= 0.0, "epsilon must be >= 0");
  require(tau > 0.0, "tau must be > 0");
  require(std::isfinite(w1_0) && std::isfinite(w2_0), "initial weights must be finite");
  return {lambda, epsilon, tau, w1_0, w2_0};
}

double ScalarMode::c0() const noexcept { return std::abs(w2_0 * w2_0 - w1_0 * w1_0); }

double ScalarMode::theta0() const noexcept {
  const double c = c0();
  if (c == 0.0) return w0() == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), w0());
  return std::asinh(2.0 * w0() / c);
}

std::string_view to_string(TrajectoryKind kind) noexcept {
  switch (kind) {
    case TrajectoryKind::analytic_dae: return "analytic_dae";
    case TrajectoryKind::analytic_wdae: return "analytic_wdae";
    case TrajectoryKind::simulated: return "simulated";
    case TrajectoryKind::estimated: return "estimated";
    case TrajectoryKind::norm: return "norm";
  }
  return "unknown";
}

void write_trajectories_csv(std::ostream& out, std::span<const Trajectory> trajectories) {
  csv::write_trajectory_header(out);
  for (const Trajectory& tr : trajectories)
    for (std::size_t i = 0; i < tr.times.size(); ++i)
      csv::write_trajectory_row(out, tr.times[i], tr.mode_index, to_string(tr.kind), tr.values[i]);
}

namespace {

struct Hyperbolic {
  double c0;
  double beta;
  double zeta;
  double delta;
};

Hyperbolic hyperbolic(const ScalarMode& mode) {
  if (!(mode.lambda > 0.0))
    throw UnsupportedMode(
        "closed form needs lambda > 0; integrate zero-eigenvalue modes numerically");
  const double c0 = mode.c0();
  if (!(c0 > kMinConservedQuantity))
    throw DegenerateTrajectory("|w2^2 - w1^2| = " + csv::number(c0) +
                               " is too small for the closed form; use the numeric fallback");
  const double beta = c0 * (1.0 + mode.epsilon / mode.lambda);
  return {c0, beta, std::sqrt(beta * beta + 4.0), std::tanh(0.5 * mode.theta0())};
}

// tanh(theta_t / 2). Written with q = (1 - E) / (1 + E) so nothing overflows.
double half_angle_tanh(const Hyperbolic& h, const ScalarMode& mode, double t) {
  const double q = -std::tanh(0.5 * h.zeta * mode.lambda * t / mode.tau);
  const double num = q * (4.0 - 2.0 * h.beta * h.delta) - 2.0 * h.zeta * h.delta;
  const double den = q * (2.0 * h.beta + 4.0 * h.delta) - 2.0 * h.zeta;
  return num / den;
}

}  // namespace

double dae_trajectory(const ScalarMode& mode, double t) {
  require(t >= 0.0, "time must be >= 0");
  const Hyperbolic h = hyperbolic(mode);
  if (t == 0.0) return mode.w0();
  if (h.zeta * mode.lambda * t / mode.tau > kOverflowHorizon)
    return dae_fixed_point(mode.lambda, mode.epsilon);
  const double u = half_angle_tanh(h, mode, t);
  return h.c0 * u / ((1.0 - u) * (1.0 + u));
}

std::pair<double, double> dae_weights(const ScalarMode& mode, double t) {
  require(t >= 0.0, "time must be >= 0");
  const Hyperbolic h = hyperbolic(mode);
  if (t == 0.0) return {mode.w1_0, mode.w2_0};
  const double u = h.zeta * mode.lambda * t / mode.tau > kOverflowHorizon
                       ? 0.5 * (h.zeta - h.beta)
                       : half_angle_tanh(h, mode, t);
  const double root = std::sqrt(h.c0 / ((1.0 - u) * (1.0 + u)));
  const double small = root * u;  // sqrt(c0) sinh(theta/2)
  const double large = root;      // sqrt(c0) cosh(theta/2)
  if (mode.w1_0 * mode.w1_0 < mode.w2_0 * mode.w2_0) {
    const double s = std::copysign(1.0, mode.w2_0);
    return {s * small, s * large};
  }
  const double s = std::copysign(1.0, mode.w1_0);
  return {s * large, s * small};
}

double wdae_trajectory(double lambda, double gamma_eff, double tau, double w0, double t) {
  require(lambda > 0.0, "lambda must be > 0");
  require(gamma_eff >= 0.0, "weight decay must be >= 0");
  require(tau > 0.0, "tau must be > 0");
  require(w0 > 0.0, "initial product w0 must be > 0");
  require(t >= 0.0, "time must be >= 0");
  if (t == 0.0) return w0;
  const double xi = 1.0 - gamma_eff / lambda;
  const double x = 2.0 * (lambda - gamma_eff) * t / tau;
  if (x > 0.0) {
    const double e = std::exp(-x);
    return xi / (-std::expm1(-x) + (xi / w0) * e);
  }
  if (xi == 0.0) return 1.0 / (2.0 * lambda * t / tau + 1.0 / w0);
  return std::exp(x) / (std::expm1(x) / xi + 1.0 / w0);
}

double dae_fixed_point(double lambda, double epsilon) {
  require(lambda >= 0.0 && epsilon >= 0.0, "lambda and epsilon must be >= 0");
  if (lambda + epsilon == 0.0) throw UnsupportedMode("fixed point undefined for lambda = epsilon = 0");
  return lambda / (lambda + epsilon);
}

double wdae_fixed_point(double lambda, double gamma_eff) {
  require(lambda > 0.0, "lambda must be > 0");
  require(gamma_eff >= 0.0, "weight decay must be >= 0");
  return std::max(0.0, 1.0 - gamma_eff / lambda);
}

double equivalent_decay(double lambda, double epsilon) {
  require(lambda >= 0.0 && epsilon >= 0.0, "lambda and epsilon must be >= 0");
  require(lambda + epsilon > 0.0, "lambda + epsilon must be > 0");
  return lambda * epsilon / (lambda + epsilon);
}

OptimalRates optimal_rates(double lambda, double epsilon, double gamma_eff, double tau) {
  require(lambda > 0.0, "lambda must be > 0");
  require(epsilon >= 0.0 && gamma_eff >= 0.0, "epsilon and weight decay must be >= 0");
  require(tau > 0.0, "tau must be > 0");
  const double noise_curv = 2.0 * lambda + 3.0 * epsilon;
  const double decay_curv = 2.0 * lambda + gamma_eff;
  return {tau / noise_curv, tau / decay_curv, decay_curv / noise_curv};
}

ScalarLoss scalar_loss_and_grad(double w1, double w2, double lambda, double epsilon, double tau,
                                double gamma_eff) {
  require(tau > 0.0, "tau must be > 0");
  const double w = w1 * w2;
  const double r = 1.0 - w;
  const double loss = (lambda * r * r + epsilon * w * w + gamma_eff * (w1 * w1 + w2 * w2)) /
                      (2.0 * tau);
  const double g1 = -(w2 * lambda * r - epsilon * w2 * w2 * w1 - gamma_eff * w1) / tau;
  const double g2 = -(w1 * lambda * r - epsilon * w1 * w1 * w2 - gamma_eff * w2) / tau;
  return {loss, g1, g2};
}

Trajectory sample_dae(const ScalarMode& mode, std::span<const double> times, long mode_index) {
  Trajectory tr{{times.begin(), times.end()}, {}, TrajectoryKind::analytic_dae, mode_index};
  tr.values.reserve(times.size());
  for (double t : times) tr.values.push_back(dae_trajectory(mode, t));
  return tr;
}

Trajectory sample_wdae(double lambda, double gamma_eff, double tau, double w0,
                       std::span<const double> times, long mode_index) {
  Trajectory tr{{times.begin(), times.end()}, {}, TrajectoryKind::analytic_wdae, mode_index};
  tr.values.reserve(times.size());
  for (double t : times) tr.values.push_back(wdae_trajectory(lambda, gamma_eff, tau, w0, t));
  return tr;
}

double first_crossing_time(const std::function<double(double)>& w, double target, double t_max,
                           double resolution) {
  if (w(0.0) >= target) return 0.0;
  constexpr int kScan = 4096;
  double lo = 0.0;
  double hi = -1.0;
  for (int i = 1; i <= kScan; ++i) {
    const double t = t_max * i / kScan;
    if (w(t) >= target) {
      hi = t;
      break;
    }
    lo = t;
  }
  if (hi < 0.0) return -1.0;
  while (hi - lo > resolution) {
    const double mid = 0.5 * (lo + hi);
    (w(mid) >= target ? hi : lo) = mid;
  }
  return hi;
}

}  // namespace lindyn
