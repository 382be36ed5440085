#include "lindyn/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lindyn/csv.hpp"
#include "lindyn/errors.hpp"
#include "lindyn/kernels.hpp"

namespace lindyn {

void TrainingConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw InvalidArgument("alpha must be > 0");
  if (epochs < 1) throw InvalidArgument("epochs must be >= 1");
  if (noise.param < 0.0) throw InvalidArgument("noise parameter must be >= 0");
  if (!(weight_decay >= 0.0)) throw InvalidArgument("gamma must be >= 0");
  if (hidden_dim < 1) throw InvalidArgument("hidden must be >= 1");
  if (record_every < 1) throw InvalidArgument("record-every must be >= 1");
  if (init.scale < 0.0 || (init.scheme == InitScheme::small_random && init.scale == 0.0))
    throw InvalidArgument("init-scale must be > 0");
  if (loss_mode == LossMode::sampled && noise_draws_per_step < 1)
    throw InvalidArgument("noise draws per step must be >= 1");
}

double LinearAE::squared_norm() const noexcept {
  return lindyn::squared_norm(w1) + lindyn::squared_norm(w2);
}

namespace {

bool recorded(std::size_t step, std::size_t last, std::size_t every) {
  return step % every == 0 || step == last;
}

void check_finite_scalar(double w, std::size_t step) {
  if (!std::isfinite(w) || std::abs(w) > kDivergenceThreshold)
    throw DivergenceError("scalar run diverged (|w| = " + csv::number(std::abs(w)) + ")", step);
}

}  // namespace

ScalarRun run_scalar_gd(const ScalarMode& mode, std::size_t steps, std::size_t record_every,
                        double gamma_eff) {
  if (record_every < 1) throw InvalidArgument("record-every must be >= 1");
  if (gamma_eff < 0.0) throw InvalidArgument("weight decay must be >= 0");
  const double lambda = mode.lambda, eps = mode.epsilon, inv_tau = 1.0 / mode.tau;

  ScalarRun run;
  run.w.kind = TrajectoryKind::simulated;
  run.w.mode_index = 1;
  run.above_optimal_rate = (2.0 * lambda + 3.0 * eps + gamma_eff) * inv_tau >= 1.0;

  double w1 = mode.w1_0, w2 = mode.w2_0;
  auto record = [&](std::size_t step) {
    run.w.times.push_back(static_cast<double>(step));
    run.w.values.push_back(w1 * w2);
    run.w1.push_back(w1);
    run.w2.push_back(w2);
  };
  record(0);
  for (std::size_t step = 1; step <= steps; ++step) {
    const double r = lambda * (1.0 - w1 * w2);
    const double g1 = w2 * r - eps * w2 * w2 * w1 - gamma_eff * w1;
    const double g2 = w1 * r - eps * w1 * w1 * w2 - gamma_eff * w2;
    w1 += inv_tau * g1;
    w2 += inv_tau * g2;
    check_finite_scalar(w1 * w2, step);
    if (!std::isfinite(w1) || !std::isfinite(w2))
      throw DivergenceError("scalar run produced a non-finite weight", step);
    if (recorded(step, steps, record_every)) record(step);
  }
  return run;
}

namespace {

struct Pair {
  double w1, w2;
};

Pair flow_rhs(Pair p, double lambda, double eps, double gamma, double inv_tau) {
  const double r = lambda * (1.0 - p.w1 * p.w2);
  return {inv_tau * (p.w2 * r - eps * p.w2 * p.w2 * p.w1 - gamma * p.w1),
          inv_tau * (p.w1 * r - eps * p.w1 * p.w1 * p.w2 - gamma * p.w2)};
}

Pair rk4_step(Pair p, double h, double lambda, double eps, double gamma, double inv_tau) {
  auto f = [&](Pair q) { return flow_rhs(q, lambda, eps, gamma, inv_tau); };
  const Pair k1 = f(p);
  const Pair k2 = f({p.w1 + 0.5 * h * k1.w1, p.w2 + 0.5 * h * k1.w2});
  const Pair k3 = f({p.w1 + 0.5 * h * k2.w1, p.w2 + 0.5 * h * k2.w2});
  const Pair k4 = f({p.w1 + h * k3.w1, p.w2 + h * k3.w2});
  return {p.w1 + h / 6.0 * (k1.w1 + 2.0 * k2.w1 + 2.0 * k3.w1 + k4.w1),
          p.w2 + h / 6.0 * (k1.w2 + 2.0 * k2.w2 + 2.0 * k3.w2 + k4.w2)};
}

}  // namespace

Trajectory integrate_scalar_flow(const ScalarMode& mode, std::span<const double> times,
                                 double gamma_eff, long mode_index) {
  if (gamma_eff < 0.0) throw InvalidArgument("weight decay must be >= 0");
  Trajectory tr{{}, {}, TrajectoryKind::analytic_dae, mode_index};
  const double inv_tau = 1.0 / mode.tau;
  Pair p{mode.w1_0, mode.w2_0};
  double t = 0.0;
  for (double target : times) {
    if (target < t) throw InvalidArgument("times must be non-decreasing and >= 0");
    while (t < target) {
      // Keep h times the local stiffness small; the flow is smooth so this is
      // far below the accuracy the callers need.
      const double rate =
          inv_tau * ((mode.lambda + mode.epsilon) * (p.w1 * p.w1 + p.w2 * p.w2) + mode.lambda +
                     gamma_eff);
      double h = rate > 0.0 ? 0.02 / rate : target - t;
      h = std::min(h, target - t);
      p = rk4_step(p, h, mode.lambda, mode.epsilon, gamma_eff, inv_tau);
      t = (target - t <= h) ? target : t + h;
      if (!std::isfinite(p.w1 * p.w2) || std::abs(p.w1 * p.w2) > kDivergenceThreshold)
        throw DivergenceError("scalar flow integration diverged", static_cast<std::size_t>(t));
    }
    tr.times.push_back(target);
    tr.values.push_back(p.w1 * p.w2);
  }
  return tr;
}

Trajectory predict_dae(const ScalarMode& mode, std::span<const double> times, long mode_index) {
  if (mode.lambda > 0.0 && mode.c0() > kMinConservedQuantity)
    return sample_dae(mode, times, mode_index);
  return integrate_scalar_flow(mode, times, 0.0, mode_index);
}

Matrix random_orthogonal(std::size_t h, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix q(h, h);
  for (double& v : q.values()) v = normal(rng);
  // Modified Gram-Schmidt on the rows, twice for orthogonality to roundoff.
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t i = 0; i < h; ++i) {
      auto ri = q.row(i);
      for (std::size_t k = 0; k < i; ++k) {
        auto rk = q.row(k);
        double dot = 0.0;
        for (std::size_t j = 0; j < h; ++j) dot += ri[j] * rk[j];
        for (std::size_t j = 0; j < h; ++j) ri[j] -= dot * rk[j];
      }
      double norm = 0.0;
      for (double v : ri) norm += v * v;
      norm = std::sqrt(norm);
      if (norm < 1e-12) throw Error("random orthogonal: rank-deficient draw");
      for (double& v : ri) v /= norm;
    }
  }
  return q;
}

LinearAE init_orthogonal(const Spectrum& spectrum, std::span<const double> d1,
                         std::span<const double> d2, std::uint64_t seed) {
  const std::size_t d = spectrum.dim();
  const std::size_t h = d1.size();
  if (d2.size() != h) throw InvalidArgument("d1 and d2 must have the same length");
  if (h < 1) throw InvalidArgument("hidden must be >= 1");
  if (h > d)
    throw InvalidArgument("orthogonal init needs hidden <= input dim (" + std::to_string(h) +
                          " > " + std::to_string(d) + ")");
  std::mt19937_64 rng(seed);
  const Matrix r = random_orthogonal(h, rng);
  const Matrix& v = spectrum.eigenvectors;
  LinearAE m{Matrix(h, d), Matrix(d, h)};
  // W1(i, :) = sum_k R(i,k) d1_k v_k^T, W2(:, i) = sum_k v_k d2_k R(i,k).
  for (std::size_t i = 0; i < h; ++i)
    for (std::size_t k = 0; k < h; ++k) {
      const double c1 = r(i, k) * d1[k];
      const double c2 = r(i, k) * d2[k];
      for (std::size_t x = 0; x < d; ++x) {
        m.w1(i, x) += c1 * v(x, k);
        m.w2(x, i) += c2 * v(x, k);
      }
    }
  return m;
}

LinearAE init_orthogonal(std::size_t d, std::size_t h, const Spectrum& spectrum, double scale,
                         std::uint64_t seed) {
  if (spectrum.dim() != d) throw InvalidArgument("spectrum dimension does not match d");
  if (h > d)
    throw InvalidArgument("orthogonal init needs hidden <= input dim (" + std::to_string(h) +
                          " > " + std::to_string(d) + ")");
  const std::vector<double> diag(h, scale);
  return init_orthogonal(spectrum, diag, diag, seed);
}

LinearAE init_small_random(std::size_t d, std::size_t h, double scale, std::uint64_t seed) {
  if (!(scale > 0.0)) throw InvalidArgument("init scale must be > 0");
  if (d < 1 || h < 1) throw InvalidArgument("dimensions must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  LinearAE m{Matrix(h, d), Matrix(d, h)};
  for (double& v : m.w1.values()) v = u(rng);
  for (double& v : m.w2.values()) v = u(rng);
  return m;
}

LinearAE initialize(const InitConfig& init, std::size_t d, std::size_t h, const Spectrum& spectrum) {
  if (init.scheme == InitScheme::orthogonal)
    return init_orthogonal(d, h, spectrum, init.scale, init.seed);
  return init_small_random(d, h, init.scale, init.seed);
}

namespace {

// The objective only touches the data through Sigma, so one routine serves
// both the dense covariance and the diagonal eigenbasis form.
struct CovarianceView {
  const Matrix* dense = nullptr;
  const std::vector<double>* diag = nullptr;

  std::size_t dim() const { return dense ? dense->rows() : diag->size(); }

  double trace() const {
    if (dense) return lindyn::trace(*dense);
    double t = 0.0;
    for (double v : *diag) t += v;
    return t;
  }

  // W1 Sigma
  Matrix right(const Matrix& w1) const {
    if (dense) return kernels::matmul(w1, *dense);
    Matrix p = w1;
    for (std::size_t i = 0; i < p.rows(); ++i) {
      auto r = p.row(i);
      for (std::size_t j = 0; j < r.size(); ++j) r[j] *= (*diag)[j];
    }
    return p;
  }

  // W2^T Sigma
  Matrix left_t(const Matrix& w2) const {
    if (dense) return kernels::matmul_tn(w2, *dense);
    Matrix q(w2.cols(), w2.rows());
    for (std::size_t j = 0; j < w2.rows(); ++j)
      for (std::size_t h = 0; h < w2.cols(); ++h) q(h, j) = w2(j, h) * (*diag)[j];
    return q;
  }
};

void check_model(const LinearAE& m, std::size_t d) {
  if (m.w1.cols() != d || m.w2.rows() != d || m.w1.rows() != m.w2.cols())
    throw InvalidArgument("model shapes do not match the data dimension " + std::to_string(d));
}

double dot_all(const Matrix& a, const Matrix& b) {
  double s = 0.0;
  const double* x = a.data();
  const double* y = b.data();
  for (std::size_t i = 0; i < a.size(); ++i) s += x[i] * y[i];
  return s;
}

LossAndGrads evaluate(const LinearAE& m, const CovarianceView& cov, double n, double eps,
                      double gamma) {
  const Matrix p = cov.right(m.w1);               // H x D
  const Matrix q = cov.left_t(m.w2);              // H x D
  const Matrix g = kernels::matmul_tn(m.w2, m.w2);  // H x H
  const Matrix k = kernels::matmul_nt(p, m.w1);     // W1 Sigma W1^T
  const Matrix f = kernels::matmul_nt(m.w1, m.w1);  // W1 W1^T

  const double inv_n = 1.0 / n;
  // tr(W1 Sigma W2) = sum P(h, d) W2(d, h)
  double cross = 0.0;
  for (std::size_t h = 0; h < p.rows(); ++h)
    for (std::size_t d = 0; d < p.cols(); ++d) cross += p(h, d) * m.w2(d, h);
  double loss = 0.5 * inv_n * (cov.trace() - 2.0 * cross + dot_all(k, g) + eps * dot_all(f, g));
  if (gamma > 0.0) loss += 0.5 * gamma * m.squared_norm();

  Matrix pe = p;
  pe.add_scaled(m.w1, eps);
  Matrix g1 = kernels::matmul(g, pe);
  g1 -= q;
  g1 *= inv_n;

  Matrix ke = k;
  ke.add_scaled(f, eps);
  Matrix g2 = kernels::matmul(m.w2, ke);
  const Matrix pt = p.transposed();
  g2 -= pt;
  g2 *= inv_n;

  if (gamma > 0.0) {
    g1.add_scaled(m.w1, gamma);
    g2.add_scaled(m.w2, gamma);
  }
  return {loss, std::move(g1), std::move(g2)};
}

}  // namespace

LossAndGrads marginalized_loss_and_grads(const LinearAE& model, const Matrix& covariance,
                                         std::size_t n, double epsilon_eff, double weight_decay) {
  if (covariance.rows() != covariance.cols()) throw InvalidArgument("covariance must be square");
  check_model(model, covariance.rows());
  if (n < 1) throw InvalidArgument("sample count must be >= 1");
  return evaluate(model, {&covariance, nullptr}, static_cast<double>(n), epsilon_eff,
                  weight_decay);
}

LossAndGrads marginalized_loss_and_grads(const LinearAE& model, const Dataset& dataset,
                                         double epsilon_eff, double weight_decay) {
  return marginalized_loss_and_grads(model, covariance(dataset), dataset.n(), epsilon_eff,
                                     weight_decay);
}

void add_noise(Matrix& x, const NoiseModel& noise, std::mt19937_64& rng) {
  if (noise.is_none()) return;
  if (noise.kind == NoiseModel::Kind::gaussian) {
    std::normal_distribution<double> normal(0.0, std::sqrt(noise.param));
    for (double& v : x.values()) v += normal(rng);
    return;
  }
  // Laplace by inverse CDF.
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  const double b = noise.param;
  for (double& v : x.values()) {
    const double s = u(rng);
    v -= b * std::copysign(1.0, s) * std::log1p(-2.0 * std::abs(s));
  }
}

SampledLoss sampled_loss(const LinearAE& model, const Dataset& dataset, const NoiseModel& noise,
                         std::size_t draws, std::uint64_t seed) {
  if (draws < 1) throw InvalidArgument("draws must be >= 1");
  const Matrix& x = dataset.samples();
  const std::size_t n = x.rows(), d = x.cols();
  check_model(model, d);
  const Matrix m = kernels::matmul(model.w2, model.w1);  // D x D
  Matrix clean_res = x;  // x - M x per row
  clean_res -= kernels::matmul_nt(x, m);
  const double inv_2n = 0.5 / static_cast<double>(n);

  if (noise.is_none()) {
    const double l = inv_2n * squared_norm(clean_res);
    return {l, 0.0, draws};
  }

  std::mt19937_64 rng(seed);
  Matrix z(n, d);
  std::vector<double> mz(d);
  double mean = 0.0, m2 = 0.0;
  for (std::size_t k = 0; k < draws; ++k) {
    std::fill(z.values().begin(), z.values().end(), 0.0);
    add_noise(z, noise, rng);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto zi = z.row(i);
      const auto ci = clean_res.row(i);
      for (std::size_t a = 0; a < d; ++a) {
        const auto ma = m.row(a);
        double s = 0.0;
        for (std::size_t b = 0; b < d; ++b) s += ma[b] * zi[b];
        const double r = ci[a] - s;
        total += r * r;
      }
    }
    const double l = inv_2n * total;
    // Welford
    const double delta = l - mean;
    mean += delta / static_cast<double>(k + 1);
    m2 += delta * (l - mean);
  }
  const double se =
      draws > 1 ? std::sqrt(m2 / static_cast<double>(draws - 1) / static_cast<double>(draws)) : 0.0;
  return {mean, se, draws};
}

std::vector<ScalarMode> effective_modes(const LinearAE& model, const Spectrum& spectrum,
                                        std::span<const std::size_t> modes, double epsilon,
                                        double tau) {
  check_model(model, spectrum.dim());
  const auto [a, b] = rotate_weights(model.w1, model.w2, spectrum);
  std::vector<ScalarMode> out;
  out.reserve(modes.size());
  for (std::size_t j1 : modes) {
    if (j1 < 1 || j1 > spectrum.dim()) throw InvalidArgument("mode index out of range");
    const std::size_t j = j1 - 1;
    double aa = 0.0, bb = 0.0, ab = 0.0, sum2 = 0.0;
    for (std::size_t h = 0; h < a.rows(); ++h) {
      const double x = a(h, j), y = b(j, h);
      aa += x * x;
      bb += y * y;
      ab += x * y;
      sum2 += (x + y) * (x + y);
    }
    const double lambda = spectrum.eigenvalues[j];
    const bool parallel = aa > 0.0 && bb > 0.0 && ab * ab >= (1.0 - 1e-12) * aa * bb;
    if (parallel) {
      const double w1 = std::sqrt(aa);
      out.push_back(ScalarMode::make(lambda, epsilon, tau, w1, ab / w1));
    } else {
      const double w = 0.5 * std::sqrt(sum2);
      out.push_back(ScalarMode::make(lambda, epsilon, tau, w, w));
    }
  }
  return out;
}

namespace {

std::vector<std::size_t> resolve_modes(const std::vector<std::size_t>& requested, std::size_t d) {
  std::vector<std::size_t> modes = requested;
  if (modes.empty())
    for (std::size_t j = 1; j <= d; ++j) modes.push_back(j);
  for (std::size_t j : modes)
    if (j < 1 || j > d)
      throw InvalidArgument("mode " + std::to_string(j) + " outside 1.." + std::to_string(d));
  return modes;
}

void check_weights_finite(const LinearAE& m, std::size_t epoch) {
  for (const Matrix* w : {&m.w1, &m.w2})
    for (double v : w->values())
      if (!std::isfinite(v) || std::abs(v) > kDivergenceThreshold)
        throw DivergenceError("linear autoencoder diverged", epoch);
}

}  // namespace

LinearRun run_linear_ae(const Dataset& dataset, const Spectrum& spectrum,
                        const TrainingConfig& config, const LinearRunOptions& options) {
  config.validate();
  const std::size_t d = dataset.d();
  const std::size_t n = dataset.n();
  if (spectrum.dim() != d) throw InvalidArgument("spectrum dimension does not match dataset");
  const std::vector<std::size_t> modes = resolve_modes(options.modes, d);

  LinearAE model = options.initial ? *options.initial
                                   : initialize(config.init, d, config.hidden_dim, spectrum);
  check_model(model, d);

  const bool sampled = config.loss_mode == LossMode::sampled && !config.noise.is_none();
  LinearEngine engine = options.engine;
  if (engine == LinearEngine::automatic)
    engine = (!sampled && d > 64) ? LinearEngine::eigenbasis : LinearEngine::data_space;
  if (sampled && engine == LinearEngine::eigenbasis)
    throw InvalidArgument("sampled-noise training runs in data space only");

  const double eps = epsilon_from_noise(config.noise, n);
  const double gamma = config.weight_decay;
  const double alpha = config.learning_rate;

  LinearRun run;
  run.initial_model = model;
  run.above_optimal_rate =
      alpha * (2.0 * spectrum.eigenvalues.front() + 3.0 * eps + gamma * static_cast<double>(n)) /
          static_cast<double>(n) >= 1.0;

  const bool in_eigenbasis = engine == LinearEngine::eigenbasis;
  Matrix cov;
  if (!in_eigenbasis) cov = covariance(dataset);
  const CovarianceView view =
      in_eigenbasis ? CovarianceView{nullptr, &spectrum.eigenvalues} : CovarianceView{&cov, nullptr};

  LinearAE state = model;
  if (in_eigenbasis) {
    auto [a, b] = rotate_weights(model.w1, model.w2, spectrum);
    state = {std::move(a), std::move(b)};
  }

  run.modes.reserve(modes.size());
  for (std::size_t j : modes)
    run.modes.push_back({{}, {}, TrajectoryKind::simulated, static_cast<long>(j)});
  run.norms = {{}, {}, TrajectoryKind::norm, -1};

  auto record = [&](std::size_t epoch, double loss) {
    Matrix a, b;
    const Matrix* pa = &state.w1;
    const Matrix* pb = &state.w2;
    if (!in_eigenbasis) {
      auto rotated = rotate_weights(state.w1, state.w2, spectrum);
      a = std::move(rotated.first);
      b = std::move(rotated.second);
      pa = &a;
      pb = &b;
    }
    const double t = static_cast<double>(epoch);
    for (std::size_t k = 0; k < modes.size(); ++k) {
      const std::size_t j = modes[k] - 1;
      double w = 0.0;
      for (std::size_t h = 0; h < pa->rows(); ++h) w += (*pb)(j, h) * (*pa)(h, j);
      run.modes[k].times.push_back(t);
      run.modes[k].values.push_back(w);
    }
    if (options.track_off_diagonal)
      run.max_off_diagonal =
          std::max(run.max_off_diagonal, rotated_diagonal(*pa, *pb, true).max_off_diagonal);
    run.norms.times.push_back(t);
    run.norms.values.push_back(state.squared_norm());
    run.losses.push_back(loss);
  };

  std::mt19937_64 noise_rng(config.noise_seed);
  const std::size_t last = config.epochs;
  for (std::size_t epoch = 0;; ++epoch) {
    LossAndGrads lg = evaluate(state, view, static_cast<double>(n), eps, gamma);
    if (epoch % config.record_every == 0 || epoch == last) record(epoch, lg.loss);
    if (epoch == last) break;

    if (sampled) {
      // Replace the marginalized gradient with the average over corrupted copies.
      const Matrix& x = dataset.samples();
      Matrix g1(state.w1.rows(), d), g2(d, state.w1.rows());
      for (std::size_t k = 0; k < config.noise_draws_per_step; ++k) {
        Matrix xt = x;
        add_noise(xt, config.noise, noise_rng);
        const Matrix z = kernels::matmul_nt(xt, state.w1);  // N x H
        Matrix r = kernels::matmul_nt(z, state.w2);         // N x D
        r -= x;
        g2 += kernels::matmul_tn(r, z);
        g1 += kernels::matmul_tn(kernels::matmul(r, state.w2), xt);
      }
      const double scale = 1.0 / (static_cast<double>(n) * config.noise_draws_per_step);
      g1 *= scale;
      g2 *= scale;
      if (gamma > 0.0) {
        g1.add_scaled(state.w1, gamma);
        g2.add_scaled(state.w2, gamma);
      }
      lg.grad_w1 = std::move(g1);
      lg.grad_w2 = std::move(g2);
    }

    state.w1.add_scaled(lg.grad_w1, -alpha);
    state.w2.add_scaled(lg.grad_w2, -alpha);
    check_weights_finite(state, epoch + 1);
  }

  if (in_eigenbasis) {
    // Back to data space: W1 = A V^T, W2 = V B.
    run.final_model = {kernels::matmul_nt(state.w1, spectrum.eigenvectors),
                       kernels::matmul(spectrum.eigenvectors, state.w2)};
  } else {
    run.final_model = std::move(state);
  }
  return run;
}

}  // namespace lindyn
