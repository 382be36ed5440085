#include "lindyn/nonlinear.hpp"

#include <cmath>
#include <random>
#include <string>

#include "lindyn/errors.hpp"
#include "lindyn/kernels.hpp"

namespace lindyn {

std::string_view to_string(Activation a) noexcept {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
  }
  return "unknown";
}

Activation parse_activation(std::string_view name) {
  if (name == "identity" || name == "linear") return Activation::identity;
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  throw InvalidArgument("unknown activation '" + std::string(name) + "'");
}

namespace {

void apply(Activation a, Matrix& u) {
  switch (a) {
    case Activation::identity: return;
    case Activation::relu:
      for (double& v : u.values()) v = v > 0.0 ? v : 0.0;
      return;
    case Activation::tanh:
      for (double& v : u.values()) v = std::tanh(v);
      return;
  }
}

// delta *= phi'(u), with z = phi(u) already known.
void scale_by_derivative(Activation a, const Matrix& u, const Matrix& z, Matrix& delta) {
  double* g = delta.data();
  const double* pu = u.data();
  const double* pz = z.data();
  switch (a) {
    case Activation::identity: return;
    case Activation::relu:
      for (std::size_t i = 0; i < delta.size(); ++i)
        if (!(pu[i] > 0.0)) g[i] = 0.0;
      return;
    case Activation::tanh:
      for (std::size_t i = 0; i < delta.size(); ++i) g[i] *= 1.0 - pz[i] * pz[i];
      return;
  }
}

void check_shapes(const NonlinearAE& m, std::size_t d) {
  if (m.w1.cols() != d || m.w2.rows() != d || m.w1.rows() != m.w2.cols())
    throw InvalidArgument("model shapes do not match the data dimension " + std::to_string(d));
}

Matrix reconstruct(const NonlinearAE& m, const Matrix& x) {
  Matrix z = kernels::matmul_nt(x, m.w1);  // N x H
  apply(m.activation, z);
  return kernels::matmul_nt(z, m.w2);  // N x D
}

std::vector<std::size_t> all_modes(std::span<const std::size_t> modes, std::size_t d) {
  std::vector<std::size_t> out(modes.begin(), modes.end());
  if (out.empty())
    for (std::size_t j = 1; j <= d; ++j) out.push_back(j);
  for (std::size_t j : out)
    if (j < 1 || j > d)
      throw InvalidArgument("mode " + std::to_string(j) + " outside 1.." + std::to_string(d));
  return out;
}

// Clean inputs projected on the selected eigenvectors, N x K.
Matrix project(const Matrix& x, const Spectrum& spectrum, const std::vector<std::size_t>& modes) {
  Matrix vk(x.cols(), modes.size());
  for (std::size_t r = 0; r < x.cols(); ++r)
    for (std::size_t k = 0; k < modes.size(); ++k)
      vk(r, k) = spectrum.eigenvectors(r, modes[k] - 1);
  return kernels::matmul(x, vk);
}

ModeEstimate estimate_with(const Matrix& xv, const Matrix& x, const NonlinearAE& model,
                           const Spectrum& spectrum, const std::vector<std::size_t>& modes,
                           std::size_t epoch) {
  const Matrix xhat_v = project(reconstruct(model, x), spectrum, modes);
  const double floor = kLambdaFloorFraction * spectrum.eigenvalues.front();
  ModeEstimate est{epoch, modes, {}};
  est.ratios.reserve(modes.size());
  for (std::size_t k = 0; k < modes.size(); ++k) {
    const double lambda = spectrum.eigenvalues[modes[k] - 1];
    if (!(lambda > floor)) {
      est.ratios.push_back(std::nullopt);
      continue;
    }
    double s = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) s += xv(i, k) * xhat_v(i, k);
    est.ratios.push_back(s / lambda);
  }
  return est;
}

}  // namespace

ModeEstimate estimate_identity_map(const Dataset& dataset, const NonlinearAE& model,
                                   const Spectrum& spectrum, std::span<const std::size_t> modes) {
  check_shapes(model, dataset.d());
  if (spectrum.dim() != dataset.d()) throw InvalidArgument("spectrum dimension mismatch");
  const std::vector<std::size_t> sel = all_modes(modes, dataset.d());
  const Matrix xv = project(dataset.samples(), spectrum, sel);
  return estimate_with(xv, dataset.samples(), model, spectrum, sel, 0);
}

BackpropResult backprop_grads(const NonlinearAE& model, const Matrix& batch,
                              const Matrix& corrupted) {
  check_shapes(model, batch.cols());
  if (!same_shape(batch, corrupted)) throw InvalidArgument("batch and corrupted batch differ in shape");
  const double inv_n = 1.0 / static_cast<double>(batch.rows());
  const Matrix u = kernels::matmul_nt(corrupted, model.w1);  // N x H
  Matrix z = u;
  apply(model.activation, z);
  Matrix r = kernels::matmul_nt(z, model.w2);  // N x D
  r -= batch;
  const double loss = 0.5 * inv_n * squared_norm(r);
  Matrix g2 = kernels::matmul_tn(r, z);  // D x H
  g2 *= inv_n;
  Matrix delta = kernels::matmul(r, model.w2);  // N x H
  scale_by_derivative(model.activation, u, z, delta);
  Matrix g1 = kernels::matmul_tn(delta, corrupted);  // H x D
  g1 *= inv_n;
  return {loss, std::move(g1), std::move(g2)};
}

std::vector<ModeEstimate> train_nonlinear(const Dataset& dataset, const Spectrum& spectrum,
                                          const TrainingConfig& config, Activation activation,
                                          const NonlinearRunOptions& options) {
  TrainingConfig checked = config;
  if (checked.epochs == 0) checked.epochs = 1;  // zero epochs is allowed here
  checked.validate();
  const std::size_t d = dataset.d();
  if (spectrum.dim() != d) throw InvalidArgument("spectrum dimension mismatch");
  const std::vector<std::size_t> modes = all_modes(options.modes, d);

  NonlinearAE model;
  if (options.initial) {
    model = *options.initial;
  } else {
    LinearAE init = initialize(config.init, d, config.hidden_dim, spectrum);
    model = {std::move(init.w1), std::move(init.w2), activation};
  }
  model.activation = activation;
  check_shapes(model, d);

  const Matrix& x = dataset.samples();
  const Matrix xv = project(x, spectrum, modes);
  std::mt19937_64 rng(config.noise_seed);
  const double alpha = config.learning_rate;
  const double gamma = config.weight_decay;

  std::vector<ModeEstimate> out;
  for (std::size_t epoch = 0;; ++epoch) {
    if (epoch % config.record_every == 0 || epoch == config.epochs)
      out.push_back(estimate_with(xv, x, model, spectrum, modes, epoch));
    if (epoch == config.epochs) break;
    Matrix xt = x;
    add_noise(xt, config.noise, rng);
    BackpropResult g = backprop_grads(model, x, xt);
    if (gamma > 0.0) {
      g.grad_w1.add_scaled(model.w1, gamma);
      g.grad_w2.add_scaled(model.w2, gamma);
    }
    model.w1.add_scaled(g.grad_w1, -alpha);
    model.w2.add_scaled(g.grad_w2, -alpha);
    if (!std::isfinite(g.loss) || !all_finite(model.w1) || !all_finite(model.w2) ||
        max_abs(model.w1) > kDivergenceThreshold || max_abs(model.w2) > kDivergenceThreshold)
      throw DivergenceError("nonlinear autoencoder diverged", epoch + 1);
  }
  return out;
}

std::vector<Trajectory> estimates_to_trajectories(std::span<const ModeEstimate> estimates) {
  std::vector<Trajectory> out;
  if (estimates.empty()) return out;
  for (std::size_t j : estimates.front().modes)
    out.push_back({{}, {}, TrajectoryKind::estimated, static_cast<long>(j)});
  for (const ModeEstimate& e : estimates)
    for (std::size_t k = 0; k < e.ratios.size() && k < out.size(); ++k)
      if (e.ratios[k]) {
        out[k].times.push_back(static_cast<double>(e.epoch));
        out[k].values.push_back(*e.ratios[k]);
      }
  return out;
}

}  // namespace lindyn
