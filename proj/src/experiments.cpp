#include "lindyn/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <random>
#include <sstream>

#include "lindyn/csv.hpp"
#include "lindyn/data.hpp"
#include "lindyn/errors.hpp"
#include "lindyn/kernels.hpp"

namespace lindyn {

namespace {

using csv::number;

/// Collects file contents so nothing touches disk until every run succeeded.
class PendingFiles {
 public:
  explicit PendingFiles(std::filesystem::path dir) : dir_(std::move(dir)) {}

  std::ostringstream& open(const std::string& name) {
    entries_.push_back({name, std::make_unique<std::ostringstream>()});
    return *entries_.back().second;
  }

  void commit(CommandOutput& out) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create output directory " + dir_.string() + ": " + ec.message());
    for (auto& [name, text] : entries_) {
      const auto path = dir_ / name;
      std::ofstream f(path, std::ios::trunc | std::ios::binary);
      if (!f) throw IoError("cannot write " + path.string());
      f << text->str();
      if (!f) throw IoError("error writing " + path.string());
      out.files.push_back(path);
    }
  }

 private:
  std::filesystem::path dir_;
  std::vector<std::pair<std::string, std::unique_ptr<std::ostringstream>>> entries_;
};

std::vector<double> record_times(std::size_t epochs, std::size_t every) {
  std::vector<double> t;
  for (std::size_t e = 0; e <= epochs; e += every) t.push_back(static_cast<double>(e));
  if (epochs % every != 0) t.push_back(static_cast<double>(epochs));
  return t;
}

double decay_eff(const ExperimentConfig& c, double lambda, double epsilon, double n) {
  switch (c.decay) {
    case DecayChoice::none: return 0.0;
    case DecayChoice::value: return c.gamma * n;
    case DecayChoice::matched: return lambda + epsilon > 0.0 ? equivalent_decay(lambda, epsilon) : 0.0;
  }
  return 0.0;
}

void apply_threads(const ExperimentConfig& c) {
  if (c.threads > 0) kernels::set_thread_count(c.threads);
}

std::pair<double, double> scalar_start(const ExperimentConfig& c, std::mt19937_64& rng) {
  if (c.w1) return {*c.w1, *c.w2};
  std::uniform_real_distribution<double> u(-c.init_scale, c.init_scale);
  const double a = u(rng);
  const double b = u(rng);
  return {a, b};
}

Dataset load_configured(const ExperimentConfig& c) {
  return load_dataset(c.dataset, c.n, {c.center, c.scale});
}

void check_modes(std::span<const std::size_t> modes, std::size_t d) {
  for (std::size_t m : modes)
    if (m > d)
      throw InvalidArgument("config field 'modes': mode " + std::to_string(m) +
                            " exceeds the input dimension " + std::to_string(d));
}

}  // namespace

TrainingConfig training_config(const ExperimentConfig& c) {
  TrainingConfig t;
  t.learning_rate = c.alpha;
  t.epochs = c.epochs;
  t.noise = c.noise();
  t.hidden_dim = c.hidden;
  t.init = {c.init, c.init_scale, c.seed};
  t.record_every = c.record_every;
  t.noise_seed = c.seed + 1;
  return t;
}

double rms_gap(const Trajectory& a, const Trajectory& b) {
  std::map<double, double> at;
  for (std::size_t i = 0; i < a.times.size(); ++i) at[a.times[i]] = a.values[i];
  double s = 0.0;
  std::size_t k = 0;
  for (std::size_t i = 0; i < b.times.size(); ++i) {
    const auto it = at.find(b.times[i]);
    if (it == at.end()) continue;
    const double d = it->second - b.values[i];
    s += d * d;
    ++k;
  }
  if (k == 0) throw InvalidArgument("trajectories share no time points");
  return std::sqrt(s / static_cast<double>(k));
}

Replication replicate_linear(const Dataset& dataset, const Spectrum& spectrum,
                             const TrainingConfig& config, std::span<const std::size_t> modes,
                             LinearEngine engine) {
  Replication r;
  const std::size_t n = dataset.n();
  r.epsilon = epsilon_from_noise(config.noise, n);
  r.gamma_eff = config.weight_decay * static_cast<double>(n);
  r.tau = config.tau(n);
  const bool wdae = r.gamma_eff > 0.0 && r.epsilon == 0.0;

  LinearRunOptions opts;
  opts.modes.assign(modes.begin(), modes.end());
  opts.engine = engine;
  r.run = run_linear_ae(dataset, spectrum, config, opts);

  const std::vector<ScalarMode> scalars =
      effective_modes(r.run.initial_model, spectrum, opts.modes, r.epsilon, r.tau);
  for (std::size_t k = 0; k < opts.modes.size(); ++k) {
    ModeComparison m;
    m.mode = opts.modes[k];
    m.lambda = spectrum.eigenvalues[m.mode - 1];
    m.simulated = r.run.modes[k];
    const std::span<const double> times = m.simulated.times;
    if (wdae) {
      m.fixed_point = m.lambda > 0.0 ? wdae_fixed_point(m.lambda, r.gamma_eff) : 0.0;
      const double w0 = scalars[k].w0();
      if (m.lambda > 0.0 && w0 > 0.0) {
        m.predicted = sample_wdae(m.lambda, r.gamma_eff, r.tau, w0, times, static_cast<long>(m.mode));
      } else {
        m.predicted = integrate_scalar_flow(scalars[k], times, r.gamma_eff, static_cast<long>(m.mode));
        m.predicted.kind = TrajectoryKind::analytic_wdae;
      }
    } else {
      m.fixed_point = m.lambda + r.epsilon > 0.0 ? dae_fixed_point(m.lambda, r.epsilon) : 0.0;
      if (r.gamma_eff > 0.0) {
        m.predicted = integrate_scalar_flow(scalars[k], times, r.gamma_eff, static_cast<long>(m.mode));
      } else {
        m.predicted = predict_dae(scalars[k], times, static_cast<long>(m.mode));
      }
    }
    m.rms_gap = rms_gap(m.predicted, m.simulated);
    m.relative_gap = m.fixed_point > 0.0 ? m.rms_gap / m.fixed_point : m.rms_gap;
    r.modes.push_back(std::move(m));
  }
  return r;
}

NormPhase analyze_norm_phase(const Trajectory& mode, const Trajectory& norms, double fixed_point,
                             double tolerance) {
  NormPhase p;
  const std::size_t len = std::min(mode.values.size(), norms.values.size());
  if (len == 0) return p;
  std::size_t first = len;
  for (std::size_t i = len; i-- > 0;) {
    if (std::abs(mode.values[i] - fixed_point) > tolerance) break;
    first = i;
  }
  p.final_norm = norms.values[len - 1];
  if (first == len) return p;
  p.converged_epoch = mode.times[first];
  p.norm_at_convergence = norms.values[first];
  p.shrinkage = p.norm_at_convergence > 0.0 ? 1.0 - p.final_norm / p.norm_at_convergence : 0.0;
  for (std::size_t i = first; i < len; ++i) {
    p.mode_move = std::max(p.mode_move, std::abs(mode.values[i] - mode.values[first]));
    if (i > first && norms.values[i] > norms.values[i - 1] * (1.0 + 1e-12))
      p.norm_non_increasing = false;
  }
  return p;
}

NonlinearTriple run_nonlinear_triple(const Dataset& dataset, const Spectrum& spectrum,
                                     const TrainingConfig& config, Activation activation,
                                     std::span<const std::size_t> modes) {
  NonlinearRunOptions opts;
  opts.modes.assign(modes.begin(), modes.end());
  NonlinearTriple t;
  TrainingConfig ae = config;
  ae.noise = NoiseModel::none();
  ae.weight_decay = 0.0;
  TrainingConfig wdae = ae;
  wdae.weight_decay = config.weight_decay;
  TrainingConfig dae = config;
  dae.weight_decay = 0.0;
  t.ae = train_nonlinear(dataset, spectrum, ae, activation, opts);
  t.wdae = train_nonlinear(dataset, spectrum, wdae, activation, opts);
  t.dae = train_nonlinear(dataset, spectrum, dae, activation, opts);
  return t;
}

double plateau_value(std::span<const ModeEstimate> series, std::size_t k, double tail_fraction) {
  if (series.empty()) throw InvalidArgument("empty estimate series");
  const std::size_t tail =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(tail_fraction * series.size())));
  double s = 0.0;
  std::size_t used = 0;
  for (std::size_t i = series.size() - tail; i < series.size(); ++i)
    if (series[i].ratios.at(k)) {
      s += *series[i].ratios[k];
      ++used;
    }
  if (used == 0) throw InvalidArgument("mode has no estimates (eigenvalue below the floor)");
  return s / static_cast<double>(used);
}

std::optional<std::size_t> half_rise_epoch(std::span<const ModeEstimate> series, std::size_t k,
                                           double plateau) {
  for (const ModeEstimate& e : series)
    if (e.ratios.at(k) && *e.ratios[k] >= 0.5 * plateau) return e.epoch;
  return std::nullopt;
}

CommandOutput cmd_predict(const ExperimentConfig& c) {
  apply_threads(c);
  const double n = static_cast<double>(c.n);
  const double tau = n / c.alpha;
  const std::vector<double> eps_grid = c.epsilon_grid(c.n);
  const std::vector<double> times = record_times(c.epochs, c.record_every);
  const double w1 = c.w1 ? *c.w1 : std::sqrt(1e-3);
  const double w2 = c.w2 ? *c.w2 : std::sqrt(1e-3);

  std::vector<Trajectory> curves;
  std::ostringstream table;
  table << "curve,lambda,epsilon,gamma_eff,dae_fixed_point,wdae_fixed_point,dae_half_rise,"
           "wdae_half_rise\n";
  CommandOutput out;
  long id = 0;
  for (double lambda : c.lambdas)
    for (double eps : eps_grid) {
      ++id;
      const ScalarMode mode = ScalarMode::make(lambda, eps, tau, w1, w2);
      curves.push_back(predict_dae(mode, times, id));
      const double wstar = dae_fixed_point(lambda, eps);
      const double t_max = static_cast<double>(c.epochs);
      auto dae_at = [&](double t) {
        return predict_dae(mode, std::vector<double>{t}, id).values.front();
      };
      const double dae_half = first_crossing_time(dae_at, 0.5 * wstar, t_max, 1e-3);
      table << id << ',' << number(lambda) << ',' << number(eps);
      if (c.decay != DecayChoice::none && mode.w0() > 0.0) {
        const double g = decay_eff(c, lambda, eps, n);
        curves.push_back(sample_wdae(lambda, g, tau, mode.w0(), times, id));
        const double wg = wdae_fixed_point(lambda, g);
        const double wdae_half = first_crossing_time(
            [&](double t) { return wdae_trajectory(lambda, g, tau, mode.w0(), t); }, 0.5 * wg,
            t_max, 1e-3);
        table << ',' << number(g) << ',' << number(wstar) << ',' << number(wg) << ','
              << number(dae_half) << ',' << number(wdae_half) << '\n';
        out.summary.push_back("curve " + std::to_string(id) + ": lambda=" + number(lambda) +
                              " eps=" + number(eps) + " w*=" + number(wstar) +
                              " gamma_eff=" + number(g) + " w*_gamma=" + number(wg));
      } else {
        table << ",0," << number(wstar) << ",," << number(dae_half) << ",\n";
        out.summary.push_back("curve " + std::to_string(id) + ": lambda=" + number(lambda) +
                              " eps=" + number(eps) + " w*=" + number(wstar));
      }
    }

  PendingFiles files(c.out);
  write_trajectories_csv(files.open("predict.csv"), curves);
  files.open("predict_curves.csv") << table.str();
  files.commit(out);
  return out;
}

CommandOutput cmd_surface(const ExperimentConfig& c) {
  apply_threads(c);
  const double n = static_cast<double>(c.n);
  const double tau = n / c.alpha;
  const double lambda = c.lambdas.front();
  const double eps = c.epsilon_grid(c.n).front();
  const double g = decay_eff(c, lambda, eps, n);

  std::ostringstream grid;
  grid << "w1,w2,loss\n";
  const std::size_t k = c.grid_points;
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      const double a = c.grid_min + (c.grid_max - c.grid_min) * static_cast<double>(i) / (k - 1);
      const double b = c.grid_min + (c.grid_max - c.grid_min) * static_cast<double>(j) / (k - 1);
      grid << number(a) << ',' << number(b) << ','
           << number(scalar_loss_and_grad(a, b, lambda, eps, tau, g).loss) << '\n';
    }

  CommandOutput out;
  std::ostringstream paths;
  paths << "path,step,w1,w2,w\n";
  std::mt19937_64 rng(c.seed);
  for (std::size_t p = 0; p < c.paths; ++p) {
    const auto [a, b] = scalar_start(c, rng);
    const ScalarRun run =
        run_scalar_gd(ScalarMode::make(lambda, eps, tau, a, b), c.epochs, c.record_every, g);
    for (std::size_t i = 0; i < run.w.times.size(); ++i)
      paths << p + 1 << ',' << number(run.w.times[i]) << ',' << number(run.w1[i]) << ','
            << number(run.w2[i]) << ',' << number(run.w.values[i]) << '\n';
    out.summary.push_back("path " + std::to_string(p + 1) + ": start (" + number(a) + ", " +
                          number(b) + ") end w=" + number(run.w.values.back()));
  }

  PendingFiles files(c.out);
  files.open("surface.csv") << grid.str();
  files.open("paths.csv") << paths.str();
  files.commit(out);
  return out;
}

CommandOutput cmd_simulate(const ExperimentConfig& c) {
  apply_threads(c);
  const double n = static_cast<double>(c.n);
  const double tau = n / c.alpha;
  std::mt19937_64 rng(c.seed);
  std::vector<Trajectory> curves;
  std::ostringstream table;
  table << "curve,lambda,epsilon,gamma_eff,w1_0,w2_0,final_w,fixed_point,max_abs_deviation,"
           "above_optimal_rate\n";
  CommandOutput out;
  long id = 0;
  for (double lambda : c.lambdas)
    for (double eps : c.epsilon_grid(c.n)) {
      ++id;
      const auto [a, b] = scalar_start(c, rng);
      const double g = c.decay == DecayChoice::value ? c.gamma * n : 0.0;
      const ScalarMode mode = ScalarMode::make(lambda, eps, tau, a, b);
      ScalarRun run = run_scalar_gd(mode, c.epochs, c.record_every, g);
      run.w.mode_index = id;
      Trajectory pred = g > 0.0 ? integrate_scalar_flow(mode, run.w.times, g, id)
                                : predict_dae(mode, run.w.times, id);
      if (g > 0.0) pred.kind = TrajectoryKind::analytic_wdae;
      double dev = 0.0;
      for (std::size_t i = 0; i < pred.values.size(); ++i)
        dev = std::max(dev, std::abs(pred.values[i] - run.w.values[i]));
      const double wstar = g == 0.0   ? dae_fixed_point(lambda, eps)
                           : eps == 0.0 ? wdae_fixed_point(lambda, g)
                                        : std::nan("");
      table << id << ',' << number(lambda) << ',' << number(eps) << ',' << number(g) << ','
            << number(a) << ',' << number(b) << ',' << number(run.w.values.back()) << ','
            << number(wstar) << ',' << number(dev) << ','
            << (run.above_optimal_rate ? 1 : 0) << '\n';
      out.summary.push_back("curve " + std::to_string(id) + ": lambda=" + number(lambda) +
                            " eps=" + number(eps) + " final w=" + number(run.w.values.back()) +
                            " max |analytic - simulated|=" + number(dev) +
                            (run.above_optimal_rate ? " (alpha above the optimal rate)" : ""));
      curves.push_back(std::move(run.w));
      curves.push_back(std::move(pred));
    }
  PendingFiles files(c.out);
  write_trajectories_csv(files.open("simulate.csv"), curves);
  files.open("simulate_summary.csv") << table.str();
  files.commit(out);
  return out;
}

CommandOutput cmd_compare(const ExperimentConfig& c) {
  apply_threads(c);
  const Dataset data = c.dataset.empty()
                           ? exact_spectrum_dataset(c.lambdas, c.seed + 1)
                           : load_dataset(c.dataset, c.n, {c.center, c.scale});
  const Spectrum spectrum = spectrum_of(data);
  const std::size_t n = data.n();
  if (c.match_mode > data.d()) throw InvalidArgument("config field 'match-mode': out of range");
  const double eps = c.epsilon_grid(n).front();
  const double lambda_ref = spectrum.eigenvalues[c.match_mode - 1];
  double gamma_eff = 0.0;
  if (c.decay == DecayChoice::matched) gamma_eff = equivalent_decay(lambda_ref, eps);
  if (c.decay == DecayChoice::value) gamma_eff = c.gamma * static_cast<double>(n);

  TrainingConfig dae = training_config(c);
  dae.noise = NoiseModel::gaussian(eps / static_cast<double>(n));
  dae.weight_decay = 0.0;
  TrainingConfig wdae = dae;
  wdae.noise = NoiseModel::none();
  wdae.weight_decay = gamma_eff / static_cast<double>(n);

  const std::vector<std::size_t> modes =
      c.modes.empty() ? std::vector<std::size_t>{c.match_mode} : c.modes;
  check_modes(modes, data.d());
  const Replication rd = replicate_linear(data, spectrum, dae, modes);
  std::optional<Replication> rw;
  if (c.decay != DecayChoice::none) rw = replicate_linear(data, spectrum, wdae, modes);

  CommandOutput out;
  PendingFiles files(c.out);
  std::ostringstream table;
  table << "run,mode,lambda,fixed_point,final_value,rms_gap,initial_norm,final_norm,"
           "converged_epoch,norm_shrinkage_after_convergence,mode_move_after_convergence\n";
  auto emit = [&](const Replication& r, const std::string& name) {
    std::vector<Trajectory> rows;
    for (const ModeComparison& m : r.modes) {
      rows.push_back(m.simulated);
      rows.push_back(m.predicted);
      const NormPhase ph = analyze_norm_phase(m.simulated, r.run.norms, m.fixed_point);
      table << name << ',' << m.mode << ',' << number(m.lambda) << ',' << number(m.fixed_point)
            << ',' << number(m.simulated.values.back()) << ',' << number(m.rms_gap) << ','
            << number(r.run.norms.values.front()) << ',' << number(r.run.norms.values.back())
            << ',' << (ph.converged_epoch ? number(*ph.converged_epoch) : "") << ','
            << number(ph.shrinkage) << ',' << number(ph.mode_move) << '\n';
      out.summary.push_back(name + " mode " + std::to_string(m.mode) + ": final w=" +
                            number(m.simulated.values.back()) + " (w*=" + number(m.fixed_point) +
                            "), norm " + number(r.run.norms.values.front()) + " -> " +
                            number(r.run.norms.values.back()) +
                            ", shrinkage after convergence " + number(ph.shrinkage));
    }
    rows.push_back(r.run.norms);
    write_trajectories_csv(files.open("compare_" + name + ".csv"), rows);
  };
  emit(rd, "dae");
  if (rw) emit(*rw, "wdae");
  files.open("compare_summary.csv") << table.str();
  files.commit(out);
  return out;
}

CommandOutput cmd_real_data(const ExperimentConfig& c) {
  apply_threads(c);
  const Dataset data = load_configured(c);
  check_modes(c.modes, data.d());
  const Spectrum spectrum = spectrum_of(data);
  const std::size_t n = data.n();
  TrainingConfig t = training_config(c);
  const double eps = c.epsilon_grid(n).front();
  t.noise = eps > 0.0 ? NoiseModel::gaussian(eps / static_cast<double>(n)) : NoiseModel::none();
  t.validate();

  const Replication rd = replicate_linear(data, spectrum, t, c.modes);
  std::optional<Replication> rw;
  if (c.decay != DecayChoice::none) {
    TrainingConfig w = t;
    w.noise = NoiseModel::none();
    if (c.decay == DecayChoice::value) {
      w.weight_decay = c.gamma;
    } else {
      if (c.match_mode > data.d()) throw InvalidArgument("config field 'match-mode': out of range");
      w.weight_decay =
          equivalent_decay(spectrum.eigenvalues[c.match_mode - 1], eps) / static_cast<double>(n);
    }
    if (w.weight_decay > 0.0) rw = replicate_linear(data, spectrum, w, c.modes);
  }

  CommandOutput out;
  out.summary.push_back("N=" + std::to_string(n) + " D=" + std::to_string(data.d()) +
                        " eps=" + number(rd.epsilon) + " tau=" + number(rd.tau));
  PendingFiles files(c.out);
  std::ostringstream table;
  table << "run,mode,lambda,fixed_point,final_simulated,rms_gap,relative_gap\n";
  auto emit = [&](const Replication& r, const std::string& name, const std::string& file) {
    std::vector<Trajectory> rows;
    for (const ModeComparison& m : r.modes) {
      rows.push_back(m.simulated);
      rows.push_back(m.predicted);
      table << name << ',' << m.mode << ',' << number(m.lambda) << ',' << number(m.fixed_point)
            << ',' << number(m.simulated.values.back()) << ',' << number(m.rms_gap) << ','
            << number(m.relative_gap) << '\n';
      out.summary.push_back(name + " mode " + std::to_string(m.mode) + ": lambda=" +
                            number(m.lambda) + " w*=" + number(m.fixed_point) + " final=" +
                            number(m.simulated.values.back()) + " rms gap/w*=" +
                            number(m.relative_gap));
    }
    rows.push_back(r.run.norms);
    write_trajectories_csv(files.open(file), rows);
  };
  emit(rd, "dae", "real_data.csv");
  if (rw) emit(*rw, "wdae", "real_data_wdae.csv");
  files.open("real_data_summary.csv") << table.str();
  write_spectrum_csv(files.open("spectrum.csv"), spectrum);
  files.commit(out);
  return out;
}

CommandOutput cmd_nonlinear(const ExperimentConfig& c) {
  apply_threads(c);
  const Dataset data = load_configured(c);
  check_modes(c.modes, data.d());
  const Spectrum spectrum = spectrum_of(data);
  const std::size_t n = data.n();
  TrainingConfig t = training_config(c);
  const double eps = c.epsilon_grid(n).front();
  t.noise = eps > 0.0 ? NoiseModel::gaussian(eps / static_cast<double>(n)) : NoiseModel::none();
  switch (c.decay) {
    case DecayChoice::none: t.weight_decay = 0.0; break;
    case DecayChoice::value: t.weight_decay = c.gamma; break;
    case DecayChoice::matched:
      if (c.match_mode > data.d()) throw InvalidArgument("config field 'match-mode': out of range");
      t.weight_decay =
          equivalent_decay(spectrum.eigenvalues[c.match_mode - 1], eps) / static_cast<double>(n);
      break;
  }
  if (c.epochs > 0) t.validate();

  const NonlinearTriple triple = run_nonlinear_triple(data, spectrum, t, c.activation, c.modes);

  CommandOutput out;
  PendingFiles files(c.out);
  std::ostringstream table;
  table << "run,mode,plateau,half_rise_epoch\n";
  const std::vector<std::size_t> modes = triple.ae.front().modes;
  auto emit = [&](const std::vector<ModeEstimate>& series, const std::string& name) {
    write_trajectories_csv(files.open("nonlinear_" + name + ".csv"),
                           estimates_to_trajectories(series));
    for (std::size_t k = 0; k < modes.size(); ++k) {
      if (!series.front().ratios[k]) continue;
      const double p = plateau_value(series, k);
      const auto h = half_rise_epoch(series, k, p);
      table << name << ',' << modes[k] << ',' << number(p) << ','
            << (h ? std::to_string(*h) : "") << '\n';
      out.summary.push_back(name + " mode " + std::to_string(modes[k]) + ": plateau " +
                            number(p) + (h ? ", half rise at epoch " + std::to_string(*h) : ""));
    }
  };
  emit(triple.ae, "ae");
  emit(triple.wdae, "wdae");
  emit(triple.dae, "dae");
  files.open("nonlinear_summary.csv") << table.str();
  files.commit(out);
  return out;
}

CommandOutput cmd_rates(const ExperimentConfig& c) {
  const double n = static_cast<double>(c.n);
  const double tau = n / c.alpha;
  std::ostringstream table;
  table << "lambda,epsilon,gamma_eff,alpha_noise,alpha_decay,ratio\n";
  CommandOutput out;
  for (double lambda : c.lambdas) {
    double prev = 2.0;
    bool decreasing = true;
    for (double eps : c.epsilon_grid(c.n)) {
      const double g = decay_eff(c, lambda, eps, n);
      const OptimalRates r = optimal_rates(lambda, eps, g, tau);
      table << number(lambda) << ',' << number(eps) << ',' << number(g) << ',' << number(r.noise)
            << ',' << number(r.decay) << ',' << number(r.ratio) << '\n';
      if (!(r.ratio < prev)) decreasing = false;
      prev = r.ratio;
    }
    out.summary.push_back("lambda=" + number(lambda) + ": ratio " +
                          (decreasing ? "strictly decreasing" : "not strictly decreasing") +
                          " over the epsilon grid");
  }
  PendingFiles files(c.out);
  files.open("rates.csv") << table.str();
  files.commit(out);
  return out;
}

CommandOutput cmd_ingest(const ExperimentConfig& c) {
  apply_threads(c);
  const std::vector<std::uint8_t> bytes = read_file(c.dataset);
  RawImageBatch batch;
  const bool idx = bytes.size() >= 4 && bytes[0] == 0 && bytes[1] == 0 && bytes[2] == 8 &&
                   bytes[3] == 3;
  const std::string ext = c.dataset.extension().string();
  if (idx) {
    batch = parse_idx(bytes, c.n);
    std::string name = c.dataset.filename().string();
    if (const auto at = name.find("images-idx3"); at != std::string::npos) {
      name.replace(at, 11, "labels-idx1");
      const auto labels = c.dataset.parent_path() / name;
      if (std::filesystem::exists(labels)) batch.labels = load_idx_labels(labels, c.n);
    }
  } else if (ext == ".csv" || ext == ".f64") {
    const Dataset d = load_dataset(c.dataset, c.n);
    batch.pixels = d.samples();
  } else {
    batch = parse_cifar10(bytes, c.n);
  }
  const Dataset data = preprocess(batch, {c.center, c.scale});
  const Spectrum spectrum = spectrum_of(data);

  CommandOutput out;
  out.summary.push_back("source=" + std::string(to_string(batch.source)) + " N=" +
                        std::to_string(data.n()) + " D=" + std::to_string(data.d()));
  if (!batch.labels.empty()) {
    std::vector<std::size_t> hist(10, 0);
    for (int l : batch.labels) ++hist[static_cast<std::size_t>(l)];
    std::string h = "labels:";
    for (std::size_t k = 0; k < 10; ++k) h += " " + std::to_string(k) + "=" + std::to_string(hist[k]);
    out.summary.push_back(h);
  }
  out.summary.push_back("lambda_1=" + number(spectrum.eigenvalues.front()) +
                        " trace=" + number(trace(covariance(data))));

  PendingFiles files(c.out);
  write_spectrum_csv(files.open("spectrum.csv"), spectrum);
  files.commit(out);
  const auto cache = c.out / (c.format == "csv" ? "dataset.csv" : "dataset.f64");
  if (c.format == "csv") write_matrix_csv(cache, data.samples());
  else write_matrix_binary(cache, data.samples());
  out.files.push_back(cache);
  return out;
}

CommandOutput run_experiment(const ExperimentConfig& config) {
  switch (config.experiment) {
    case Experiment::predict: return cmd_predict(config);
    case Experiment::surface: return cmd_surface(config);
    case Experiment::simulate_scalar: return cmd_simulate(config);
    case Experiment::compare_decay: return cmd_compare(config);
    case Experiment::real_data: return cmd_real_data(config);
    case Experiment::nonlinear: return cmd_nonlinear(config);
    case Experiment::rates: return cmd_rates(config);
    case Experiment::ingest: return cmd_ingest(config);
  }
  throw InvalidArgument("unknown experiment");
}

}  // namespace lindyn
