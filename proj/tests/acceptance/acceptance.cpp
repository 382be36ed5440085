// One PASS/FAIL line per acceptance criterion. Tolerances are pinned below.
// Exit status is the number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "lindyn/analytic.hpp"
#include "lindyn/config.hpp"
#include "lindyn/data.hpp"
#include "lindyn/errors.hpp"
#include "lindyn/experiments.hpp"
#include "lindyn/nonlinear.hpp"
#include "lindyn/simulate.hpp"
#include "lindyn/spectrum.hpp"
#include "support/oracles.hpp"

namespace fs = std::filesystem;
using lindyn::Matrix;
using lindyn::ScalarMode;

namespace {

// AC1
constexpr double kFixedPointTol = 1e-3;
constexpr double kScalarCurveTol = 1e-2;
constexpr double kRateFraction = 0.1;
constexpr double kAc1Seconds = 1.0;
// AC2, AC3
constexpr int kOracleCases = 50;
constexpr int kOracleTimes = 20;
constexpr double kOracleRelTol = 1e-6;
constexpr double kMinConserved = 1e-3;
// Relative errors are taken against max(|reference|, this floor) so that
// curves crossing zero are not judged on a vanishing denominator.
constexpr double kRelFloor = 1e-3;
constexpr double kAc2Seconds = 5.0;
// AC4
constexpr double kPlateauTol = 1e-4;
// AC5
constexpr int kMarginalCases = 10;
constexpr std::size_t kDraws = 100000;
constexpr double kStdErrors = 3.0;
constexpr double kGradRelTol = 1e-5;
// AC6
constexpr double kOffDiagonalTol = 1e-8;
constexpr double kScalarMatchTol = 1e-8;
// AC7
constexpr double kRmsFraction = 0.05;
constexpr double kAc7Seconds = 120.0;
// AC8
constexpr double kShrinkage = 0.10;
constexpr double kModeMove = 1e-3;
// Converged means within the AC1 band of the fixed point; the stricter band
// is reported alongside.
constexpr double kSettleTol = kFixedPointTol;
constexpr double kStrictSettleTol = 1e-4;
constexpr double kNormAgreement = 0.05;

int failures = 0;

void report(const char* id, bool pass, const std::string& detail) {
  std::printf("%s %s %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), kRelFloor); }

void ac1() {
  const auto t0 = std::chrono::steady_clock::now();
  const double lambda = 1.0, tau = 200.0;
  const std::vector<double> eps{0.0, 1.0, 5.0};
  const std::vector<double> expected{1.0, 0.5, 1.0 / 6.0};
  bool ok = true;
  double worst_fp = 0, worst_curve = 0, worst_rate = 0;
  for (std::size_t k = 0; k < eps.size(); ++k) {
    const ScalarMode m = ScalarMode::make(lambda, eps[k], tau, 0.1, 0.12);
    // Step 1/tau against the stability-optimal step 1/(2 lambda + 3 eps).
    const double rate_fraction = (2 * lambda + 3 * eps[k]) / tau;
    worst_rate = std::max(worst_rate, rate_fraction);
    const auto run = lindyn::run_scalar_gd(m, 20000, 10);
    const double fp = std::abs(run.w.values.back() - expected[k]);
    worst_fp = std::max(worst_fp, fp);
    for (std::size_t i = 0; i < run.w.times.size(); ++i)
      worst_curve = std::max(worst_curve,
                             std::abs(run.w.values[i] - lindyn::dae_trajectory(m, run.w.times[i])));
    ok = ok && fp <= kFixedPointTol && rate_fraction <= kRateFraction;
  }
  const double secs = seconds_since(t0);
  ok = ok && worst_curve <= kScalarCurveTol && secs < kAc1Seconds;
  report("AC1", ok,
         fmt("max|w_T - w*|=%.3g (tol %g) max curve gap=%.3g (tol %g) step/optimal<=%.3g runtime=%.3fs",
             worst_fp, kFixedPointTol, worst_curve, kScalarCurveTol, worst_rate, secs));
}

void ac2() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> lam(0.2, 3.0), ep(0.0, 3.0), ta(10.0, 200.0), w(-1.0, 1.0);
  double worst = 0;
  int cases = 0;
  while (cases < kOracleCases) {
    const double l = lam(rng), e = ep(rng), t = ta(rng), a = w(rng), b = w(rng);
    if (std::abs(b * b - a * a) <= kMinConserved) continue;
    const ScalarMode m = ScalarMode::make(l, e, t, a, b);
    const double horizon = 6.0 * t / (l + e);
    for (int k = 1; k <= kOracleTimes; ++k) {
      const double tk = horizon * k / kOracleTimes;
      const auto y = oracle::integrate_adaptive(oracle::scalar_mode_rhs(l, e, t), {a, b}, 0.0, tk);
      worst = std::max(worst, rel(lindyn::dae_trajectory(m, tk), y[0] * y[1]));
    }
    ++cases;
  }
  const double secs = seconds_since(t0);
  report("AC2", worst <= kOracleRelTol && secs < kAc2Seconds,
         fmt("%d cases x %d times, max rel err=%.3g (tol %g) runtime=%.2fs", cases, kOracleTimes,
             worst, kOracleRelTol, secs));
}

void ac3() {
  std::mt19937_64 rng(20240602);
  std::uniform_real_distribution<double> lam(0.2, 3.0), ga(0.0, 1.5), ta(10.0, 200.0),
      w0(1e-4, 1e-2);
  double worst = 0;
  for (int c = 0; c < kOracleCases; ++c) {
    const double l = lam(rng), g = ga(rng) * l, t = ta(rng), start = w0(rng);
    // Equal weights sqrt(start) give the product ODE below. Curves with decay
    // above lambda fall to 1e-20 and below, so the oracle runs on a purely
    // relative error target.
    const double horizon = 6.0 * t / std::max(l - g, 0.2);
    for (int k = 1; k <= kOracleTimes; ++k) {
      const double tk = horizon * k / kOracleTimes;
      const auto y = oracle::integrate_adaptive(oracle::decay_product_rhs(l, g, t), {start}, 0.0, tk,
                                                  1e-12, 1e-300);
      const double ref = y[0];
      worst = std::max(worst, std::abs(lindyn::wdae_trajectory(l, g, t, start, tk) - ref) /
                                  std::max(std::abs(ref), 1e-12));
    }
  }
  report("AC3", worst <= kOracleRelTol,
         fmt("%d cases x %d times, max rel err=%.3g (tol %g)", kOracleCases, kOracleTimes, worst,
             kOracleRelTol));
}

void ac4() {
  const double tau = 100.0;
  bool ok = true;
  double worst_plateau = 0;
  int delay_ok = 0, pairs = 0;
  for (double l : {0.5, 1.0, 2.5})
    for (double e : {0.5, 1.0, 2.0}) {
      ++pairs;
      const double g = lindyn::equivalent_decay(l, e);
      const double wd = lindyn::dae_fixed_point(l, e), ww = lindyn::wdae_fixed_point(l, g);
      // Late-time values of both closed forms from the same small start.
      const ScalarMode m = ScalarMode::make(l, e, tau, 0.01, 0.011);
      const double w0 = m.w0();
      const double late = 60.0 * tau / l;
      const double pd = lindyn::dae_trajectory(m, late), pw = lindyn::wdae_trajectory(l, g, tau, w0, late);
      worst_plateau = std::max({worst_plateau, std::abs(wd - ww), std::abs(pd - pw)});
      const double td = lindyn::first_crossing_time(
          [&](double t) { return lindyn::dae_trajectory(m, t); }, wd / 2, late, 1e-6);
      const double tw = lindyn::first_crossing_time(
          [&](double t) { return lindyn::wdae_trajectory(l, g, tau, w0, t); }, ww / 2, late, 1e-6);
      if (td >= 0 && tw >= 0 && td <= tw) ++delay_ok;
    }
  ok = worst_plateau <= kPlateauTol && delay_ok == pairs;

  bool rates_ok = true;
  for (double l : {0.5, 1.0, 2.5}) {
    rates_ok = rates_ok && lindyn::optimal_rates(l, 0.0, 0.0, tau).ratio == 1.0;
    double prev = 1.0;
    for (int k = 1; k <= 20; ++k) {
      const double e = 0.5 * k;
      const double r = lindyn::optimal_rates(l, e, lindyn::equivalent_decay(l, e), tau).ratio;
      rates_ok = rates_ok && r < prev;
      prev = r;
    }
  }
  report("AC4", ok && rates_ok,
         fmt("max plateau gap=%.3g (tol %g), DAE half-rise <= WDAE in %d/%d, R(0)=1 and strictly "
             "decreasing: %s",
             worst_plateau, kPlateauTol, delay_ok, pairs, rates_ok ? "yes" : "no"));
}

void ac5() {
  double worst_se = 0, worst_grad = 0;
  int within = 0;
  for (int c = 0; c < kMarginalCases; ++c) {
    const std::uint64_t seed = 100 + c;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> s2(0.01, 0.5);
    const std::size_t n = 10 + c, d = 5, h = 3;
    const lindyn::Dataset data(oracle::uniform_matrix(n, d, seed), lindyn::DataSource::synthetic);
    const lindyn::LinearAE model{oracle::uniform_matrix(h, d, seed + 1000, -0.5, 0.5),
                                 oracle::uniform_matrix(d, h, seed + 2000, -0.5, 0.5)};
    const double sigma2 = s2(rng);
    const double eps = lindyn::epsilon_from_noise(lindyn::NoiseModel::gaussian(sigma2), n);
    const auto exact = lindyn::marginalized_loss_and_grads(model, data, eps);
    const auto sampled = lindyn::sampled_loss(model, data, lindyn::NoiseModel::gaussian(sigma2), kDraws, seed);
    const double z = std::abs(sampled.mean - exact.loss) / sampled.std_error;
    worst_se = std::max(worst_se, z);
    if (z <= kStdErrors) ++within;

    std::vector<double> flat(model.w1.values().begin(), model.w1.values().end());
    flat.insert(flat.end(), model.w2.values().begin(), model.w2.values().end());
    const auto fd = oracle::gradient(
        [&](const std::vector<double>& x) {
          lindyn::LinearAE t{Matrix(h, d), Matrix(d, h)};
          std::copy(x.begin(), x.begin() + h * d, t.w1.data());
          std::copy(x.begin() + h * d, x.end(), t.w2.data());
          return lindyn::marginalized_loss_and_grads(t, data, eps).loss;
        },
        flat, 1e-6);
    double diff = 0, norm = 0;
    for (std::size_t i = 0; i < h * d; ++i) {
      diff += std::pow(exact.grad_w1.data()[i] - fd[i], 2) + std::pow(exact.grad_w2.data()[i] - fd[h * d + i], 2);
      norm += fd[i] * fd[i] + fd[h * d + i] * fd[h * d + i];
    }
    worst_grad = std::max(worst_grad, std::sqrt(diff / norm));
  }
  report("AC5", within == kMarginalCases && worst_grad <= kGradRelTol,
         fmt("%d/%d sampled losses within %g SE (worst %.2f SE, %zu draws), max gradient rel err=%.3g (tol %g)",
             within, kMarginalCases, kStdErrors, worst_se, kDraws, worst_grad, kGradRelTol));
}

void ac6() {
  const std::vector<double> lambdas{4, 3, 2.5, 2, 1.5, 1, 0.7, 0.3};
  const lindyn::Dataset d = lindyn::synthetic_dataset(lambdas, 400, 6);
  const auto s = lindyn::spectrum_of(d);
  const std::vector<double> d1{0.2, 0.1, 0.3, 0.05}, d2{0.1, 0.25, 0.05, 0.3};
  lindyn::TrainingConfig c;
  c.learning_rate = 2.0;
  c.epochs = 1000;
  c.hidden_dim = 4;
  c.noise = lindyn::NoiseModel::gaussian(0.002);
  c.record_every = 1;
  lindyn::LinearRunOptions o;
  o.track_off_diagonal = true;
  o.engine = lindyn::LinearEngine::data_space;
  o.initial = lindyn::init_orthogonal(s, d1, d2, 77);
  const auto run = lindyn::run_linear_ae(d, s, c, o);
  const double tau = c.tau(d.n()), eps = lindyn::epsilon_from_noise(c.noise, d.n());
  double worst = 0;
  for (std::size_t j = 0; j < 4; ++j) {
    const auto sc = lindyn::run_scalar_gd(ScalarMode::make(s.eigenvalues[j], eps, tau, d1[j], d2[j]),
                                          c.epochs, c.record_every);
    for (std::size_t i = 0; i < sc.w.values.size(); ++i)
      worst = std::max(worst, std::abs(run.modes[j].values[i] - sc.w.values[i]));
  }
  report("AC6", run.max_off_diagonal < kOffDiagonalTol && worst <= kScalarMatchTol,
         fmt("D=8 H=4 1000 epochs: max off-diagonal=%.3g (tol %g), max gap to scalar GD=%.3g (tol %g)",
             run.max_off_diagonal, kOffDiagonalTol, worst, kScalarMatchTol));
}

void replicate_real(const char* id, const fs::path& path, lindyn::Settings settings,
                    bool counted = true) {
  if (!fs::exists(path)) {
    report(id, false, "dataset not found: " + path.string());
    return;
  }
  const auto t0 = std::chrono::steady_clock::now();
  settings["dataset"] = path.string();
  const auto cfg = lindyn::resolve_config(lindyn::Experiment::real_data, settings);
  const auto data = lindyn::load_dataset(cfg.dataset, cfg.n, {cfg.center, cfg.scale});
  const auto spectrum = lindyn::spectrum_of(data);
  lindyn::TrainingConfig t = lindyn::training_config(cfg);
  const auto rep = lindyn::replicate_linear(data, spectrum, t, cfg.modes);
  const double secs = seconds_since(t0);
  bool ok = secs < kAc7Seconds;
  std::string detail = fmt("N=%zu H=%zu eps=%g:", data.n(), t.hidden_dim, rep.epsilon);
  for (const auto& m : rep.modes) {
    ok = ok && m.relative_gap <= kRmsFraction;
    detail += fmt(" mode %zu gap/w*=%.4f%s", m.mode, m.relative_gap, m.relative_gap <= kRmsFraction ? "" : "(!)");
  }
  detail += fmt(" (tol %g) runtime=%.1fs", kRmsFraction, secs);
  if (counted)
    report(id, ok, detail);
  else
    std::printf("%s INFO %s\n", id, detail.c_str());
}

void ac7() {
  const fs::path data = LINDYN_DATA_DIR;
  const fs::path mnist = data / "mnist-1k" / "train-images-idx3-ubyte";
  replicate_real("AC7", mnist, {});
  // With H = 32 the last hidden unit is shared by the nearly degenerate modes
  // 32 and 33; the wider net shows the criterion modes without that overlap.
  replicate_real("AC7-h64", mnist, {{"hidden", "64"}}, false);
  const fs::path cifar = data / "cifar-10" / "data_batch_1.bin";
  if (fs::exists(cifar))
    replicate_real("AC7-cifar", cifar, {{"n", "500"}, {"hidden", "64"}, {"modes", "1,4,8,16,32"}});
  else
    std::printf("AC7-cifar SKIP optional CIFAR-10 batch not present at %s\n", cifar.string().c_str());
}

void ac8() {
  const std::vector<double> lambdas{1, 0, 0, 0};
  const auto data = lindyn::exact_spectrum_dataset(lambdas, 3);
  const auto s = lindyn::spectrum_of(data);
  const double n = static_cast<double>(data.n()), tau = 20.0, eps = 0.1;
  const double gamma_eff = lindyn::equivalent_decay(1.0, eps);
  const std::vector<std::size_t> modes{1};

  lindyn::TrainingConfig wdae;
  wdae.learning_rate = n / tau;
  wdae.epochs = 20000;
  wdae.hidden_dim = 4;
  wdae.weight_decay = gamma_eff / n;
  wdae.record_every = 10;
  wdae.init = {lindyn::InitScheme::small_random, 1.0, 5};
  const auto large = lindyn::replicate_linear(data, s, wdae, modes);
  const auto phase = lindyn::analyze_norm_phase(large.modes[0].simulated, large.run.norms,
                                                large.modes[0].fixed_point, kSettleTol);
  const auto strict = lindyn::analyze_norm_phase(large.modes[0].simulated, large.run.norms,
                                                 large.modes[0].fixed_point, kStrictSettleTol);
  const bool phase_ok = phase.converged_epoch && phase.shrinkage >= kShrinkage && phase.mode_move < kModeMove;

  lindyn::TrainingConfig dae = wdae;
  dae.weight_decay = 0.0;
  dae.noise = lindyn::NoiseModel::gaussian(eps / n);
  dae.init.scale = 0.01;
  dae.epochs = 5000;
  lindyn::TrainingConfig wsmall = wdae;
  wsmall.init.scale = 0.01;
  wsmall.epochs = 5000;
  const auto rd = lindyn::run_linear_ae(data, s, dae);
  const auto rw = lindyn::run_linear_ae(data, s, wsmall);
  const double nd = rd.norms.values.back(), nw = rw.norms.values.back();
  const double agreement = std::abs(nd - nw) / nw;
  report("AC8", phase_ok && agreement <= kNormAgreement,
         fmt("large-init WDAE: settled at epoch %.0f, norm %.4f -> %.4f (shrinkage %.1f%%, need %g%%), "
             "mode move %.3g (tol %g); small-init final norms DAE %.5f WDAE %.5f (gap %.3f%%, tol %g%%); "
             "within %g band: shrinkage %.1f%% after epoch %.0f",
             phase.converged_epoch.value_or(-1), phase.norm_at_convergence, phase.final_norm,
             100 * phase.shrinkage, 100 * kShrinkage, phase.mode_move, kModeMove, nd, nw, 100 * agreement,
             100 * kNormAgreement, kStrictSettleTol, 100 * strict.shrinkage, strict.converged_epoch.value_or(-1)));
}

void ac9() {
  const fs::path path = fs::path(LINDYN_DATA_DIR) / "mnist-1k" / "train-images-idx3-ubyte";
  if (!fs::exists(path)) {
    report("AC9", false, "dataset not found: " + path.string());
    return;
  }
  const auto t0 = std::chrono::steady_clock::now();
  const auto cfg = lindyn::resolve_config(
      lindyn::Experiment::nonlinear, {{"dataset", path.string()}, {"hidden", "64"}, {"gamma", "match"}});
  const auto data = lindyn::load_dataset(cfg.dataset, cfg.n, {cfg.center, cfg.scale});
  const auto spectrum = lindyn::spectrum_of(data);
  lindyn::TrainingConfig t = lindyn::training_config(cfg);
  const double eps = lindyn::epsilon_from_noise(t.noise, data.n());
  t.weight_decay = lindyn::equivalent_decay(spectrum.eigenvalues[0], eps) / static_cast<double>(data.n());
  const auto triple = lindyn::run_nonlinear_triple(data, spectrum, t, lindyn::Activation::relu, cfg.modes);
  bool ok = true;
  std::string detail = fmt("ReLU H=%zu %zu epochs:", t.hidden_dim, t.epochs);
  const auto& modes = triple.ae.front().modes;
  for (std::size_t k = 0; k < modes.size(); ++k) {
    if (!triple.ae.front().ratios[k]) continue;
    const double ae = lindyn::plateau_value(triple.ae, k);
    const double wd = lindyn::plateau_value(triple.wdae, k);
    const double de = lindyn::plateau_value(triple.dae, k);
    ok = ok && de < ae && wd < ae;
    detail += fmt(" mode %zu AE %.4f WDAE %.4f DAE %.4f;", modes[k], ae, wd, de);
  }
  const auto hd = lindyn::half_rise_epoch(triple.dae, 0, lindyn::plateau_value(triple.dae, 0));
  const auto hw = lindyn::half_rise_epoch(triple.wdae, 0, lindyn::plateau_value(triple.wdae, 0));
  ok = ok && hd && hw && *hd <= *hw;
  detail += fmt(" mode-1 half-rise DAE %ld WDAE %ld; runtime=%.1fs", hd ? static_cast<long>(*hd) : -1L,
                hw ? static_cast<long>(*hw) : -1L, seconds_since(t0));
  report("AC9", ok, detail);
}

template <class E>
bool throws_as(const std::function<void()>& f) {
  try {
    f();
  } catch (const E&) {
    return true;
  } catch (...) {
    return false;
  }
  return false;
}

void ac10() {
  const fs::path fx = LINDYN_FIXTURE_DIR;
  const auto idx = lindyn::read_file(fx / "tiny-images-idx3-ubyte");
  const auto lab = lindyn::read_file(fx / "tiny-labels-idx1-ubyte");
  const auto cif = lindyn::read_file(fx / "cifar-one.bin");
  const bool trips = lindyn::encode_idx(lindyn::parse_idx(idx)) == idx &&
                     lindyn::encode_idx_labels(lindyn::parse_idx_labels(lab)) == lab &&
                     lindyn::encode_cifar10(lindyn::parse_cifar10(cif)) == cif;

  auto bad_magic = idx;
  bad_magic[3] = 0x02;
  const std::vector<std::uint8_t> truncated(idx.begin(), idx.end() - 1);
  std::vector<std::uint8_t> overflow(idx.begin(), idx.begin() + 16);
  std::fill(overflow.begin() + 4, overflow.end(), 0xFF);
  const std::vector<std::uint8_t> short_cifar(cif.begin(), cif.end() - 1);
  const bool errors =
      throws_as<lindyn::BadMagicError>([&] { lindyn::parse_idx(bad_magic); }) &&
      throws_as<lindyn::TruncatedInputError>([&] { lindyn::parse_idx(truncated); }) &&
      throws_as<lindyn::DimensionOverflowError>([&] { lindyn::parse_idx(overflow); }) &&
      throws_as<lindyn::TruncatedInputError>([&] { lindyn::parse_cifar10(short_cifar); });
  report("AC10", trips && errors,
         fmt("byte-exact round trips: %s; malformed inputs raise the expected errors: %s",
             trips ? "yes" : "no", errors ? "yes" : "no"));
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, void (*)()>> checks{
      {"AC1", ac1}, {"AC2", ac2}, {"AC3", ac3}, {"AC4", ac4}, {"AC5", ac5},
      {"AC6", ac6}, {"AC7", ac7}, {"AC8", ac8}, {"AC9", ac9}, {"AC10", ac10}};
  for (const auto& [id, fn] : checks) {
    try {
      fn();
    } catch (const std::exception& e) {
      report(id, false, std::string("error: ") + e.what());
    }
  }
  std::printf("%d criteria failed\n", failures);
  return failures;
}
