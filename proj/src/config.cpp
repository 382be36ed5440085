#include "lindyn/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "lindyn/errors.hpp"

namespace lindyn {

namespace {

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

}  // namespace

Settings parse_settings(std::string_view text) {
  Settings out;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw InvalidArgument("config line " + std::to_string(line_no) + ": expected key=value");
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key.empty())
      throw InvalidArgument("config line " + std::to_string(line_no) + ": empty key");
    if (!out.emplace(key, value).second)
      throw InvalidArgument("config line " + std::to_string(line_no) + ": repeated key '" + key +
                            "'");
  }
  return out;
}

Settings load_settings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_settings(ss.str());
}

void merge_settings(Settings& base, const Settings& overrides) {
  for (const auto& [k, v] : overrides) base[k] = v;
}

std::string_view to_string(Experiment e) noexcept {
  switch (e) {
    case Experiment::predict: return "predict";
    case Experiment::surface: return "surface";
    case Experiment::simulate_scalar: return "simulate";
    case Experiment::compare_decay: return "compare";
    case Experiment::real_data: return "real-data";
    case Experiment::nonlinear: return "nonlinear";
    case Experiment::rates: return "rates";
    case Experiment::ingest: return "ingest";
  }
  return "unknown";
}

Experiment parse_experiment(std::string_view name) {
  for (Experiment e : {Experiment::predict, Experiment::surface, Experiment::simulate_scalar,
                       Experiment::compare_decay, Experiment::real_data, Experiment::nonlinear,
                       Experiment::rates, Experiment::ingest})
    if (to_string(e) == name) return e;
  throw InvalidArgument("unknown experiment '" + std::string(name) + "'");
}

const std::vector<std::string>& known_setting_keys() {
  static const std::vector<std::string> keys = {
      "lambda", "epsilon",     "sigma2",     "laplace-b",   "gamma",      "match-mode",
      "n",      "alpha",       "epochs",     "hidden",      "init",       "init-scale",
      "seed",   "out",         "dataset",    "modes",       "record-every", "w1",
      "w2",     "activation",  "paths",      "grid-min",    "grid-max",   "grid-points",
      "center", "scale",       "format",     "threads"};
  return keys;
}

NoiseModel ExperimentConfig::noise() const {
  if (sigma2) return NoiseModel::gaussian(*sigma2);
  if (laplace_b) return NoiseModel::laplace(*laplace_b);
  return NoiseModel::none();
}

std::vector<double> ExperimentConfig::epsilon_grid(std::size_t samples) const {
  if (!epsilons.empty()) return epsilons;
  return {epsilon_from_noise(noise(), samples)};
}

namespace {

[[noreturn]] void bad(std::string_view field, const std::string& why) {
  throw InvalidArgument("config field '" + std::string(field) + "': " + why);
}

double to_double(std::string_view field, std::string_view s) {
  s = trim(s);
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v))
    bad(field, "'" + std::string(s) + "' is not a finite number");
  return v;
}

std::uint64_t to_uint(std::string_view field, std::string_view s) {
  s = trim(s);
  std::uint64_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    bad(field, "'" + std::string(s) + "' is not a non-negative integer");
  return v;
}

bool to_bool(std::string_view field, std::string_view s) {
  s = trim(s);
  if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
  if (s == "0" || s == "false" || s == "no" || s == "off") return false;
  bad(field, "'" + std::string(s) + "' is not a boolean");
}

template <class F>
auto to_list(std::string_view field, std::string_view s, F convert) {
  std::vector<decltype(convert(field, s))> out;
  while (true) {
    const auto comma = s.find(',');
    const std::string_view item = trim(s.substr(0, comma));
    if (item.empty()) bad(field, "empty list element");
    out.push_back(convert(field, item));
    if (comma == std::string_view::npos) break;
    s = s.substr(comma + 1);
  }
  return out;
}

void defaults_for(ExperimentConfig& c) {
  switch (c.experiment) {
    case Experiment::predict:
      c.lambdas = {2.5, 1.0, 0.5};
      c.epsilons = {1.0};
      c.decay = DecayChoice::matched;
      c.epochs = 1000;
      break;
    case Experiment::surface:
      c.lambdas = {1.0};
      c.epsilons = {0.0};
      c.epochs = 2000;
      c.init_scale = 1.5;
      break;
    case Experiment::simulate_scalar:
      c.lambdas = {1.0};
      c.epsilons = {0.0, 1.0, 5.0};
      c.epochs = 5000;
      c.init_scale = 0.1;
      break;
    case Experiment::compare_decay:
      c.lambdas = {1.0, 0.0, 0.0, 0.0};
      c.epsilons = {0.1};
      c.decay = DecayChoice::matched;
      c.hidden = 4;
      c.alpha = 0.05;
      c.epochs = 20000;
      c.init = InitScheme::small_random;
      c.init_scale = 1.0;
      c.record_every = 10;
      break;
    case Experiment::real_data:
      c.n = 1000;
      c.hidden = 32;
      c.sigma2 = 0.5;
      c.epochs = 5000;
      c.modes = {1, 4, 8, 16, 32};
      break;
    case Experiment::nonlinear:
      c.n = 1000;
      c.hidden = 256;
      c.sigma2 = 3.0;
      c.decay = DecayChoice::value;
      c.gamma = 0.0045;
      c.epochs = 400;
      c.modes = {1, 2, 3, 4};
      break;
    case Experiment::rates:
      c.lambdas = {1.0};
      for (int k = 0; k <= 20; ++k) c.epsilons.push_back(0.5 * k);
      c.decay = DecayChoice::matched;
      break;
    case Experiment::ingest:
      c.n = static_cast<std::size_t>(-1);
      break;
  }
}

bool uses_dataset(Experiment e) {
  return e == Experiment::real_data || e == Experiment::nonlinear || e == Experiment::ingest;
}

}  // namespace

ExperimentConfig resolve_config(Experiment experiment, const Settings& settings) {
  const auto& keys = known_setting_keys();
  for (const auto& [k, v] : settings)
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) bad(k, "unknown setting");

  ExperimentConfig c;
  c.experiment = experiment;
  defaults_for(c);
  auto get = [&](std::string_view key) -> const std::string* {
    const auto it = settings.find(key);
    return it == settings.end() ? nullptr : &it->second;
  };

  if (auto v = get("lambda")) c.lambdas = to_list("lambda", *v, to_double);
  int noise_sources = 0;
  if (auto v = get("epsilon")) {
    c.epsilons = to_list("epsilon", *v, to_double);
    ++noise_sources;
  }
  if (auto v = get("sigma2")) {
    c.sigma2 = to_double("sigma2", *v);
    ++noise_sources;
  }
  if (auto v = get("laplace-b")) {
    c.laplace_b = to_double("laplace-b", *v);
    ++noise_sources;
  }
  if (noise_sources > 1) bad("epsilon", "give only one of epsilon, sigma2 and laplace-b");
  if (get("sigma2") || get("laplace-b")) {
    c.epsilons.clear();
    if (get("sigma2")) c.laplace_b.reset();
    if (get("laplace-b")) c.sigma2.reset();
  }
  if (get("epsilon")) {
    c.sigma2.reset();
    c.laplace_b.reset();
  }
  if (auto v = get("gamma")) {
    const std::string_view g = trim(*v);
    if (g == "match") {
      c.decay = DecayChoice::matched;
    } else if (g == "none") {
      c.decay = DecayChoice::none;
    } else {
      c.gamma = to_double("gamma", g);
      c.decay = DecayChoice::value;
    }
  }
  if (auto v = get("match-mode")) c.match_mode = to_uint("match-mode", *v);
  if (auto v = get("n")) c.n = to_uint("n", *v);
  if (auto v = get("alpha")) c.alpha = to_double("alpha", *v);
  if (auto v = get("epochs")) c.epochs = to_uint("epochs", *v);
  if (auto v = get("hidden")) c.hidden = to_uint("hidden", *v);
  if (auto v = get("init")) {
    const std::string_view s = trim(*v);
    if (s == "orthogonal") c.init = InitScheme::orthogonal;
    else if (s == "small" || s == "small_random" || s == "random") c.init = InitScheme::small_random;
    else bad("init", "expected orthogonal or small_random");
  }
  if (auto v = get("init-scale")) c.init_scale = to_double("init-scale", *v);
  if (auto v = get("seed")) c.seed = to_uint("seed", *v);
  if (auto v = get("out")) c.out = std::string(trim(*v));
  if (auto v = get("dataset")) c.dataset = std::string(trim(*v));
  if (auto v = get("modes"))
    c.modes = to_list("modes", *v, [](std::string_view f, std::string_view s) {
      return static_cast<std::size_t>(to_uint(f, s));
    });
  if (auto v = get("record-every")) c.record_every = to_uint("record-every", *v);
  if (auto v = get("w1")) c.w1 = to_double("w1", *v);
  if (auto v = get("w2")) c.w2 = to_double("w2", *v);
  if (auto v = get("activation")) c.activation = parse_activation(trim(*v));
  if (auto v = get("paths")) c.paths = to_uint("paths", *v);
  if (auto v = get("grid-min")) c.grid_min = to_double("grid-min", *v);
  if (auto v = get("grid-max")) c.grid_max = to_double("grid-max", *v);
  if (auto v = get("grid-points")) c.grid_points = to_uint("grid-points", *v);
  if (auto v = get("center")) c.center = to_bool("center", *v);
  if (auto v = get("scale")) c.scale = to_bool("scale", *v);
  if (auto v = get("format")) c.format = std::string(trim(*v));
  if (auto v = get("threads")) c.threads = static_cast<int>(to_uint("threads", *v));

  // Validation against the module preconditions.
  for (double l : c.lambdas)
    if (l < 0.0) bad("lambda", "must be >= 0");
  for (double e : c.epsilons)
    if (e < 0.0) bad("epsilon", "must be >= 0");
  if (c.sigma2 && *c.sigma2 < 0.0) bad("sigma2", "must be >= 0");
  if (c.laplace_b && *c.laplace_b < 0.0) bad("laplace-b", "must be >= 0");
  if (c.decay == DecayChoice::value && c.gamma < 0.0) bad("gamma", "must be >= 0");
  if (c.match_mode < 1) bad("match-mode", "must be >= 1");
  if (c.n < 1) bad("n", "must be >= 1");
  if (!(c.alpha > 0.0)) bad("alpha", "must be > 0");
  const bool zero_epochs_ok = c.experiment == Experiment::nonlinear ||
                              c.experiment == Experiment::ingest ||
                              c.experiment == Experiment::rates;
  if (c.epochs < 1 && !zero_epochs_ok) bad("epochs", "must be >= 1");
  if (c.hidden < 1) bad("hidden", "must be >= 1");
  if (c.init_scale < 0.0) bad("init-scale", "must be >= 0");
  if (c.init == InitScheme::small_random && c.init_scale == 0.0 && !c.w1)
    bad("init-scale", "must be > 0 for small random init");
  if (c.record_every < 1) bad("record-every", "must be >= 1");
  for (std::size_t m : c.modes)
    if (m < 1) bad("modes", "mode indices are 1-based");
  if (c.w1.has_value() != c.w2.has_value()) bad("w1", "give w1 and w2 together");
  if (!(c.grid_max > c.grid_min)) bad("grid-max", "must exceed grid-min");
  if (c.grid_points < 2) bad("grid-points", "must be >= 2");
  if (c.format != "f64" && c.format != "csv") bad("format", "expected f64 or csv");
  if (c.threads < 0) bad("threads", "must be >= 0");

  const bool scalar = !uses_dataset(c.experiment) && c.experiment != Experiment::compare_decay;
  if (scalar || c.experiment == Experiment::compare_decay) {
    if (c.lambdas.empty()) bad("lambda", "needs at least one value");
  }
  if (scalar && c.experiment != Experiment::surface)
    for (double l : c.lambdas)
      if (!(l > 0.0)) bad("lambda", "must be > 0 for this experiment");
  if (c.experiment == Experiment::compare_decay) {
    if (!(c.lambdas.front() > 0.0)) bad("lambda", "the first eigenvalue must be > 0");
    if (c.hidden > c.lambdas.size() && c.init == InitScheme::orthogonal)
      bad("hidden", "orthogonal init needs hidden <= number of eigenvalues");
  }
  if (c.experiment == Experiment::rates && c.decay == DecayChoice::none)
    bad("gamma", "rates needs a decay value or 'match'");
  if (uses_dataset(c.experiment)) {
    if (c.dataset.empty()) bad("dataset", "a dataset path is required");
    if (!std::filesystem::exists(c.dataset))
      throw IoError("dataset file not found: " + c.dataset.string());
  }
  return c;
}

}  // namespace lindyn
