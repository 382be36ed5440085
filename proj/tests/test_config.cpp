#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "lindyn/config.hpp"
#include "lindyn/errors.hpp"

using lindyn::Experiment;
using lindyn::Settings;

namespace {

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const lindyn::InvalidArgument& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Settings, ParsesCommentsAndWhitespace) {
  const auto s = lindyn::parse_settings("# header\n  lambda = 2.5, 1 \n\nseed=3 # trailing\n");
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s.at("lambda"), "2.5, 1");
  EXPECT_EQ(s.at("seed"), "3");
}

TEST(Settings, RejectsMalformedAndRepeated) {
  const auto m1 = message_of([] { lindyn::parse_settings("a=1\nnot a pair\n"); });
  EXPECT_NE(m1.find("line 2"), std::string::npos) << m1;
  const auto m2 = message_of([] { lindyn::parse_settings("seed=1\nseed=2\n"); });
  EXPECT_NE(m2.find("repeated"), std::string::npos) << m2;
  EXPECT_THROW(lindyn::parse_settings("=4\n"), lindyn::InvalidArgument);
}

TEST(Settings, FlagsOverrideFile) {
  const auto path = std::filesystem::temp_directory_path() / "lindyn_cfg_test.cfg";
  std::ofstream(path) << "alpha=0.5\nepochs=10\n";
  Settings merged = lindyn::load_settings(path);
  lindyn::merge_settings(merged, Settings{{"alpha", "0.25"}});
  const auto c = lindyn::resolve_config(Experiment::simulate_scalar, merged);
  EXPECT_EQ(c.alpha, 0.25);
  EXPECT_EQ(c.epochs, 10u);
  EXPECT_EQ(c.lambdas, std::vector<double>{1.0});  // default kept
  EXPECT_THROW(lindyn::load_settings("/nonexistent/x.cfg"), lindyn::IoError);
}

TEST(Experiments, NamesRoundTrip) {
  for (auto e : {Experiment::predict, Experiment::surface, Experiment::simulate_scalar,
                 Experiment::compare_decay, Experiment::real_data, Experiment::nonlinear,
                 Experiment::rates, Experiment::ingest})
    EXPECT_EQ(lindyn::parse_experiment(lindyn::to_string(e)), e);
  EXPECT_EQ(lindyn::to_string(Experiment::real_data), "real-data");
  EXPECT_THROW(lindyn::parse_experiment("train"), lindyn::InvalidArgument);
}

TEST(Resolve, SharedFlagsAreKnownKeys) {
  const auto& keys = lindyn::known_setting_keys();
  for (const char* k : {"lambda", "epsilon", "sigma2", "laplace-b", "gamma", "n", "alpha", "epochs",
                        "hidden", "init-scale", "seed", "out", "dataset", "modes", "record-every"})
    EXPECT_NE(std::find(keys.begin(), keys.end(), k), keys.end()) << k;
}

TEST(Resolve, UnknownKeyNamed) {
  const auto m = message_of([] { lindyn::resolve_config(Experiment::predict, {{"lamda", "1"}}); });
  EXPECT_NE(m.find("lamda"), std::string::npos) << m;
}

TEST(Resolve, BadValuesNameTheField) {
  struct Case {
    const char* key;
    const char* value;
  };
  for (const auto& [k, v] : {Case{"alpha", "0"}, Case{"alpha", "fast"}, Case{"lambda", "-1"},
                             Case{"epochs", "-3"}, Case{"modes", "0,1"}, Case{"hidden", "0"},
                             Case{"record-every", "0"}, Case{"epsilon", "1,,2"},
                             Case{"init-scale", "-1"}, Case{"seed", "1.5"}}) {
    const auto m = message_of([&] { lindyn::resolve_config(Experiment::predict, {{k, v}}); });
    EXPECT_NE(m.find(std::string("'") + k + "'"), std::string::npos) << k << "=" << v << ": " << m;
  }
}

TEST(Resolve, OneNoiseSource) {
  EXPECT_THROW(lindyn::resolve_config(Experiment::predict, {{"epsilon", "1"}, {"sigma2", "0.1"}}),
               lindyn::InvalidArgument);
  const auto c = lindyn::resolve_config(Experiment::predict, {{"sigma2", "0.1"}, {"n", "10"}});
  EXPECT_TRUE(c.epsilons.empty());
  EXPECT_EQ(c.noise().kind, lindyn::NoiseModel::Kind::gaussian);
  EXPECT_NEAR(c.epsilon_grid(10).at(0), 1.0, 1e-12);
  const auto l = lindyn::resolve_config(Experiment::predict, {{"laplace-b", "0.5"}, {"n", "2"}});
  EXPECT_NEAR(l.epsilon_grid(2).at(0), 1.0, 1e-12);
}

TEST(Resolve, GammaChoices) {
  EXPECT_EQ(lindyn::resolve_config(Experiment::predict, {{"gamma", "match"}}).decay,
            lindyn::DecayChoice::matched);
  EXPECT_EQ(lindyn::resolve_config(Experiment::predict, {{"gamma", "none"}}).decay,
            lindyn::DecayChoice::none);
  const auto c = lindyn::resolve_config(Experiment::predict, {{"gamma", "0.01"}});
  EXPECT_EQ(c.decay, lindyn::DecayChoice::value);
  EXPECT_EQ(c.gamma, 0.01);
}

TEST(Resolve, Defaults) {
  const auto rd = lindyn::resolve_config(Experiment::real_data, {{"dataset", LINDYN_FIXTURE_DIR "/tiny.csv"}});
  EXPECT_EQ(rd.hidden, 32u);
  EXPECT_EQ(rd.modes, (std::vector<std::size_t>{1, 4, 8, 16, 32}));
  const auto r = lindyn::resolve_config(Experiment::rates, {});
  EXPECT_EQ(r.epsilons.size(), 21u);
  EXPECT_THROW(lindyn::resolve_config(Experiment::real_data, {{"dataset", "/nonexistent.idx"}}),
               lindyn::IoError);
}
