#include <catch_amalgamated.hpp>

#include "fairsim/config.hpp"

using namespace fairsim;

TEST_CASE("an empty config yields the paper preset") {
  const auto c = parse_config("");
  CHECK(c.preset == Preset::Paper);
  CHECK(c.plan.n_train == 5000);
  CHECK(c.plan.n_test == 500);
  CHECK(c.plan.replicates == 100);
  CHECK(c.plan.scenarios.size() == 3);
  CHECK(c.plan.algorithms.size() == 5);
}

TEST_CASE("the desk preset and its override") {
  const auto c = parse_config("preset = desk\n");
  CHECK(c.plan.n_train == 1000);
  CHECK(c.plan.n_test == 100);
  CHECK(c.plan.replicates == 20);
  const auto o = parse_config("preset = desk\n", Preset::Paper);
  CHECK(o.plan.n_train == 5000);
}

TEST_CASE("keys, lists and comments") {
  const auto c = parse_config(
      "# a comment\n"
      "scenarios = threshold_binary, self_censorship   # trailing\n"
      "alphas = 0.2,0.8\n"
      "algorithms = knn\n"
      "views = anon\n"
      "n_train = 300\n"
      "replicates = 3\n"
      "master_seed = 99\n"
      "knn_max_l = 20\n"
      "mlp_decays = 0, 0.5\n"
      "cv_folds = 5\n"
      "self_censorship_test_features = depreciated\n"
      "out = somewhere\n");
  CHECK(c.plan.scenarios == std::vector<Scenario>{Scenario::ThresholdBinary, Scenario::SelfCensorship});
  CHECK(c.plan.alphas == std::vector<double>{0.2, 0.8});
  CHECK(c.plan.algorithms == std::vector<Algorithm>{Algorithm::Knn});
  CHECK(c.plan.views == std::vector<View>{View::Anonymous});
  CHECK(c.plan.n_train == 300);
  CHECK(c.plan.n_test == 30);
  CHECK(c.plan.replicates == 3);
  CHECK(c.plan.master_seed == 99);
  CHECK(c.plan.fit.knn.max_l == 20);
  CHECK(c.plan.fit.mlp.decays == std::vector<double>{0.0, 0.5});
  CHECK(c.plan.fit.knn.folds == 5);
  CHECK(c.plan.fit.mlp.folds == 5);
  CHECK(c.plan.test_features == TestFeatures::Depreciated);
  CHECK(c.out == "somewhere");
}

TEST_CASE("an explicit n_test is kept") {
  CHECK(parse_config("n_train = 300\nn_test = 7\n").plan.n_test == 7);
}

TEST_CASE("malformed configs are rejected") {
  CHECK_THROWS_AS(parse_config("bogus = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("n_train = 1\nn_train = 2\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("n_train\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("n_train =\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("n_train = ten\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("alphas = 0.2, 1.5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("scenarios = nowhere\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("preset = huge\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("bias_index = 1\nbias_param = 0.2\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("svm_cost = 0\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("knn_min_l = 5\nknn_max_l = 2\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("cv_folds = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("mu_levels = -1\n"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/fairsim.cfg"), ConfigError);
}

TEST_CASE("errors name the offending line") {
  try {
    parse_config("n_train = 300\n\nunknown_thing = 3\n");
    FAIL("expected an error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("generate selects one world") {
  auto c = parse_config("scenario = threshold_continuous\nalpha = 0.2\nbias_index = 1\nn_train = 50\n");
  const auto sc = c.generate_config();
  CHECK(sc.scenario == Scenario::ThresholdContinuous);
  CHECK(sc.alpha == 0.2);
  CHECK(sc.n_train == 50);
  CHECK(sc.bias_param == Catch::Approx(threshold_grid(5).continuous[1]));
  CHECK(parse_config("bias_param = 0.3\n").generate_config().bias_param == 0.3);
  CHECK_THROWS_AS(parse_config("bias_index = 9\n").generate_config(), ConfigError);
  CHECK_THROWS_AS(parse_config("scenario = self_censorship\nbias_param = 0\n").generate_config(), ConfigError);
}
