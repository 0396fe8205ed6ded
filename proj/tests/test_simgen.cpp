#include <catch_amalgamated.hpp>

#include <cmath>
#include <numeric>
#include <vector>

#include "fairsim/simgen.hpp"
#include "fairsim/stats.hpp"
#include "oracles.hpp"

using namespace fairsim;

namespace {

ScenarioConfig small_config(Scenario s, double bias, std::size_t n_train = 200, std::uint64_t seed = 5) {
  ScenarioConfig c;
  c.scenario = s;
  c.alpha = 0.5;
  c.bias_param = bias;
  c.n_train = n_train;
  c.n_test = 20;
  c.master_seed = seed;
  return c;
}

const std::vector<double> kXbar{-0.15, 0.36, -1.10, 0.28, -0.48};
const std::vector<double> kYbar{0.33, -0.52, 0.56, 0.32, -0.32};

}  // namespace

TEST_CASE("worked ranking example: perfect ranks") {
  CHECK(perfect_ranking(kXbar) == std::vector<int>{3, 1, 5, 2, 4});
}

TEST_CASE("worked ranking example: censored ranks per threshold") {
  CHECK(censored_ranking(kXbar, kYbar, -0.5) == std::vector<int>{2, 5, 4, 1, 3});
  CHECK(censored_ranking(kXbar, kYbar, 0.0) == std::vector<int>{2, 5, 3, 1, 4});
  CHECK(censored_ranking(kXbar, kYbar, 0.5) == std::vector<int>{2, 5, 1, 3, 4});
  CHECK(censored_ranking(kXbar, kYbar, 1.0) == std::vector<int>{2, 5, 1, 3, 4});
}

TEST_CASE("ranking edge cases") {
  CHECK(perfect_ranking(std::vector<double>{0.7}) == std::vector<int>{1});
  CHECK_THROWS_AS(perfect_ranking(std::vector<double>{}), std::invalid_argument);
  CHECK_THROWS_AS(censored_ranking(std::vector<double>{}, std::vector<double>{}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(censored_ranking(kXbar, std::vector<double>{1.0}, 0.0), std::invalid_argument);
  // Threshold below every mean(Y): biased equals perfect.
  CHECK(censored_ranking(kXbar, kYbar, -10.0) == perfect_ranking(kXbar));
  // Threshold above every mean(Y): ordering by descending mean(Y).
  CHECK(censored_ranking(kXbar, kYbar, 10.0) == oracle::descending_ranks(kYbar));
  // Equal means keep index order.
  CHECK(perfect_ranking(std::vector<double>{1.0, 2.0, 1.0}) == std::vector<int>{2, 1, 3});
}

TEST_CASE("perfect ranking agrees with the counting oracle on random inputs") {
  RandomStream r(101);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + r.below(9);
    std::vector<double> v(n);
    for (auto& x : v) x = static_cast<double>(r.below(4));  // frequent ties
    const auto got = perfect_ranking(v);
    REQUIRE(oracle::is_permutation_1n(got));
    REQUIRE(got == oracle::descending_ranks(v));
  }
}

TEST_CASE("censored ranking agrees with the counting oracle on random binary inputs") {
  RandomStream r(102);
  const auto grid = threshold_grid(5);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t n = 2 + r.below(7);
    std::vector<double> xbar(n), ybar(n);
    std::vector<std::uint64_t> keys(n);
    for (std::size_t j = 0; j < n; ++j) {
      xbar[j] = r.gaussian();
      ybar[j] = static_cast<double>(r.below(6)) / 5.0;
      keys[j] = r.below(3);  // ties among keys too
    }
    const double s = grid.binary[r.below(grid.binary.size())];
    const auto got = censored_ranking(xbar, ybar, s, keys);
    REQUIRE(oracle::is_permutation_1n(got));
    REQUIRE(got == oracle::censored_ranks(xbar, ybar, s, keys));
  }
}

TEST_CASE("raising the threshold never shrinks the censored set") {
  RandomStream r(103);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> xbar(5), ybar(5);
    for (auto& x : xbar) x = r.gaussian();
    for (auto& y : ybar) y = r.gaussian() / std::sqrt(5.0);
    std::size_t previous = 0;
    for (double s = -2.0; s <= 2.0; s += 0.1) {
      const auto ranks = censored_ranking(xbar, ybar, s);
      std::size_t censored = 0;
      for (double y : ybar) censored += y <= s;
      // Censored candidates occupy the bottom ranks.
      for (std::size_t j = 0; j < 5; ++j) {
        if (ybar[j] <= s) REQUIRE(ranks[j] > static_cast<int>(5 - censored));
      }
      REQUIRE(censored >= previous);
      previous = censored;
    }
  }
}

TEST_CASE("proxy constructions") {
  CHECK(derive_z_binary(1, 0, 1) == 1);
  CHECK(derive_z_binary(0, 1, 1) == 0);
  CHECK(derive_z_binary(1, 0, 0) == 0);
  CHECK(derive_z_binary(0, 1, 0) == 1);
  CHECK(derive_z_continuous(1.0, 0.0, 0.0) == 0.0);
  CHECK(derive_z_continuous(1.0, 0.5, 0.0) == 0.5);
  CHECK(derive_z_continuous(2.0, 0.0, 0.6) == Catch::Approx(1.5));
  CHECK_THROWS_AS(derive_z_continuous(1.0, 0.0, 1.0), std::domain_error);
}

TEST_CASE("self-censored features depreciate only Y = 0 values") {
  CHECK(self_censored_features(1.0, 1.0, 0.8) == 1.0);
  CHECK(self_censored_features(1.0, 0.0, 0.8) == Catch::Approx(0.2));
  CHECK(self_censored_features(-0.5, 0.0, 2.0) == Catch::Approx(-2.5));
}

TEST_CASE("threshold grid matches binomial and gaussian quantiles") {
  const auto g = threshold_grid(5);
  REQUIRE(g.binary.size() == 5);
  const std::vector<double> counts{1, 6, 16, 26, 31};
  for (std::size_t c = 0; c < 5; ++c) {
    CHECK(g.binary[c] == Catch::Approx(c / 5.0));
    CHECK(g.rejection_probs[c] == Catch::Approx(counts[c] / 32.0).epsilon(1e-12));
    // P(N(0, 1/5) <= t) reproduces the same probability.
    CHECK(0.5 * std::erfc(-g.continuous[c] * std::sqrt(5.0) / std::sqrt(2.0)) ==
          Catch::Approx(counts[c] / 32.0).epsilon(1e-9));
  }
  CHECK(std::abs(g.continuous[2]) < 1e-12);
  CHECK_THROWS(threshold_grid(1));
}

TEST_CASE("base draws have the documented marginals") {
  auto c = small_config(Scenario::ThresholdBinary, 0.0, 4000);
  const auto b = gen_base(c, 4000, stream::kTrain);
  const auto y = b.y.flat();
  const auto x = b.x.flat();
  CHECK(std::abs(stats::mean(y) - 0.5) < 0.01);
  CHECK(std::abs(stats::variance(y) - 0.25) < 0.005);
  CHECK(std::abs(stats::mean(x)) < 0.01);
  CHECK(std::abs(stats::variance(x) - 1.0) < 0.02);
  for (double v : y) REQUIRE((v == 0.0 || v == 1.0));
  CHECK(b.tie_keys.size() == 4000 * 5);
}

TEST_CASE("binary proxy has the target correlation and variance") {
  for (double alpha : {0.2, 0.5, 0.8}) {
    auto c = small_config(Scenario::ThresholdBinary, 0.0, 4000);
    c.alpha = alpha;
    const auto b = gen_base(c, 4000, stream::kTrain);
    std::vector<double> y, z;
    for (std::size_t i = 0; i < b.y.flat().size(); ++i) {
      y.push_back(b.y.flat()[i]);
      z.push_back(derive_z_binary(static_cast<int>(b.y.flat()[i]), static_cast<int>(b.aux.flat()[i]),
                                  static_cast<int>(b.mix.flat()[i])));
    }
    CHECK(std::abs(stats::pearson(y, z) - alpha) < 0.01);
    CHECK(std::abs(stats::variance(z) - 0.25) < 0.005);
  }
}

TEST_CASE("continuous proxy has the target correlation") {
  for (double alpha : {0.2, 0.5, 0.8}) {
    auto c = small_config(Scenario::ThresholdContinuous, 0.0, 4000);
    c.alpha = alpha;
    const auto b = gen_base(c, 4000, stream::kTrain);
    std::vector<double> y, z;
    for (std::size_t i = 0; i < b.y.flat().size(); ++i) {
      y.push_back(b.y.flat()[i]);
      z.push_back(derive_z_continuous(b.y.flat()[i], b.aux.flat()[i], alpha));
    }
    CHECK(std::abs(stats::pearson(y, z) - alpha) < 0.01);
    CHECK(b.mix.empty());
  }
}

TEST_CASE("empirical rejection probabilities match the grid") {
  const auto g = threshold_grid(5);
  for (Scenario s : {Scenario::ThresholdBinary, Scenario::ThresholdContinuous}) {
    auto c = small_config(s, 0.0, 4000);
    const auto b = gen_base(c, 4000, stream::kTrain);
    const auto& thresholds = s == Scenario::ThresholdBinary ? g.binary : g.continuous;
    for (std::size_t level = 0; level < 5; ++level) {
      std::size_t censored = 0, total = 0;
      for (std::size_t i = 0; i < b.methods(); ++i) {
        for (std::size_t j = 0; j < 5; ++j, ++total) {
          censored += block_mean(b.y.profile(i, j)) <= thresholds[level] + 1e-12;
        }
      }
      CHECK(std::abs(static_cast<double>(censored) / total - g.rejection_probs[level]) < 0.01);
    }
  }
}

TEST_CASE("gen_base is deterministic and stream-separated") {
  auto c = small_config(Scenario::ThresholdContinuous, 0.0);
  const auto a = gen_base(c, 50, stream::kTrain);
  const auto b = gen_base(c, 50, stream::kTrain);
  const auto t = gen_base(c, 50, stream::kTest);
  CHECK(a.x == b.x);
  CHECK(a.y == b.y);
  CHECK(a.aux == b.aux);
  CHECK(a.tie_keys == b.tie_keys);
  CHECK_FALSE(a.x == t.x);
  c.master_seed = 6;
  CHECK_FALSE(gen_base(c, 50, stream::kTrain).x == a.x);
  CHECK_THROWS(gen_base(c, 0, stream::kTrain));
}

TEST_CASE("gen_base golden values are frozen") {
  ScenarioConfig c;
  c.scenario = Scenario::ThresholdContinuous;
  c.alpha = 0.5;
  c.master_seed = 20240901;
  const auto b = gen_base(c, 2, stream::kTrain);
  // Regression values for the frozen seed-to-value mapping.
  CHECK(b.x(0, 0, 0) == Catch::Approx(-0.022554251113591283).epsilon(1e-14));
  CHECK(b.x(1, 4, 4) == Catch::Approx(-1.5298066952386284).epsilon(1e-14));
  CHECK(b.y(0, 0, 0) == Catch::Approx(-0.98218139411525451).epsilon(1e-14));
  CHECK(b.tie_keys[0] == 15570879144139076354ULL);
}

TEST_CASE("every method has exactly one winner per label source") {
  for (Scenario s : {Scenario::ThresholdBinary, Scenario::ThresholdContinuous, Scenario::SelfCensorship}) {
    const auto bundle = simulate(small_config(s, s == Scenario::SelfCensorship ? 0.8 : 0.4));
    for (const auto& m : bundle.train_methods) {
      REQUIRE(oracle::is_permutation_1n(m.rank_perfect));
      REQUIRE(oracle::is_permutation_1n(m.rank_biased));
      REQUIRE(std::accumulate(m.success_perfect.begin(), m.success_perfect.end(), 0) == 1);
      REQUIRE(std::accumulate(m.success_biased.begin(), m.success_biased.end(), 0) == 1);
    }
    for (View v : {View::Full, View::Anonymous}) {
      for (LabelSource l : {LabelSource::Perfect, LabelSource::Biased}) {
        const auto& t = bundle.table(v, l);
        CHECK(t.rows() == 200 * 5);
        CHECK(t.positives() == 200);
        CHECK(t.width() == (v == View::Full ? 15u : 10u));
        CHECK(t.names.size() == t.width());
      }
    }
  }
}

TEST_CASE("a threshold below every mean leaves labels unbiased") {
  const auto bundle = simulate(small_config(Scenario::ThresholdContinuous, -100.0));
  CHECK(bundle.table(View::Full, LabelSource::Perfect).labels == bundle.table(View::Full, LabelSource::Biased).labels);
}

TEST_CASE("a vanishing depreciation leaves labels unbiased") {
  const auto bundle = simulate(small_config(Scenario::SelfCensorship, 1e-12));
  CHECK(bundle.table(View::Full, LabelSource::Perfect).labels == bundle.table(View::Full, LabelSource::Biased).labels);
}

TEST_CASE("bias levels share the same base draws") {
  const auto c0 = small_config(Scenario::ThresholdBinary, 0.2);
  auto c1 = c0;
  c1.bias_param = 0.8;
  const auto world = gen_world(c0);
  const auto a = assemble_dataset(c0, world.train, world.test);
  const auto b = assemble_dataset(c1, world.train, world.test);
  CHECK(a.table(View::Full, LabelSource::Biased).features == b.table(View::Full, LabelSource::Biased).features);
  CHECK(a.table(View::Full, LabelSource::Perfect).labels == b.table(View::Full, LabelSource::Perfect).labels);
  CHECK(a.table(View::Full, LabelSource::Biased).labels != b.table(View::Full, LabelSource::Biased).labels);
  // Assembling twice from the same bases gives identical bundles.
  const auto a2 = assemble_dataset(c0, world.train, world.test);
  CHECK(a.table(View::Anonymous, LabelSource::Biased).labels == a2.table(View::Anonymous, LabelSource::Biased).labels);
  CHECK(a.test_features(3, View::Full) == a2.test_features(3, View::Full));
}

TEST_CASE("views hold the documented blocks") {
  const auto bundle = simulate(small_config(Scenario::ThresholdContinuous, 0.0));
  const auto& full = bundle.table(View::Full, LabelSource::Perfect);
  const auto& anon = bundle.table(View::Anonymous, LabelSource::Perfect);
  const auto& m = bundle.train_methods[0];
  for (std::size_t f = 0; f < 5; ++f) {
    CHECK(full.features(1, static_cast<Eigen::Index>(f)) == m.x[5 + f]);
    CHECK(full.features(1, static_cast<Eigen::Index>(5 + f)) == m.y[5 + f]);
    CHECK(full.features(1, static_cast<Eigen::Index>(10 + f)) == m.z[5 + f]);
    CHECK(anon.features(1, static_cast<Eigen::Index>(f)) == m.x[5 + f]);
    CHECK(anon.features(1, static_cast<Eigen::Index>(5 + f)) == m.z[5 + f]);
  }
  CHECK(full.names.front() == "x1");
  CHECK(full.names[5] == "y1");
  CHECK(anon.names[5] == "z1");
  for (auto b : anon.blocks) CHECK(b != FeatureBlock::Y);
}

TEST_CASE("self-censorship trains biased models on depreciated scores") {
  auto c = small_config(Scenario::SelfCensorship, 0.8);
  const auto bundle = simulate(c);
  const auto& biased = bundle.table(View::Full, LabelSource::Biased);
  const auto& perfect = bundle.table(View::Full, LabelSource::Perfect);
  const auto& m = bundle.train_methods[2];
  for (std::size_t f = 0; f < 5; ++f) {
    const auto row = static_cast<Eigen::Index>(2 * 5 + 1);
    CHECK(biased.features(row, static_cast<Eigen::Index>(f)) ==
          Catch::Approx(m.x[5 + f] - 0.8 * (1.0 - m.y[5 + f])));
    CHECK(perfect.features(row, static_cast<Eigen::Index>(f)) == m.x[5 + f]);
  }
  // Test features are observed scores unless the knob asks for depreciated ones.
  const auto observed = bundle.test_features(0, View::Full);
  CHECK(observed(0, 0) == bundle.test_methods[0].x[0]);
  c.test_features = TestFeatures::Depreciated;
  const auto dep = simulate(c);
  CHECK(dep.test_features(0, View::Full)(0, 0) == Catch::Approx(dep.test_methods[0].x_tilde[0]));
}

TEST_CASE("self-censorship biased ranking follows depreciated means") {
  const auto bundle = simulate(small_config(Scenario::SelfCensorship, 1.2));
  for (const auto& m : bundle.train_methods) {
    std::vector<double> xt(5);
    for (std::size_t j = 0; j < 5; ++j) {
      double s = 0.0;
      for (std::size_t f = 0; f < 5; ++f) s += m.x[j * 5 + f] - 1.2 * (1.0 - m.y[j * 5 + f]);
      xt[j] = s / 5.0;
    }
    REQUIRE(m.rank_biased == oracle::descending_ranks(xt));
  }
}

TEST_CASE("configuration and shape errors") {
  auto c = small_config(Scenario::SelfCensorship, 0.0);
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small_config(Scenario::ThresholdBinary, 0.0);
  c.alpha = 1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small_config(Scenario::ThresholdBinary, 0.0);
  const auto world = gen_world(c);
  auto other = c;
  other.n_features = 4;
  CHECK_THROWS_AS(assemble_dataset(other, world.train, world.test), std::invalid_argument);
  other = c;
  other.scenario = Scenario::ThresholdContinuous;
  CHECK_THROWS_AS(assemble_dataset(other, world.train, world.test), std::invalid_argument);
  other = c;
  other.n_train = 10;
  CHECK_THROWS_AS(assemble_dataset(other, world.train, world.test), std::invalid_argument);
}

TEST_CASE("simulation is reproducible end to end") {
  const auto c = small_config(Scenario::ThresholdBinary, 0.4);
  const auto a = simulate(c);
  const auto b = simulate(c);
  for (View v : {View::Full, View::Anonymous}) {
    for (LabelSource l : {LabelSource::Perfect, LabelSource::Biased}) {
      CHECK(a.table(v, l).features == b.table(v, l).features);
      CHECK(a.table(v, l).labels == b.table(v, l).labels);
    }
  }
}
