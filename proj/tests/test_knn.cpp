#include <catch_amalgamated.hpp>

#include <set>
#include <vector>

#include "fairsim/models/knn.hpp"
#include "oracles.hpp"

using namespace fairsim;

namespace {

TrainingTable integer_table(RandomStream& rng, std::size_t rows, std::size_t width) {
  TrainingTable t;
  t.features.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(width));
  for (std::size_t i = 0; i < rows; ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < width; ++k) {
      const double v = static_cast<double>(rng.below(5));  // many equal distances
      t.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = v;
      s += v;
    }
    t.labels.push_back(rng.bernoulli(s > 2.0 * static_cast<double>(width) ? 0.8 : 0.2) ? 1 : 0);
  }
  for (std::size_t k = 0; k < width; ++k) {
    t.names.push_back("x" + std::to_string(k));
    t.blocks.push_back(FeatureBlock::X);
  }
  return t;
}

}  // namespace

TEST_CASE("three-row example") {
  TrainingTable t;
  t.features.resize(3, 1);
  t.features << 1.0, 2.0, 3.0;
  t.labels = {1, 0, 1};
  t.names = {"x"};
  t.blocks = {FeatureBlock::X};
  const std::vector<double> q{0.0};
  CHECK(knn_score(t, q, 1) == 1.0);
  CHECK(knn_score(t, q, 2) == 0.5);
  CHECK(knn_score(t, q, 3) == Catch::Approx(2.0 / 3.0));
}

TEST_CASE("L = 1 on a training row returns its label; L = n returns the global mean") {
  RandomStream rng(401);
  auto t = oracle::logistic_table(rng, 60, {0.0, 1.0, -1.0});
  for (std::size_t r = 0; r < t.rows(); ++r) CHECK(knn_score(t, t.row(r), 1) == t.labels[r]);
  const double mean = static_cast<double>(t.positives()) / static_cast<double>(t.rows());
  CHECK(knn_score(t, t.row(0), t.rows()) == Catch::Approx(mean));
}

TEST_CASE("invalid L and width are rejected") {
  RandomStream rng(402);
  auto t = oracle::logistic_table(rng, 10, {0.0, 1.0});
  CHECK_THROWS_AS(knn_score(t, t.row(0), 0), std::invalid_argument);
  CHECK_THROWS_AS(knn_score(t, t.row(0), 11), std::invalid_argument);
  CHECK_THROWS_AS(knn_score(t, std::vector<double>{1.0, 2.0}, 1), std::invalid_argument);
}

TEST_CASE("scores agree with a brute-force neighbour search") {
  RandomStream rng(403);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t rows = 5 + rng.below(40);
    const std::size_t width = 1 + rng.below(3);
    const auto t = integer_table(rng, rows, width);
    std::vector<double> q(width);
    for (auto& v : q) v = static_cast<double>(rng.below(5));
    const std::size_t L = 1 + rng.below(rows);
    const double got = knn_score(t, q, L);
    REQUIRE(got == Catch::Approx(oracle::brute_knn(t, q, L)).margin(1e-15));
    REQUIRE(got >= 0.0);
    REQUIRE(got <= 1.0);
  }
}

TEST_CASE("cross-validation errors agree with per-fold brute force") {
  RandomStream rng(404);
  for (int trial = 0; trial < 10; ++trial) {
    const auto t = integer_table(rng, 80, 2);
    KnnTuneOptions o;
    o.min_l = 2;
    o.max_l = 9;
    o.folds = 10;
    o.seed = 17 + static_cast<std::uint64_t>(trial);
    const auto errors = knn_cv_errors(t, o);
    const auto plan = make_folds(t.rows(), o.folds, o.seed);
    for (std::size_t L = o.min_l; L <= o.max_l; ++L) {
      double total = 0.0;
      for (std::size_t f = 0; f < plan.folds(); ++f) {
        const auto train = t.subset(plan.train[f]);
        std::size_t wrong = 0;
        for (std::size_t r : plan.test[f]) {
          const auto row = t.row(r);
          const double s = oracle::brute_knn(train, {row.begin(), row.end()}, L);
          wrong += ((s >= 0.5 ? 1 : 0) != t.labels[r]);
        }
        total += static_cast<double>(wrong) / static_cast<double>(plan.test[f].size());
      }
      CHECK(errors[L - o.min_l] == Catch::Approx(total / static_cast<double>(plan.folds())));
    }
  }
}

TEST_CASE("fold plans partition the rows") {
  for (std::size_t rows : {3u, 10u, 57u}) {
    const auto plan = make_folds(rows, 10, 5);
    CHECK(plan.folds() == std::min<std::size_t>(10, rows));
    std::multiset<std::size_t> seen;
    for (std::size_t f = 0; f < plan.folds(); ++f) {
      CHECK(plan.train[f].size() + plan.test[f].size() == rows);
      seen.insert(plan.test[f].begin(), plan.test[f].end());
    }
    CHECK(seen.size() == rows);
    CHECK(std::set<std::size_t>(seen.begin(), seen.end()).size() == rows);
  }
}

TEST_CASE("tuning picks the smallest L among ties and is deterministic") {
  TrainingTable t;
  t.features.resize(100, 1);
  RandomStream rng(405);
  for (int i = 0; i < 100; ++i) {
    const int label = i % 2;
    t.features(i, 0) = 10.0 * label + 0.01 * rng.gaussian();
    t.labels.push_back(label);
  }
  t.names = {"x"};
  t.blocks = {FeatureBlock::X};
  KnnTuneOptions o;
  o.min_l = 1;
  o.max_l = 15;
  const auto [model, report] = tune_knn(t, o);
  CHECK(model.neighbours == 1);
  CHECK(report.cv_error == 0.0);
  const auto again = tune_knn(t, o);
  CHECK(again.second.errors == report.errors);
}

TEST_CASE("tiny tables fall back to leave-one-out and clamp the grid") {
  RandomStream rng(406);
  auto t = oracle::logistic_table(rng, 8, {0.0, 2.0});
  t.labels = {1, 0, 1, 0, 1, 0, 1, 0};
  KnnTuneOptions o;
  o.max_l = 70;
  const auto [model, report] = tune_knn(t, o);
  CHECK(report.grid.back() == 7.0);
  CHECK(model.neighbours >= 1);
  o.min_l = 50;
  CHECK_THROWS_AS(tune_knn(t, o), FitError);
}
