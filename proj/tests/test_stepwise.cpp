#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <vector>

#include "fairsim/models/stepwise.hpp"
#include "oracles.hpp"

using namespace fairsim;

namespace {

/// Test-side subset enumeration: refits every subset through the public
/// design-level fitter and scores it with its own AIC formula.
FeatureMask enumerate_best(const TrainingTable& t) {
  const std::size_t p = t.width();
  FeatureMask best_mask(p, false);
  double best = std::numeric_limits<double>::infinity();
  for (unsigned bits = 0; bits < (1U << p); ++bits) {
    std::vector<Eigen::Index> cols;
    for (std::size_t f = 0; f < p; ++f) {
      if ((bits >> f) & 1U) cols.push_back(static_cast<Eigen::Index>(f));
    }
    Matrix design(t.features.rows(), static_cast<Eigen::Index>(cols.size()) + 1);
    design.col(0).setOnes();
    for (std::size_t c = 0; c < cols.size(); ++c) design.col(static_cast<Eigen::Index>(c) + 1) = t.features.col(cols[c]);
    const auto fit = fit_logistic_design(design, t.labels);
    std::vector<double> beta(fit.beta.data(), fit.beta.data() + fit.beta.size());
    TrainingTable sub;
    sub.features = design.rightCols(design.cols() - 1);
    sub.labels = t.labels;
    const double aic = 2.0 * static_cast<double>(cols.size() + 1) - 2.0 * oracle::bernoulli_loglik(sub, beta);
    if (aic < best - 1e-9) {
      best = aic;
      best_mask.assign(p, false);
      for (auto c : cols) best_mask[static_cast<std::size_t>(c)] = true;
    }
  }
  return best_mask;
}

}  // namespace

TEST_CASE("library exhaustive search agrees with a test-side enumeration") {
  RandomStream rng(301);
  for (int trial = 0; trial < 20; ++trial) {
    const auto t = oracle::logistic_table(rng, 300, {0.0, rng.gaussian() * 0.3, rng.gaussian() * 0.3, 0.0, 0.5});
    CHECK(exhaustive_aic_oracle(t) == enumerate_best(t));
  }
}

TEST_CASE("stepwise matches the exhaustive optimum on small problems") {
  RandomStream rng(302);
  int agree = 0;
  const int trials = 100;
  for (int trial = 0; trial < trials; ++trial) {
    const auto t = oracle::logistic_table(rng, 300, {0.0, rng.gaussian() * 0.2, rng.gaussian() * 0.2, rng.gaussian() * 0.2});
    const auto sel = stepwise_aic(t);
    agree += sel.mask == exhaustive_aic_oracle(t);
  }
  CHECK(agree >= 95);
}

TEST_CASE("pure-noise features usually leave the intercept-only model") {
  RandomStream rng(303);
  int empty = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto t = oracle::logistic_table(rng, 2000, {0.0, 0.0, 0.0, 0.0});
    const auto sel = stepwise_aic(t);
    bool any = false;
    for (bool b : sel.mask) any = any || b;
    empty += !any;
  }
  CHECK(empty > 50);
}

TEST_CASE("a strong predictor is always retained") {
  RandomStream rng(304);
  for (int trial = 0; trial < 50; ++trial) {
    const auto t = oracle::logistic_table(rng, 500, {0.0, 3.0, 0.0, 0.0});
    const auto sel = stepwise_aic(t);
    CHECK(sel.mask[0]);
  }
}

TEST_CASE("the selection is internally consistent") {
  RandomStream rng(305);
  const auto t = oracle::logistic_table(rng, 800, {0.1, 0.8, 0.0, -0.6, 0.0, 0.05});
  const auto sel = stepwise_aic(t);
  CHECK(sel.aic == Catch::Approx(aic_of(sel.fit)));
  std::size_t kept = 0;
  for (bool b : sel.mask) kept += b;
  CHECK(static_cast<std::size_t>(sel.fit.beta.size()) == kept + 1);
  CHECK(sel.fit.terms.size() == kept + 1);
  // Never worse than the full model it started from.
  const auto full = fit_logistic(t);
  CHECK(sel.aic <= aic_of(full) + 1e-9);
  CHECK(sel.mask[0]);
  CHECK(sel.mask[2]);
}

TEST_CASE("a table without features selects the empty mask") {
  TrainingTable t;
  t.features.resize(6, 0);
  t.labels = {1, 0, 0, 1, 0, 0};
  const auto sel = stepwise_aic(t);
  CHECK(sel.mask.empty());
  CHECK(sel.fit.beta.size() == 1);
  CHECK(sel.fit.beta[0] == Catch::Approx(std::log(2.0 / 4.0)));
  CHECK(exhaustive_aic_oracle(t).empty());
}
