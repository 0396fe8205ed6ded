#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "fairsim/rng.hpp"

namespace fairsim {

/// Row-level k-fold partition. Rows are shuffled by the fold stream and dealt
/// round-robin, so fold sizes differ by at most one. With fewer rows than
/// folds the partition degrades to leave-one-out.
struct FoldPlan {
  std::vector<std::vector<std::size_t>> test;
  std::vector<std::vector<std::size_t>> train;

  std::size_t folds() const { return test.size(); }
};

inline FoldPlan make_folds(std::size_t rows, std::size_t folds, std::uint64_t seed) {
  folds = std::max<std::size_t>(1, std::min(folds, rows));
  std::vector<std::size_t> order(rows);
  std::iota(order.begin(), order.end(), 0);
  RandomStream rng(seed, {stream::kFolds});
  rng.shuffle(std::span<std::size_t>(order));

  std::vector<std::size_t> fold_of(rows);
  for (std::size_t r = 0; r < rows; ++r) fold_of[order[r]] = r % folds;

  FoldPlan plan;
  plan.test.resize(folds);
  plan.train.resize(folds);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t f = 0; f < folds; ++f) {
      (fold_of[i] == f ? plan.test[f] : plan.train[f]).push_back(i);
    }
  }
  return plan;
}

/// Hyperparameter search outcome, kept with the fitted model.
struct TuningReport {
  std::string parameter;         // "L", "size", ...
  double chosen = 0.0;
  double cv_error = 0.0;
  std::vector<double> grid;      // candidate values
  std::vector<double> errors;    // mean CV misclassification per candidate
};

/// Index of the smallest error; ties go to the earliest (smallest) candidate.
inline std::size_t argmin_first(const std::vector<double>& errors) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < errors.size(); ++i) {
    if (errors[i] < errors[best]) best = i;
  }
  return best;
}

}  // namespace fairsim
