#pragma once

// L-nearest-neighbour scoring: the score of a query is the mean label of its
// L closest training rows (Euclidean distance over all supplied columns,
// equal distances resolved by lowest row index).

#include <algorithm>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "fairsim/models/cv.hpp"
#include "fairsim/table.hpp"

namespace fairsim {

namespace detail {

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double t = a[k] - b[k];
    d += t * t;
  }
  return d;
}

/// Labels of the `count` nearest rows among `candidates`, nearest first.
inline std::vector<int> nearest_labels(const TrainingTable& table, std::span<const std::size_t> candidates,
                                       std::span<const double> query, std::size_t count) {
  std::vector<std::pair<double, std::size_t>> dist;
  dist.reserve(candidates.size());
  for (std::size_t r : candidates) dist.emplace_back(squared_distance(table.row(r), query), r);
  count = std::min(count, dist.size());
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(count), dist.end());
  std::vector<int> labels(count);
  for (std::size_t i = 0; i < count; ++i) labels[i] = table.labels[dist[i].second];
  return labels;
}

inline std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i] = i;
  return rows;
}

}  // namespace detail

inline double knn_score(const TrainingTable& train, std::span<const double> query, std::size_t neighbours) {
  if (neighbours == 0) throw std::invalid_argument("L must be positive");
  if (neighbours > train.rows()) throw std::invalid_argument("L exceeds the number of training rows");
  if (query.size() != train.width()) throw std::invalid_argument("feature width mismatch");
  const auto rows = detail::all_rows(train.rows());
  const auto labels = detail::nearest_labels(train, rows, query, neighbours);
  double sum = 0.0;
  for (int l : labels) sum += l;
  return sum / static_cast<double>(neighbours);
}

struct KnnModel {
  TrainingTable train;
  std::size_t neighbours = 1;

  double score(std::span<const double> query) const { return knn_score(train, query, neighbours); }
};

struct KnnTuneOptions {
  std::size_t min_l = 1;
  std::size_t max_l = 70;
  std::size_t folds = 10;
  std::uint64_t seed = 0;
};

/// Mean CV misclassification for every L in [min_l, max_l] (score >= 0.5
/// predicts success). One neighbour search per held-out row covers the
/// whole grid.
inline std::vector<double> knn_cv_errors(const TrainingTable& table, const KnnTuneOptions& options) {
  if (options.min_l == 0 || options.max_l < options.min_l) throw std::invalid_argument("bad L range");
  const FoldPlan plan = make_folds(table.rows(), options.folds, options.seed);
  const std::size_t grid = options.max_l - options.min_l + 1;
  std::vector<double> errors(grid, 0.0);
  for (std::size_t f = 0; f < plan.folds(); ++f) {
    const auto& train_rows = plan.train[f];
    if (train_rows.size() < options.max_l) {
      throw std::invalid_argument("L range exceeds the rows available in a CV fold");
    }
    std::vector<std::size_t> wrong(grid, 0);
    for (std::size_t r : plan.test[f]) {
      const auto labels = detail::nearest_labels(table, train_rows, table.row(r), options.max_l);
      std::size_t cumulative = 0;
      for (std::size_t l = 1; l <= options.max_l; ++l) {
        cumulative += static_cast<std::size_t>(labels[l - 1]);
        if (l < options.min_l) continue;
        const int predicted = 2 * cumulative >= l ? 1 : 0;
        wrong[l - options.min_l] += (predicted != table.labels[r]);
      }
    }
    for (std::size_t g = 0; g < grid; ++g) {
      errors[g] += static_cast<double>(wrong[g]) / static_cast<double>(plan.test[f].size());
    }
  }
  for (double& e : errors) e /= static_cast<double>(plan.folds());
  return errors;
}

inline std::pair<KnnModel, TuningReport> tune_knn(const TrainingTable& table, const KnnTuneOptions& options = {}) {
  table.check_fittable();
  KnnTuneOptions opts = options;
  // Keep the grid feasible for tiny tables (leave-one-out folds hold n-1 rows).
  const std::size_t folds = std::min(opts.folds, table.rows());
  const std::size_t smallest_train = table.rows() - (table.rows() + folds - 1) / folds;
  opts.max_l = std::min(opts.max_l, smallest_train);
  if (opts.max_l < opts.min_l) throw FitError("too few rows for the requested L range");

  const auto errors = knn_cv_errors(table, opts);
  const std::size_t best = argmin_first(errors);
  TuningReport report;
  report.parameter = "L";
  for (std::size_t l = opts.min_l; l <= opts.max_l; ++l) report.grid.push_back(static_cast<double>(l));
  report.errors = errors;
  report.chosen = report.grid[best];
  report.cv_error = errors[best];
  return {KnnModel{table, opts.min_l + best}, report};
}

}  // namespace fairsim
