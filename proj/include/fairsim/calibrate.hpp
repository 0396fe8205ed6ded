#pragma once

// Hyperparameter-range calibration on perfect-label data. Each run draws
// `matrices` independent worlds per scenario (alphas cycle across worlds)
// and tunes on the full-view perfect-label table.
//
//   knn         L in [1, 5]; whenever the largest L wins, the upper bound
//               doubles and the search restarts.
//   mlp         size in [1, 3] x decay in {0, 0.1, ..., 0.8}; the size bound
//               doubles whenever the largest size wins.
//   svm-kernel  10-fold CV error of linear, polynomial (2, 3), radial and
//               sigmoid kernels; the lowest error wins (ties: listed order).

#include <cstdint>
#include <functional>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "fairsim/common.hpp"
#include "fairsim/experiment.hpp"
#include "fairsim/models/cv.hpp"
#include "fairsim/models/knn.hpp"
#include "fairsim/models/mlp.hpp"
#include "fairsim/models/svm.hpp"
#include "fairsim/rng.hpp"
#include "fairsim/simgen.hpp"

namespace fairsim {

enum class CalibrationKind : std::uint8_t { Knn, Mlp, SvmKernel };

inline CalibrationKind parse_calibration_kind(std::string_view s) {
  if (s == "knn") return CalibrationKind::Knn;
  if (s == "mlp") return CalibrationKind::Mlp;
  if (s == "svm-kernel") return CalibrationKind::SvmKernel;
  throw ConfigError("unknown calibration kind '" + std::string(s) + "' (expected knn, mlp or svm-kernel)");
}

struct CalibrationSettings {
  std::size_t matrices = 100;
  std::size_t n_train = 200;
  std::size_t folds = 10;
  std::size_t max_bound = 512;  // stop enlarging beyond this
};

/// One tuned world: the winning value of each tuned parameter.
struct CalibrationRow {
  Scenario scenario = Scenario::ThresholdBinary;
  double alpha = 0.0;
  std::size_t matrix = 0;
  std::map<std::string, std::string> values;
};

struct CalibrationReport {
  CalibrationKind kind = CalibrationKind::Knn;
  std::vector<std::string> columns;
  std::vector<CalibrationRow> rows;
};

inline TrainingTable calibration_table(const ExperimentPlan& plan, const CalibrationSettings& settings,
                                       Scenario scenario, std::size_t matrix) {
  ScenarioConfig c;
  c.scenario = scenario;
  c.alpha = plan.alphas[matrix % plan.alphas.size()];
  c.bias_param = scenario == Scenario::SelfCensorship ? plan.mu_levels.front() : 0.0;
  c.n_train = settings.n_train;
  c.n_test = 1;
  c.n_candidates = plan.n_candidates;
  c.n_features = plan.n_features;
  c.master_seed = derive_seed(plan.master_seed, {stream::kCalibration, static_cast<std::uint64_t>(scenario), matrix});
  const auto bundle = simulate(c);
  return bundle.table(View::Full, LabelSource::Perfect);
}

inline std::size_t calibrate_knn_once(const TrainingTable& table, std::size_t folds, std::uint64_t seed,
                                      std::size_t max_bound) {
  KnnTuneOptions o;
  o.min_l = 1;
  o.max_l = 5;
  o.folds = folds;
  o.seed = seed;
  for (;;) {
    const auto [model, report] = tune_knn(table, o);
    const auto best = static_cast<std::size_t>(report.chosen);
    const auto top = static_cast<std::size_t>(report.grid.back());
    if (best < top || top < o.max_l || o.max_l >= max_bound) return best;
    o.max_l *= 2;
  }
}

inline std::pair<std::size_t, double> calibrate_mlp_once(const TrainingTable& table, std::size_t folds,
                                                         std::uint64_t seed, std::size_t max_bound) {
  MlpTuneOptions o;
  o.min_size = 1;
  o.max_size = 3;
  o.decays = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
  o.folds = folds;
  o.seed = seed;
  for (;;) {
    const auto tuning = tune_mlp(table, o);
    const auto best = static_cast<std::size_t>(tuning.size_report.chosen);
    if (best < o.max_size || o.max_size >= max_bound) return {best, tuning.chosen_decay};
    o.max_size *= 2;
  }
}

inline std::vector<SvmKernel> calibration_kernels(std::size_t width) {
  const double gamma = 1.0 / static_cast<double>(width);
  return {LinearKernel{}, PolynomialKernel{gamma, 0.0, 2}, PolynomialKernel{gamma, 0.0, 3}, RbfKernel{gamma},
          SigmoidKernel{gamma, 0.0}};
}

/// Mean k-fold misclassification of a kernel SVM (decision >= 0 predicts 1).
inline double svm_kernel_cv_error(const TrainingTable& table, const SvmKernel& kernel, std::size_t folds,
                                  std::uint64_t seed, const SmoOptions& options = {}) {
  const FoldPlan plan = make_folds(table.rows(), folds, seed);
  double total = 0.0;
  for (std::size_t f = 0; f < plan.folds(); ++f) {
    const TrainingTable train = table.subset(plan.train[f]);
    const TrainingTable held = table.subset(plan.test[f]);
    std::size_t wrong = 0;
    try {
      const KernelSvmModel model = fit_svm_kernel(train.features, train.labels, kernel, options);
      for (std::size_t r = 0; r < held.rows(); ++r) {
        wrong += ((model.decision(held.row(r)) >= 0.0 ? 1 : 0) != held.labels[r]);
      }
    } catch (const FitError&) {
      wrong = held.rows();
    }
    total += static_cast<double>(wrong) / static_cast<double>(held.rows());
  }
  return total / static_cast<double>(plan.folds());
}

using CalibrationProgress = std::function<void(std::size_t done, std::size_t total)>;

inline CalibrationReport calibrate(CalibrationKind kind, const ExperimentPlan& plan,
                                   const CalibrationSettings& settings, const CalibrationProgress& progress = {}) {
  CalibrationReport report;
  report.kind = kind;
  switch (kind) {
    case CalibrationKind::Knn: report.columns = {"L"}; break;
    case CalibrationKind::Mlp: report.columns = {"size", "decay"}; break;
    case CalibrationKind::SvmKernel:
      for (const auto& k : calibration_kernels(plan.n_features)) report.columns.push_back(kernel_name(k));
      report.columns.push_back("winner");
      break;
  }
  const std::size_t total = plan.scenarios.size() * settings.matrices;
  std::size_t done = 0;
  for (Scenario scenario : plan.scenarios) {
    for (std::size_t m = 0; m < settings.matrices; ++m) {
      const TrainingTable table = calibration_table(plan, settings, scenario, m);
      const std::uint64_t seed = derive_seed(plan.master_seed, {stream::kCalibration, 100 + static_cast<std::uint64_t>(scenario), m});
      CalibrationRow row;
      row.scenario = scenario;
      row.alpha = plan.alphas[m % plan.alphas.size()];
      row.matrix = m;
      if (kind == CalibrationKind::Knn) {
        row.values["L"] = std::to_string(calibrate_knn_once(table, settings.folds, seed, settings.max_bound));
      } else if (kind == CalibrationKind::Mlp) {
        const auto [size, decay] = calibrate_mlp_once(table, settings.folds, seed, settings.max_bound);
        row.values["size"] = std::to_string(size);
        row.values["decay"] = format_real(decay);
      } else {
        const auto kernels = calibration_kernels(table.width());
        double best = 2.0;
        std::string winner;
        for (const auto& k : kernels) {
          const double err = svm_kernel_cv_error(table, k, settings.folds, seed);
          row.values[kernel_name(k)] = format_real(err);
          if (err < best) {
            best = err;
            winner = kernel_name(k);
          }
        }
        row.values["winner"] = winner;
      }
      report.rows.push_back(std::move(row));
      if (progress) progress(++done, total);
    }
  }
  return report;
}

inline void write_calibration_csv(std::ostream& out, const CalibrationReport& report) {
  out << "scenario,alpha,matrix";
  for (const auto& c : report.columns) out << ',' << c;
  out << '\n';
  for (const auto& r : report.rows) {
    out << to_string(r.scenario) << ',' << format_real(r.alpha) << ',' << r.matrix;
    for (const auto& c : report.columns) out << ',' << r.values.at(c);
    out << '\n';
  }
}

/// Frequency of each value of `column`, keyed by its text.
inline std::map<std::string, std::size_t> calibration_counts(const CalibrationReport& report,
                                                             const std::string& column) {
  std::map<std::string, std::size_t> counts;
  for (const auto& r : report.rows) ++counts[r.values.at(column)];
  return counts;
}

}  // namespace fairsim
