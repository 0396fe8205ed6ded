#pragma once

// Single-hidden-layer perceptron with logistic hidden units and a logistic
// output. Loss is the summed cross-entropy plus decay * ||theta||^2 over all
// weights and biases. Training is full-batch L-BFGS.
//
// Parameter layout (theta):
//   hidden unit h (0 <= h < size): [bias_h, w_h1 .. w_hd]   size * (d + 1)
//   output:                        [bias_o, v_1 .. v_size]   size + 1

#include <cmath>
#include <cstdint>
#include <span>
#include <utility>

#include "fairsim/common.hpp"
#include "fairsim/models/cv.hpp"
#include "fairsim/models/lbfgs.hpp"
#include "fairsim/models/logistic.hpp"
#include "fairsim/rng.hpp"
#include "fairsim/table.hpp"

namespace fairsim {

struct MlpShape {
  std::size_t inputs = 0;
  std::size_t hidden = 1;

  std::size_t parameter_count() const { return hidden * (inputs + 1) + hidden + 1; }
};

/// Loss and gradient of the network over (x, y). `grad` is resized.
inline double mlp_loss(const MlpShape& shape, const Vector& theta, const Matrix& x, std::span<const int> y,
                       double decay, Vector& grad) {
  const auto d = static_cast<Eigen::Index>(shape.inputs);
  const auto p = static_cast<Eigen::Index>(shape.hidden);
  const Eigen::Index n = x.rows();
  Eigen::Map<const Matrix> w1(theta.data(), p, d + 1);
  const double out_bias = theta[p * (d + 1)];
  Eigen::Map<const Vector> v(theta.data() + p * (d + 1) + 1, p);

  Matrix hidden_pre = x * w1.rightCols(d).transpose();
  hidden_pre.rowwise() += w1.col(0).transpose();
  const Matrix h = hidden_pre.unaryExpr([](double t) { return logistic(t); });
  const Vector out_pre = (h * v).array() + out_bias;

  double loss = 0.0;
  Vector delta_out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double z = out_pre[i];
    const int label = y[static_cast<std::size_t>(i)];
    loss += softplus(z) - label * z;
    delta_out[i] = logistic(z) - label;
  }
  loss += decay * theta.squaredNorm();

  grad.resize(theta.size());
  Eigen::Map<Matrix> g1(grad.data(), p, d + 1);
  Eigen::Map<Vector> gv(grad.data() + p * (d + 1) + 1, p);
  grad[p * (d + 1)] = delta_out.sum();
  gv = h.transpose() * delta_out;

  Matrix delta_hidden = (delta_out * v.transpose()).array() * (h.array() * (1.0 - h.array()));
  g1.col(0) = delta_hidden.colwise().sum().transpose();
  g1.rightCols(d) = delta_hidden.transpose() * x;
  grad += 2.0 * decay * theta;
  return loss;
}

struct MlpModel {
  MlpShape shape;
  Vector theta;
  double decay = 0.0;
  double final_loss = 0.0;
  int iterations = 0;

  double score(std::span<const double> features) const {
    if (features.size() != shape.inputs) throw std::invalid_argument("feature width mismatch");
    const auto d = shape.inputs;
    double out = theta[static_cast<Eigen::Index>(shape.hidden * (d + 1))];
    for (std::size_t h = 0; h < shape.hidden; ++h) {
      const double* w = theta.data() + h * (d + 1);
      double a = w[0];
      for (std::size_t k = 0; k < d; ++k) a += w[k + 1] * features[k];
      out += theta[static_cast<Eigen::Index>(shape.hidden * (d + 1) + 1 + h)] * logistic(a);
    }
    return logistic(out);
  }
};

struct MlpOptions {
  std::size_t size = 1;
  double decay = 0.0;
  std::uint64_t seed = 0;
  LbfgsOptions optimizer{};
};

inline Vector mlp_initial_weights(const MlpShape& shape, std::uint64_t seed) {
  RandomStream rng(seed, {stream::kModel});
  Vector theta(static_cast<Eigen::Index>(shape.parameter_count()));
  for (Eigen::Index i = 0; i < theta.size(); ++i) theta[i] = rng.uniform(-0.5, 0.5);
  return theta;
}

inline MlpModel fit_mlp(const Matrix& x, std::span<const int> y, const MlpOptions& options) {
  if (options.size == 0) throw std::invalid_argument("hidden layer size must be positive");
  if (options.decay < 0.0) throw std::invalid_argument("decay must be non-negative");
  MlpShape shape{static_cast<std::size_t>(x.cols()), options.size};
  const Objective objective = [&](const Vector& theta, Vector& grad) {
    return mlp_loss(shape, theta, x, y, options.decay, grad);
  };
  const auto result = minimize_lbfgs(objective, mlp_initial_weights(shape, options.seed), options.optimizer);
  return {shape, result.x, options.decay, result.value, result.iterations};
}

inline MlpModel fit_mlp(const TrainingTable& table, const MlpOptions& options) {
  table.check_fittable();
  return fit_mlp(table.features, table.labels, options);
}

struct MlpTuneOptions {
  std::size_t min_size = 1;
  std::size_t max_size = 10;
  std::vector<double> decays{0.0};
  std::size_t folds = 10;
  std::uint64_t seed = 0;
  LbfgsOptions optimizer{};
};

struct MlpTuning {
  MlpModel model;
  TuningReport size_report;
  double chosen_decay = 0.0;
  /// Errors indexed [decay][size - min_size].
  std::vector<std::vector<double>> error_grid;
};

/// Mean CV misclassification (output >= 0.5 predicts success) over the
/// size x decay grid; ties prefer the smaller size, then the smaller decay.
inline MlpTuning tune_mlp(const TrainingTable& table, const MlpTuneOptions& options = {}) {
  table.check_fittable();
  if (options.min_size == 0 || options.max_size < options.min_size || options.decays.empty()) {
    throw std::invalid_argument("bad MLP tuning grid");
  }
  const FoldPlan plan = make_folds(table.rows(), options.folds, options.seed);
  const std::size_t sizes = options.max_size - options.min_size + 1;
  MlpTuning tuning;
  tuning.error_grid.assign(options.decays.size(), std::vector<double>(sizes, 0.0));

  std::vector<TrainingTable> train_parts, test_parts;
  for (std::size_t f = 0; f < plan.folds(); ++f) {
    train_parts.push_back(table.subset(plan.train[f]));
    test_parts.push_back(table.subset(plan.test[f]));
  }
  for (std::size_t di = 0; di < options.decays.size(); ++di) {
    for (std::size_t s = 0; s < sizes; ++s) {
      double total = 0.0;
      for (std::size_t f = 0; f < plan.folds(); ++f) {
        MlpOptions fit_options{options.min_size + s, options.decays[di], derive_seed(options.seed, {f, s}),
                               options.optimizer};
        const auto& part = train_parts[f];
        const MlpModel model = fit_mlp(part.features, part.labels, fit_options);
        const auto& held = test_parts[f];
        std::size_t wrong = 0;
        for (std::size_t r = 0; r < held.rows(); ++r) {
          const int predicted = model.score(held.row(r)) >= 0.5 ? 1 : 0;
          wrong += (predicted != held.labels[r]);
        }
        total += static_cast<double>(wrong) / static_cast<double>(held.rows());
      }
      tuning.error_grid[di][s] = total / static_cast<double>(plan.folds());
    }
  }

  std::size_t best_d = 0, best_s = 0;
  for (std::size_t s = 0; s < sizes; ++s) {
    for (std::size_t di = 0; di < options.decays.size(); ++di) {
      if (tuning.error_grid[di][s] < tuning.error_grid[best_d][best_s]) {
        best_d = di;
        best_s = s;
      }
    }
  }
  tuning.chosen_decay = options.decays[best_d];
  auto& report = tuning.size_report;
  report.parameter = "size";
  for (std::size_t s = 0; s < sizes; ++s) report.grid.push_back(static_cast<double>(options.min_size + s));
  report.errors = tuning.error_grid[best_d];
  report.chosen = report.grid[best_s];
  report.cv_error = tuning.error_grid[best_d][best_s];

  tuning.model = fit_mlp(table, MlpOptions{options.min_size + best_s, tuning.chosen_decay, options.seed,
                                           options.optimizer});
  return tuning;
}

}  // namespace fairsim
