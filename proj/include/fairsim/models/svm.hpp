#pragma once

// Soft-margin SVM solved in the dual with SMO:
//
//   min_a  1/2 a^T Q a - e^T a   s.t.  0 <= a_i <= C,  y^T a = 0,
//   Q_ij = y_i y_j K(x_i, x_j).
//
// Each iteration picks the maximal-violating pair with second-order working
// set selection and solves the two-variable subproblem analytically. The
// solver stops once the KKT gap  max_{I_up} -y_i G_i - min_{I_low} -y_i G_i
// drops below `tolerance`.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "fairsim/common.hpp"
#include "fairsim/table.hpp"

namespace fairsim {

struct LinearKernel {
  double operator()(std::span<const double> a, std::span<const double> b) const {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
  }
};

struct PolynomialKernel {
  double gamma = 1.0;
  double coef0 = 0.0;
  int degree = 3;
  double operator()(std::span<const double> a, std::span<const double> b) const {
    return std::pow(gamma * LinearKernel{}(a, b) + coef0, degree);
  }
};

struct RbfKernel {
  double gamma = 1.0;
  double operator()(std::span<const double> a, std::span<const double> b) const {
    double d = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) d += (a[k] - b[k]) * (a[k] - b[k]);
    return std::exp(-gamma * d);
  }
};

struct SigmoidKernel {
  double gamma = 1.0;
  double coef0 = 0.0;
  double operator()(std::span<const double> a, std::span<const double> b) const {
    return std::tanh(gamma * LinearKernel{}(a, b) + coef0);
  }
};

struct SmoOptions {
  double cost = 1.0;
  double tolerance = 1e-3;
  /// Iteration cap is max_passes * n / 2 pair updates (each update touches
  /// two points, so n / 2 updates make one pass over the data).
  std::size_t max_passes = 10000;
  /// Precompute the whole Q matrix up to this many rows.
  std::size_t full_matrix_rows = 2500;
};

struct SmoSolution {
  Vector alpha;
  double bias = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  double kkt_gap = 0.0;
  double dual_objective = 0.0;  // e^T a - 1/2 a^T Q a
};

namespace detail {

inline std::vector<int> signed_labels(std::span<const int> labels) {
  std::vector<int> y(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) y[i] = labels[i] == 1 ? 1 : -1;
  return y;
}

template <class Kernel>
class QMatrix {
 public:
  QMatrix(const Matrix& x, const std::vector<int>& y, const Kernel& kernel, std::size_t full_rows)
      : x_(x), y_(y), kernel_(kernel), n_(static_cast<std::size_t>(x.rows())) {
    diagonal_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) diagonal_[i] = kernel_(row(i), row(i));
    if (n_ <= full_rows) {
      full_.resize(n_ * n_);
      for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
          const double q = y_[i] * y_[j] * kernel_(row(i), row(j));
          full_[i * n_ + j] = q;
          full_[j * n_ + i] = q;
        }
      }
    }
  }

  std::span<const double> row_q(std::size_t i, std::vector<double>& buffer) const {
    if (!full_.empty()) return {full_.data() + i * n_, n_};
    buffer.resize(n_);
    const auto xi = row(i);
    for (std::size_t j = 0; j < n_; ++j) buffer[j] = y_[i] * y_[j] * kernel_(xi, row(j));
    return buffer;
  }

  double diagonal(std::size_t i) const { return diagonal_[i]; }

 private:
  std::span<const double> row(std::size_t i) const {
    return {x_.data() + i * static_cast<std::size_t>(x_.cols()), static_cast<std::size_t>(x_.cols())};
  }
  const Matrix& x_;
  const std::vector<int>& y_;
  Kernel kernel_;
  std::size_t n_;
  std::vector<double> diagonal_;
  std::vector<double> full_;
};

}  // namespace detail

template <class Kernel>
SmoSolution solve_smo(const Matrix& x, std::span<const int> labels, const Kernel& kernel,
                      const SmoOptions& options = {}) {
  constexpr double kTau = 1e-12;
  const std::size_t n = static_cast<std::size_t>(x.rows());
  if (labels.size() != n) throw FitError("label count does not match rows");
  if (!(options.cost > 0.0)) throw std::invalid_argument("SVM cost must be positive");
  const std::vector<int> y = detail::signed_labels(labels);
  bool has_pos = false, has_neg = false;
  for (int v : y) (v > 0 ? has_pos : has_neg) = true;
  if (!has_pos || !has_neg) throw FitError("degenerate labels");

  const double c = options.cost;
  detail::QMatrix<Kernel> q(x, y, kernel, options.full_matrix_rows);
  std::vector<double> alpha(n, 0.0), grad(n, -1.0);
  std::vector<double> buf_i, buf_j;

  auto upper = [&](std::size_t t) { return alpha[t] >= c; };
  auto lower = [&](std::size_t t) { return alpha[t] <= 0.0; };

  const std::size_t max_iterations = std::max<std::size_t>(1, options.max_passes * std::max<std::size_t>(1, n / 2));
  SmoSolution solution;
  std::size_t iter = 0;
  for (; iter < max_iterations; ++iter) {
    // Working set selection (second order).
    double gmax = -std::numeric_limits<double>::infinity();
    std::size_t i = n;
    for (std::size_t t = 0; t < n; ++t) {
      if (y[t] == 1) {
        if (!upper(t) && -grad[t] >= gmax) { gmax = -grad[t]; i = t; }
      } else {
        if (!lower(t) && grad[t] >= gmax) { gmax = grad[t]; i = t; }
      }
    }
    if (i == n) {
      solution.converged = true;
      solution.kkt_gap = 0.0;
      break;
    }
    const auto qi = q.row_q(i, buf_i);
    double gmax2 = -std::numeric_limits<double>::infinity();
    double best_obj = std::numeric_limits<double>::infinity();
    std::size_t j = n;
    for (std::size_t t = 0; t < n; ++t) {
      if (y[t] == 1) {
        if (lower(t)) continue;
        const double diff = gmax + grad[t];
        gmax2 = std::max(gmax2, grad[t]);
        if (diff > 0.0) {
          double quad = q.diagonal(i) + q.diagonal(t) - 2.0 * y[i] * qi[t];
          const double obj = -(diff * diff) / (quad > 0.0 ? quad : kTau);
          if (obj <= best_obj) { best_obj = obj; j = t; }
        }
      } else {
        if (upper(t)) continue;
        const double diff = gmax - grad[t];
        gmax2 = std::max(gmax2, -grad[t]);
        if (diff > 0.0) {
          double quad = q.diagonal(i) + q.diagonal(t) + 2.0 * y[i] * qi[t];
          const double obj = -(diff * diff) / (quad > 0.0 ? quad : kTau);
          if (obj <= best_obj) { best_obj = obj; j = t; }
        }
      }
    }
    solution.kkt_gap = gmax + gmax2;
    if (gmax + gmax2 < options.tolerance || j == n) {
      solution.converged = true;
      break;
    }

    const auto qj = q.row_q(j, buf_j);
    const double old_i = alpha[i];
    const double old_j = alpha[j];
    if (y[i] != y[j]) {
      double quad = q.diagonal(i) + q.diagonal(j) + 2.0 * qi[j];
      if (quad <= 0.0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0.0) {
        if (alpha[j] < 0.0) { alpha[j] = 0.0; alpha[i] = diff; }
      } else {
        if (alpha[i] < 0.0) { alpha[i] = 0.0; alpha[j] = -diff; }
      }
      if (diff > 0.0) {
        if (alpha[i] > c) { alpha[i] = c; alpha[j] = c - diff; }
      } else {
        if (alpha[j] > c) { alpha[j] = c; alpha[i] = c + diff; }
      }
    } else {
      double quad = q.diagonal(i) + q.diagonal(j) - 2.0 * qi[j];
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > c) {
        if (alpha[i] > c) { alpha[i] = c; alpha[j] = sum - c; }
      } else {
        if (alpha[j] < 0.0) { alpha[j] = 0.0; alpha[i] = sum; }
      }
      if (sum > c) {
        if (alpha[j] > c) { alpha[j] = c; alpha[i] = sum - c; }
      } else {
        if (alpha[i] < 0.0) { alpha[i] = 0.0; alpha[j] = sum; }
      }
    }
    const double di = alpha[i] - old_i;
    const double dj = alpha[j] - old_j;
    for (std::size_t t = 0; t < n; ++t) grad[t] += qi[t] * di + qj[t] * dj;
  }
  solution.iterations = iter;

  // Bias: average over free vectors, else the midpoint of the feasible range.
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  std::size_t free_count = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * grad[t];
    if (upper(t)) {
      if (y[t] == -1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (lower(t)) {
      if (y[t] == 1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      ++free_count;
      sum_free += yg;
    }
  }
  const double rho = free_count > 0 ? sum_free / static_cast<double>(free_count) : (ub + lb) / 2.0;
  solution.bias = -rho;

  double v = 0.0;
  for (std::size_t t = 0; t < n; ++t) v += alpha[t] * (grad[t] - 1.0);
  solution.dual_objective = -v / 2.0;
  solution.alpha = Eigen::Map<const Vector>(alpha.data(), static_cast<Eigen::Index>(n));
  return solution;
}

/// Linear SVM: decision value w^T x + b ranks candidates.
struct SvmLinearModel {
  Vector weights;
  double bias = 0.0;
  double cost = 1.0;
  std::size_t support_vectors = 0;
  std::size_t bounded_support_vectors = 0;
  std::size_t iterations = 0;
  bool converged = false;
  double kkt_gap = 0.0;
  double dual_objective = 0.0;

  double decision(std::span<const double> features) const {
    if (features.size() != static_cast<std::size_t>(weights.size())) {
      throw std::invalid_argument("feature width mismatch");
    }
    double s = bias;
    for (std::size_t k = 0; k < features.size(); ++k) s += weights[static_cast<Eigen::Index>(k)] * features[k];
    return s;
  }
};

inline SvmLinearModel fit_svm_linear(const Matrix& x, std::span<const int> labels, const SmoOptions& options = {}) {
  const auto sol = solve_smo(x, labels, LinearKernel{}, options);
  SvmLinearModel model;
  model.weights = Vector::Zero(x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double a = sol.alpha[i];
    if (a <= 0.0) continue;
    const double y = labels[static_cast<std::size_t>(i)] == 1 ? 1.0 : -1.0;
    model.weights += a * y * x.row(i).transpose();
    ++model.support_vectors;
    if (a >= options.cost) ++model.bounded_support_vectors;
  }
  model.bias = sol.bias;
  model.cost = options.cost;
  model.iterations = sol.iterations;
  model.converged = sol.converged;
  model.kkt_gap = sol.kkt_gap;
  model.dual_objective = sol.dual_objective;
  return model;
}

inline SvmLinearModel fit_svm_linear(const TrainingTable& table, const SmoOptions& options = {}) {
  table.check_fittable();
  return fit_svm_linear(table.features, table.labels, options);
}

/// Primal objective 1/2 ||w||^2 + C sum hinge, for duality-gap checks.
inline double svm_primal_objective(const SvmLinearModel& model, const Matrix& x, std::span<const int> labels) {
  double hinge = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double y = labels[static_cast<std::size_t>(i)] == 1 ? 1.0 : -1.0;
    const std::span<const double> row(x.data() + i * x.cols(), static_cast<std::size_t>(x.cols()));
    hinge += std::max(0.0, 1.0 - y * model.decision(row));
  }
  return 0.5 * model.weights.squaredNorm() + model.cost * hinge;
}

using SvmKernel = std::variant<LinearKernel, PolynomialKernel, RbfKernel, SigmoidKernel>;

inline std::string kernel_name(const SvmKernel& k) {
  struct {
    std::string operator()(const LinearKernel&) const { return "linear"; }
    std::string operator()(const PolynomialKernel& p) const { return "polynomial" + std::to_string(p.degree); }
    std::string operator()(const RbfKernel&) const { return "radial"; }
    std::string operator()(const SigmoidKernel&) const { return "sigmoid"; }
  } visitor;
  return std::visit(visitor, k);
}

/// Kernel SVM kept as support vectors; used by the kernel-selection study.
struct KernelSvmModel {
  SvmKernel kernel;
  Matrix support;
  Vector coefficients;  // alpha_i * y_i
  double bias = 0.0;
  bool converged = false;

  double decision(std::span<const double> features) const {
    return std::visit(
        [&](const auto& k) {
          double s = bias;
          for (Eigen::Index i = 0; i < support.rows(); ++i) {
            const std::span<const double> sv(support.data() + i * support.cols(),
                                             static_cast<std::size_t>(support.cols()));
            s += coefficients[i] * k(sv, features);
          }
          return s;
        },
        kernel);
  }
};

inline KernelSvmModel fit_svm_kernel(const Matrix& x, std::span<const int> labels, const SvmKernel& kernel,
                                     const SmoOptions& options = {}) {
  const SmoSolution sol = std::visit([&](const auto& k) { return solve_smo(x, labels, k, options); }, kernel);
  KernelSvmModel model{kernel, {}, {}, sol.bias, sol.converged};
  std::vector<Eigen::Index> sv;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    if (sol.alpha[i] > 0.0) sv.push_back(i);
  }
  model.support.resize(static_cast<Eigen::Index>(sv.size()), x.cols());
  model.coefficients.resize(static_cast<Eigen::Index>(sv.size()));
  for (std::size_t r = 0; r < sv.size(); ++r) {
    const auto i = sv[r];
    model.support.row(static_cast<Eigen::Index>(r)) = x.row(i);
    model.coefficients[static_cast<Eigen::Index>(r)] =
        sol.alpha[i] * (labels[static_cast<std::size_t>(i)] == 1 ? 1.0 : -1.0);
  }
  return model;
}

}  // namespace fairsim
