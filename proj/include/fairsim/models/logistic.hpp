#pragma once

// Logistic regression by iteratively reweighted least squares, with Wald
// standard errors and p-values.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "fairsim/common.hpp"
#include "fairsim/stats.hpp"
#include "fairsim/table.hpp"

namespace fairsim {

/// Numerically stable 1 / (1 + exp(-t)).
inline double logistic(double t) noexcept {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

/// log(1 + exp(t)) without overflow.
inline double softplus(double t) noexcept {
  return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

struct IrlsOptions {
  int max_iterations = 50;
  double tolerance = 1e-8;         // on max |delta beta|
  double separation_bound = 30.0;  // |beta| beyond this with non-shrinking steps
};

/// beta, std_errors and p_values have width (#features + 1), intercept first.
/// A p-value is NaN when its standard error is zero or not finite
/// (aliased column).
struct LogisticFit {
  Vector beta;
  Vector std_errors;
  Vector p_values;
  bool converged = false;
  double log_likelihood = 0.0;
  int iterations = 0;
  std::vector<std::string> terms;  // "(Intercept)", then feature names

  std::size_t width() const { return static_cast<std::size_t>(beta.size()) - 1; }
};

inline Vector wald_pvalues(const Vector& beta, const Vector& std_errors) {
  Vector p(beta.size());
  for (Eigen::Index k = 0; k < beta.size(); ++k) {
    const double se = std_errors[k];
    p[k] = (se > 0.0 && std::isfinite(se)) ? stats::two_sided_normal_tail(beta[k] / se)
                                           : std::numeric_limits<double>::quiet_NaN();
  }
  return p;
}

inline Vector wald_pvalues(const LogisticFit& fit) { return wald_pvalues(fit.beta, fit.std_errors); }

/// Design matrix with a leading column of ones.
inline Matrix with_intercept(const Matrix& x) {
  Matrix design(x.rows(), x.cols() + 1);
  design.col(0).setOnes();
  design.rightCols(x.cols()) = x;
  return design;
}

inline double log_likelihood(const Matrix& design, std::span<const int> y, const Vector& beta) {
  const Vector eta = design * beta;
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    ll += y[static_cast<std::size_t>(i)] * eta[i] - softplus(eta[i]);
  }
  return ll;
}

/// d loglik / d beta = X^T (y - p).
inline Vector log_likelihood_gradient(const Matrix& design, std::span<const int> y, const Vector& beta) {
  const Vector eta = design * beta;
  Vector resid(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) resid[i] = y[static_cast<std::size_t>(i)] - logistic(eta[i]);
  return design.transpose() * resid;
}

/// IRLS on an explicit design (intercept column included by the caller).
/// Aliased columns are handled through a minimum-norm Newton step, so their
/// coefficients stay at zero and their standard errors are reported as zero.
inline LogisticFit fit_logistic_design(const Matrix& design, std::span<const int> y,
                                       const IrlsOptions& options = {}) {
  const Eigen::Index n = design.rows();
  const Eigen::Index p = design.cols();
  if (static_cast<std::size_t>(n) != y.size()) throw FitError("label count does not match rows");
  std::size_t positives = 0;
  for (int v : y) positives += (v == 1);
  if (n < 2 || positives == 0 || positives == y.size()) throw FitError("degenerate labels");

  Vector beta = Vector::Zero(p);
  Vector eta(n), prob(n), weight(n);
  Matrix weighted(n, p);
  double previous_step = std::numeric_limits<double>::infinity();

  LogisticFit fit;
  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    eta.noalias() = design * beta;
    for (Eigen::Index i = 0; i < n; ++i) {
      prob[i] = logistic(eta[i]);
      weight[i] = prob[i] * (1.0 - prob[i]);
    }
    weighted = design.array().colwise() * weight.array();
    const Eigen::MatrixXd information = design.transpose() * weighted;
    Vector score(p);
    for (Eigen::Index i = 0; i < n; ++i) eta[i] = y[static_cast<std::size_t>(i)] - prob[i];
    score.noalias() = design.transpose() * eta;

    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> solver(information);
    solver.setThreshold(1e-10);
    const Vector step = solver.solve(score);
    if (!step.allFinite()) {
      fit.iterations = iter;
      break;
    }
    beta += step;
    fit.iterations = iter;

    const double max_step = step.cwiseAbs().maxCoeff();
    if (max_step < options.tolerance) {
      fit.converged = true;
      break;
    }
    const double step_norm = step.norm();
    if (beta.cwiseAbs().maxCoeff() > options.separation_bound && step_norm >= previous_step) {
      break;  // quasi-separation: coefficients keep growing
    }
    previous_step = step_norm;
  }

  // Standard errors from the information matrix at the returned beta.
  eta.noalias() = design * beta;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double pr = logistic(eta[i]);
    weight[i] = pr * (1.0 - pr);
  }
  weighted = design.array().colwise() * weight.array();
  const Eigen::MatrixXd information = design.transpose() * weighted;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> solver(information);
  solver.setThreshold(1e-10);
  const Eigen::MatrixXd covariance = solver.pseudoInverse();

  fit.beta = beta;
  fit.std_errors = covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
  fit.p_values = wald_pvalues(fit.beta, fit.std_errors);
  fit.log_likelihood = log_likelihood(design, y, beta);
  if (!std::isfinite(fit.log_likelihood)) fit.converged = false;
  return fit;
}

inline LogisticFit fit_logistic(const TrainingTable& table, const IrlsOptions& options = {}) {
  table.check_fittable();
  LogisticFit fit = fit_logistic_design(with_intercept(table.features), table.labels, options);
  fit.terms.reserve(table.width() + 1);
  fit.terms.emplace_back("(Intercept)");
  for (const auto& name : table.names) fit.terms.push_back(name);
  return fit;
}

inline double linear_predictor(const LogisticFit& fit, std::span<const double> features) {
  if (features.size() != fit.width()) throw std::invalid_argument("feature width mismatch");
  double eta = fit.beta[0];
  for (std::size_t k = 0; k < features.size(); ++k) eta += fit.beta[static_cast<Eigen::Index>(k) + 1] * features[k];
  return eta;
}

inline double predict_prob(const LogisticFit& fit, std::span<const double> features) {
  return logistic(linear_predictor(fit, features));
}

}  // namespace fairsim
