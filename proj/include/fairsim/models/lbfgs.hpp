#pragma once

#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <vector>

#include "fairsim/common.hpp"

namespace fairsim {

struct LbfgsOptions {
  int max_iterations = 500;
  int history = 10;
  double gradient_tolerance = 1e-6;  // on ||g||
  double relative_tolerance = 1e-8;  // on relative objective decrease
  int max_nonfinite_halvings = 10;
};

struct LbfgsResult {
  Vector x;
  double value = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Objective: returns f(x) and writes the gradient into `grad`.
using Objective = std::function<double(const Vector& x, Vector& grad)>;

/// Limited-memory BFGS with a backtracking Armijo line search. A non-finite
/// trial value halves the step; more than `max_nonfinite_halvings` of them in
/// one line search raise FitError.
inline LbfgsResult minimize_lbfgs(const Objective& objective, Vector x, const LbfgsOptions& options = {}) {
  Vector grad(x.size());
  double value = objective(x, grad);
  if (!std::isfinite(value)) throw FitError("objective is not finite at the starting point");

  std::deque<Vector> s_hist, y_hist;
  std::deque<double> rho_hist;
  LbfgsResult result;

  Vector direction(x.size()), trial_x(x.size()), trial_grad(x.size());
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    const double gnorm = grad.norm();
    if (gnorm < options.gradient_tolerance) {
      result.converged = true;
      break;
    }

    // Two-loop recursion.
    direction = -grad;
    std::vector<double> alpha(s_hist.size());
    for (std::size_t i = s_hist.size(); i-- > 0;) {
      alpha[i] = rho_hist[i] * s_hist[i].dot(direction);
      direction -= alpha[i] * y_hist[i];
    }
    if (!s_hist.empty()) {
      direction *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    } else {
      direction /= std::max(1.0, gnorm);
    }
    for (std::size_t i = 0; i < s_hist.size(); ++i) {
      const double beta = rho_hist[i] * y_hist[i].dot(direction);
      direction += (alpha[i] - beta) * s_hist[i];
    }
    double slope = grad.dot(direction);
    if (!(slope < 0.0)) {
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      direction = -grad / std::max(1.0, gnorm);
      slope = grad.dot(direction);
    }

    double step = 1.0;
    int nonfinite = 0;
    bool accepted = false;
    double trial_value = value;
    for (int attempt = 0; attempt < 60; ++attempt) {
      trial_x = x + step * direction;
      trial_value = objective(trial_x, trial_grad);
      if (!std::isfinite(trial_value) || !trial_grad.allFinite()) {
        if (++nonfinite > options.max_nonfinite_halvings) {
          throw FitError("objective diverged (non-finite loss after repeated step halving)");
        }
        step *= 0.5;
        continue;
      }
      if (trial_value <= value + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    result.iterations = iter + 1;
    if (!accepted) {
      result.converged = true;  // no further decrease at machine precision
      break;
    }

    Vector s = trial_x - x;
    Vector y = trial_grad - grad;
    const double sy = s.dot(y);
    const double decrease = value - trial_value;
    x.swap(trial_x);
    grad.swap(trial_grad);
    const double previous = value;
    value = trial_value;
    if (sy > 1e-12 * s.norm() * y.norm()) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > options.history) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    if (decrease <= options.relative_tolerance * (std::abs(previous) + options.relative_tolerance)) {
      result.converged = true;
      break;
    }
  }
  result.x = std::move(x);
  result.value = value;
  result.gradient_norm = grad.norm();
  return result;
}

}  // namespace fairsim
