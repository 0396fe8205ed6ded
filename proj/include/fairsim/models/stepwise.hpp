#pragma once

// AIC variable selection for logistic regression.
//
// AIC(mask) = 2 * (#coefficients incl. intercept) - 2 * loglik(mask).
// The stepwise search starts from the full model and, at every step, tries
// every single-variable deletion and every single-variable re-addition,
// applying the move with the lowest AIC while it strictly improves.

#include <cstdint>
#include <limits>
#include <map>
#include <vector>

#include "fairsim/models/logistic.hpp"
#include "fairsim/table.hpp"

namespace fairsim {

/// Selected feature columns; the intercept is always included.
using FeatureMask = std::vector<bool>;

struct AicSelection {
  FeatureMask mask;
  LogisticFit fit;  // refit on the selected columns
  double aic = 0.0;
  int moves = 0;
};

namespace detail {

inline std::uint64_t mask_bits(const FeatureMask& mask) {
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) bits |= (std::uint64_t{1} << i);
  }
  return bits;
}

inline Matrix masked_design(const Matrix& features, const FeatureMask& mask) {
  Eigen::Index cols = 1;
  for (bool b : mask) cols += b;
  Matrix design(features.rows(), cols);
  design.col(0).setOnes();
  Eigen::Index c = 1;
  for (std::size_t f = 0; f < mask.size(); ++f) {
    if (mask[f]) design.col(c++) = features.col(static_cast<Eigen::Index>(f));
  }
  return design;
}

/// Fits sub-models on demand and memoises them by mask.
class SubsetFitter {
 public:
  explicit SubsetFitter(const TrainingTable& table) : table_(table) {
    if (table.width() > 63) throw FitError("AIC search supports at most 63 features");
  }

  const LogisticFit& fit(const FeatureMask& mask) {
    const auto key = mask_bits(mask);
    auto it = cache_.find(key);
    if (it == cache_.end()) {
      LogisticFit f = fit_logistic_design(masked_design(table_.features, mask), table_.labels);
      f.terms.emplace_back("(Intercept)");
      for (std::size_t i = 0; i < mask.size(); ++i) {
        if (mask[i]) f.terms.push_back(table_.names[i]);
      }
      it = cache_.emplace(key, std::move(f)).first;
    }
    return it->second;
  }

  double aic(const FeatureMask& mask) {
    const auto& f = fit(mask);
    return 2.0 * static_cast<double>(f.beta.size()) - 2.0 * f.log_likelihood;
  }

 private:
  const TrainingTable& table_;
  std::map<std::uint64_t, LogisticFit> cache_;
};

}  // namespace detail

inline double aic_of(const LogisticFit& fit) {
  return 2.0 * static_cast<double>(fit.beta.size()) - 2.0 * fit.log_likelihood;
}

inline AicSelection stepwise_aic(const TrainingTable& table) {
  table.check_fittable();
  detail::SubsetFitter fitter(table);
  FeatureMask mask(table.width(), true);
  double current = fitter.aic(mask);
  int moves = 0;
  const int move_cap = 4 * static_cast<int>(table.width() + 1);
  while (moves < move_cap) {
    double best = current;
    std::size_t best_flip = mask.size();
    for (std::size_t f = 0; f < mask.size(); ++f) {
      FeatureMask candidate = mask;
      candidate[f] = !candidate[f];
      const double a = fitter.aic(candidate);
      if (a < best) {
        best = a;
        best_flip = f;
      }
    }
    if (best_flip == mask.size()) break;
    mask[best_flip] = !mask[best_flip];
    current = best;
    ++moves;
  }
  return {mask, fitter.fit(mask), current, moves};
}

/// Brute-force best-AIC subset; ties keep the first mask in enumeration order.
inline FeatureMask exhaustive_aic_oracle(const TrainingTable& table) {
  if (table.width() > 12) throw std::invalid_argument("exhaustive AIC search is limited to 12 features");
  table.check_fittable();
  detail::SubsetFitter fitter(table);
  const std::size_t p = table.width();
  FeatureMask best_mask(p, false);
  double best = std::numeric_limits<double>::infinity();
  for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << p); ++bits) {
    FeatureMask mask(p);
    for (std::size_t f = 0; f < p; ++f) mask[f] = (bits >> f) & 1U;
    const double a = fitter.aic(mask);
    if (a < best) {
      best = a;
      best_mask = mask;
    }
  }
  return best_mask;
}

}  // namespace fairsim
