#pragma once

// Uniform front end over the five learners: fit by algorithm tag, score a
// candidate, rank a competition, dump to JSON.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

#include "fairsim/common.hpp"
#include "fairsim/models/knn.hpp"
#include "fairsim/models/logistic.hpp"
#include "fairsim/models/mlp.hpp"
#include "fairsim/models/stepwise.hpp"
#include "fairsim/models/svm.hpp"
#include "fairsim/rng.hpp"
#include "fairsim/table.hpp"

namespace fairsim {

enum class Algorithm : std::uint8_t { Logistic, LogisticAic, Knn, Mlp, SvmLinear };

inline constexpr std::array<Algorithm, 5> kAllAlgorithms{Algorithm::Logistic, Algorithm::LogisticAic,
                                                         Algorithm::Knn, Algorithm::Mlp,
                                                         Algorithm::SvmLinear};

inline std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Logistic: return "logistic";
    case Algorithm::LogisticAic: return "logistic_aic";
    case Algorithm::Knn: return "knn";
    case Algorithm::Mlp: return "mlp";
    case Algorithm::SvmLinear: return "svm_linear";
  }
  return "?";
}

inline Algorithm parse_algorithm(std::string_view s) {
  for (Algorithm a : kAllAlgorithms) {
    if (to_string(a) == s) return a;
  }
  throw ConfigError("unknown algorithm '" + std::string(s) + "'");
}

inline bool is_logistic(Algorithm a) { return a == Algorithm::Logistic || a == Algorithm::LogisticAic; }

struct FitOptions {
  IrlsOptions irls{};
  KnnTuneOptions knn{};
  MlpTuneOptions mlp{};
  SmoOptions svm{};
  std::uint64_t seed = 0;
};

struct FittedModel {
  Algorithm kind = Algorithm::Logistic;
  std::variant<LogisticFit, AicSelection, KnnModel, MlpModel, SvmLinearModel> payload;
  std::optional<TuningReport> tuning;
  std::size_t width = 0;

  double score(std::span<const double> features) const {
    if (features.size() != width) throw std::invalid_argument("feature width mismatch");
    switch (kind) {
      case Algorithm::Logistic:
        return linear_predictor(std::get<LogisticFit>(payload), features);
      case Algorithm::LogisticAic: {
        const auto& sel = std::get<AicSelection>(payload);
        double eta = sel.fit.beta[0];
        Eigen::Index c = 1;
        for (std::size_t f = 0; f < sel.mask.size(); ++f) {
          if (sel.mask[f]) eta += sel.fit.beta[c++] * features[f];
        }
        return eta;
      }
      case Algorithm::Knn: return std::get<KnnModel>(payload).score(features);
      case Algorithm::Mlp: return std::get<MlpModel>(payload).score(features);
      case Algorithm::SvmLinear: return std::get<SvmLinearModel>(payload).decision(features);
    }
    return 0.0;
  }

  /// The logistic fit behind a regression model, if any.
  const LogisticFit* logistic_fit() const {
    if (const auto* f = std::get_if<LogisticFit>(&payload)) return f;
    if (const auto* s = std::get_if<AicSelection>(&payload)) return &s->fit;
    return nullptr;
  }

  /// Tuned L (kNN) or hidden size (MLP); NaN otherwise.
  double hyperparam() const { return tuning ? tuning->chosen : std::numeric_limits<double>::quiet_NaN(); }

  bool converged() const {
    if (const auto* f = logistic_fit()) return f->converged;
    if (const auto* s = std::get_if<SvmLinearModel>(&payload)) return s->converged;
    return true;
  }
};

inline FittedModel fit_algorithm(Algorithm algorithm, const TrainingTable& table, const FitOptions& options = {}) {
  table.check_fittable();
  FittedModel model;
  model.kind = algorithm;
  model.width = table.width();
  switch (algorithm) {
    case Algorithm::Logistic:
      model.payload = fit_logistic(table, options.irls);
      break;
    case Algorithm::LogisticAic:
      model.payload = stepwise_aic(table);
      break;
    case Algorithm::Knn: {
      KnnTuneOptions knn = options.knn;
      knn.seed = options.seed;
      auto [fitted, report] = tune_knn(table, knn);
      model.payload = std::move(fitted);
      model.tuning = std::move(report);
      break;
    }
    case Algorithm::Mlp: {
      MlpTuneOptions mlp = options.mlp;
      mlp.seed = options.seed;
      auto tuned = tune_mlp(table, mlp);
      model.payload = std::move(tuned.model);
      model.tuning = std::move(tuned.size_report);
      break;
    }
    case Algorithm::SvmLinear:
      model.payload = fit_svm_linear(table, options.svm);
      break;
  }
  return model;
}

/// Ranks (1 = best) from candidate scores. Equal
/// scores are ordered uniformly at random by `rng`.
inline std::vector<int> rank_candidates(std::span<const double> scores, RandomStream& rng) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(std::span<std::size_t>(order));
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<int> ranks(scores.size());
  for (std::size_t r = 0; r < order.size(); ++r) ranks[order[r]] = static_cast<int>(r) + 1;
  return ranks;
}

inline std::vector<int> rank_candidates(const FittedModel& model, const Matrix& features, RandomStream& rng) {
  if (static_cast<std::size_t>(features.cols()) != model.width) throw std::invalid_argument("feature width mismatch");
  std::vector<double> scores(static_cast<std::size_t>(features.rows()));
  for (Eigen::Index j = 0; j < features.rows(); ++j) {
    scores[static_cast<std::size_t>(j)] =
        model.score({features.data() + j * features.cols(), static_cast<std::size_t>(features.cols())});
  }
  return rank_candidates(scores, rng);
}

namespace detail {
inline nlohmann::json to_json_array(const Vector& v) {
  auto out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::isfinite(v[i])) out.push_back(v[i]); else out.push_back(nullptr);
  }
  return out;
}

inline nlohmann::json logistic_json(const LogisticFit& fit) {
  return {{"terms", fit.terms},
          {"estimate", to_json_array(fit.beta)},
          {"std_error", to_json_array(fit.std_errors)},
          {"p_value", to_json_array(fit.p_values)},
          {"converged", fit.converged},
          {"log_likelihood", fit.log_likelihood},
          {"iterations", fit.iterations}};
}
}  // namespace detail

inline nlohmann::json model_to_json(const FittedModel& model) {
  nlohmann::json j;
  j["kind"] = std::string(to_string(model.kind));
  j["width"] = model.width;
  nlohmann::json hyper = nlohmann::json::object();
  switch (model.kind) {
    case Algorithm::Logistic:
      j["coefficients"] = detail::logistic_json(std::get<LogisticFit>(model.payload));
      break;
    case Algorithm::LogisticAic: {
      const auto& sel = std::get<AicSelection>(model.payload);
      std::vector<int> mask(sel.mask.begin(), sel.mask.end());
      j["mask"] = mask;
      j["aic"] = sel.aic;
      j["moves"] = sel.moves;
      j["coefficients"] = detail::logistic_json(sel.fit);
      break;
    }
    case Algorithm::Knn: {
      const auto& knn = std::get<KnnModel>(model.payload);
      hyper["L"] = knn.neighbours;
      j["training_rows"] = knn.train.rows();
      break;
    }
    case Algorithm::Mlp: {
      const auto& mlp = std::get<MlpModel>(model.payload);
      hyper["size"] = mlp.shape.hidden;
      hyper["decay"] = mlp.decay;
      j["weights"] = detail::to_json_array(mlp.theta);
      j["loss"] = mlp.final_loss;
      break;
    }
    case Algorithm::SvmLinear: {
      const auto& svm = std::get<SvmLinearModel>(model.payload);
      hyper["cost"] = svm.cost;
      j["weights"] = detail::to_json_array(svm.weights);
      j["bias"] = svm.bias;
      j["support_vectors"] = svm.support_vectors;
      j["bounded_support_vectors"] = svm.bounded_support_vectors;
      j["converged"] = svm.converged;
      j["kkt_gap"] = svm.kkt_gap;
      break;
    }
  }
  j["hyperparameters"] = hyper;
  if (model.tuning) {
    j["tuning"] = {{"parameter", model.tuning->parameter},
                   {"chosen", model.tuning->chosen},
                   {"cv_error", model.tuning->cv_error},
                   {"grid", model.tuning->grid},
                   {"errors", model.tuning->errors}};
  }
  return j;
}

/// `term,estimate,std_error,p_value`; undefined values print as NA.
inline void write_coefficient_table(std::ostream& out, const LogisticFit& fit) {
  out << "term,estimate,std_error,p_value\n";
  for (Eigen::Index k = 0; k < fit.beta.size(); ++k) {
    out << fit.terms.at(static_cast<std::size_t>(k)) << ',' << format_real(fit.beta[k]) << ','
        << format_real(fit.std_errors[k]) << ',' << format_real(fit.p_values[k]) << '\n';
  }
}

}  // namespace fairsim
