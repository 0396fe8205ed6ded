#pragma once

// Synthetic recruitment methods.
//
// A recruitment method is a competition between N_d candidate profiles.
// Each profile carries K objective variables X ~ N(0,1), K discriminatory
// variables Y and K proxies Z correlated with Y at level alpha. The perfect
// ranking sorts candidates by mean(X); biased rankings come from one of
// three mechanisms:
//
//   ThresholdBinary      Y ~ B(1/2), Z = U*Y + (1-U)*B, U ~ B(alpha), B ~ B(1/2);
//                        candidates with mean(Y) <= S are demoted (censored).
//   ThresholdContinuous  Y ~ N(0,1), Z = alpha/sqrt(1-alpha^2) * Y + eps;
//                        same censoring rule.
//   SelfCensorship       binary Y/Z; objective scores are depreciated to
//                        X - mu*(1-Y) and the ranking uses their mean.
//
// Tensors are stored method-major, candidate-minor, feature-innermost:
// element (i, j, k) lives at ((i * N_d) + j) * K + k.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fairsim/common.hpp"
#include "fairsim/rng.hpp"
#include "fairsim/stats.hpp"
#include "fairsim/table.hpp"

namespace fairsim {

enum class Scenario : std::uint8_t { SelfCensorship, ThresholdBinary, ThresholdContinuous };
enum class View : std::uint8_t { Full, Anonymous };
enum class LabelSource : std::uint8_t { Perfect, Biased };

/// Which objective scores test candidates present in the self-censorship
/// scenario. Observed (unbiased X) is the default.
enum class TestFeatures : std::uint8_t { Observed, Depreciated };

inline std::string_view to_string(Scenario s) {
  switch (s) {
    case Scenario::SelfCensorship: return "self_censorship";
    case Scenario::ThresholdBinary: return "threshold_binary";
    case Scenario::ThresholdContinuous: return "threshold_continuous";
  }
  return "?";
}

inline Scenario parse_scenario(std::string_view s) {
  if (s == "self_censorship") return Scenario::SelfCensorship;
  if (s == "threshold_binary") return Scenario::ThresholdBinary;
  if (s == "threshold_continuous") return Scenario::ThresholdContinuous;
  throw ConfigError("unknown scenario '" + std::string(s) + "'");
}

inline std::string_view to_string(View v) { return v == View::Full ? "full" : "anon"; }

inline View parse_view(std::string_view s) {
  if (s == "full") return View::Full;
  if (s == "anon") return View::Anonymous;
  throw ConfigError("unknown view '" + std::string(s) + "'");
}

inline std::string_view to_string(LabelSource l) {
  return l == LabelSource::Perfect ? "perfect" : "biased";
}

inline LabelSource parse_label_source(std::string_view s) {
  if (s == "perfect") return LabelSource::Perfect;
  if (s == "biased") return LabelSource::Biased;
  throw ConfigError("unknown label source '" + std::string(s) + "'");
}

inline bool is_binary(Scenario s) { return s != Scenario::ThresholdContinuous; }

struct ScenarioConfig {
  Scenario scenario = Scenario::ThresholdBinary;
  double alpha = 0.5;
  /// Threshold S for threshold scenarios, depreciation mu for self-censorship.
  double bias_param = 0.0;
  std::size_t n_train = 1000;
  std::size_t n_test = 100;
  std::size_t n_candidates = 5;
  std::size_t n_features = 5;
  std::uint64_t master_seed = 0;
  TestFeatures test_features = TestFeatures::Observed;

  void validate() const {
    if (!(alpha >= 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in [0, 1)");
    if (scenario == Scenario::SelfCensorship && !(bias_param > 0.0)) {
      throw ConfigError("self-censorship requires a depreciation mu > 0");
    }
    if (!std::isfinite(bias_param)) throw ConfigError("bias parameter must be finite");
    if (n_train == 0 || n_test == 0) throw ConfigError("n_train and n_test must be positive");
    if (n_candidates < 2) throw ConfigError("n_candidates must be at least 2");
    if (n_features == 0) throw ConfigError("n_features must be positive");
  }
};

/// Dense [method x candidate x feature] tensor.
class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(std::size_t methods, std::size_t candidates, std::size_t features)
      : methods_(methods), candidates_(candidates), features_(features),
        data_(methods * candidates * features, 0.0) {}

  std::size_t methods() const { return methods_; }
  std::size_t candidates() const { return candidates_; }
  std::size_t features() const { return features_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j, std::size_t k) {
    return data_[(i * candidates_ + j) * features_ + k];
  }
  double operator()(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[(i * candidates_ + j) * features_ + k];
  }

  std::span<const double> profile(std::size_t i, std::size_t j) const {
    return {data_.data() + (i * candidates_ + j) * features_, features_};
  }

  std::span<double> flat() { return data_; }
  std::span<const double> flat() const { return data_; }

  bool operator==(const Tensor3&) const = default;

 private:
  std::size_t methods_ = 0, candidates_ = 0, features_ = 0;
  std::vector<double> data_;
};

/// Intrinsic draws of one world, shared by every bias level.
///   x    N(0,1) objective scores
///   y    B(1/2) (binary scenarios) or N(0,1) (continuous)
///   aux  B in the binary construction, eps in the continuous one
///   mix  U ~ B(alpha), binary scenarios only (empty otherwise)
/// tie_keys holds one random priority per (method, candidate); it orders
/// equal mean(Y) values inside the censored block.
struct BaseRandomness {
  Scenario scenario = Scenario::ThresholdBinary;
  Tensor3 x, y, aux, mix;
  std::vector<std::uint64_t> tie_keys;

  std::size_t methods() const { return x.methods(); }
};

inline BaseRandomness gen_base(const ScenarioConfig& config, std::size_t method_count,
                               std::uint64_t stream_tag) {
  config.validate();
  if (method_count == 0) throw std::invalid_argument("gen_base: method_count must be positive");
  const std::size_t nd = config.n_candidates;
  const std::size_t k = config.n_features;
  const std::uint64_t seed = config.master_seed;

  BaseRandomness base;
  base.scenario = config.scenario;
  base.x = Tensor3(method_count, nd, k);
  base.y = Tensor3(method_count, nd, k);
  base.aux = Tensor3(method_count, nd, k);

  RandomStream xs(seed, {stream_tag, stream::kBlockX});
  for (double& v : base.x.flat()) v = xs.gaussian();

  RandomStream ys(seed, {stream_tag, stream::kBlockY});
  RandomStream as(seed, {stream_tag, stream::kBlockAux});
  if (is_binary(config.scenario)) {
    for (double& v : base.y.flat()) v = ys.bernoulli(0.5) ? 1.0 : 0.0;
    for (double& v : base.aux.flat()) v = as.bernoulli(0.5) ? 1.0 : 0.0;
    base.mix = Tensor3(method_count, nd, k);
    RandomStream ms(seed, {stream_tag, stream::kBlockMix});
    for (double& v : base.mix.flat()) v = ms.bernoulli(config.alpha) ? 1.0 : 0.0;
  } else {
    for (double& v : base.y.flat()) v = ys.gaussian();
    for (double& v : base.aux.flat()) v = as.gaussian();
  }

  RandomStream ts(seed, {stream_tag, stream::kTieBreak});
  base.tie_keys.resize(method_count * nd);
  for (auto& key : base.tie_keys) key = ts.next_u64();
  return base;
}

/// Binary proxy: U copies Y, otherwise the independent coin B.
constexpr int derive_z_binary(int y, int b, int u) noexcept { return u * y + (1 - u) * b; }

/// Continuous proxy with corr(Y, Z) = alpha.
inline double derive_z_continuous(double y, double eps, double alpha) {
  if (!(alpha < 1.0)) throw std::domain_error("derive_z_continuous: alpha must be < 1");
  return alpha / std::sqrt(1.0 - alpha * alpha) * y + eps;
}

/// Depreciated objective score under stereotype threat.
constexpr double self_censored_features(double x, double y, double mu) noexcept {
  return x - mu * (1.0 - y);
}

namespace detail {
inline std::vector<int> ranks_from_order(std::span<const std::size_t> order) {
  std::vector<int> ranks(order.size());
  for (std::size_t r = 0; r < order.size(); ++r) ranks[order[r]] = static_cast<int>(r) + 1;
  return ranks;
}
}  // namespace detail

/// Rank 1 goes to the largest mean; equal means keep index order.
inline std::vector<int> perfect_ranking(std::span<const double> xbar) {
  if (xbar.empty()) throw std::invalid_argument("perfect_ranking: empty input");
  std::vector<std::size_t> order(xbar.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return xbar[a] > xbar[b]; });
  return detail::ranks_from_order(order);
}

/// Candidates with ybar > S come first, ordered by descending xbar; the
/// censored block (ybar <= S) follows, ordered by descending ybar. Equal ybar
/// inside the censored block are ordered by ascending tie_keys (random
/// priorities), then by index. An empty tie_keys span means index order.
inline std::vector<int> censored_ranking(std::span<const double> xbar, std::span<const double> ybar,
                                         double threshold,
                                         std::span<const std::uint64_t> tie_keys = {}) {
  if (xbar.size() != ybar.size()) throw std::invalid_argument("censored_ranking: size mismatch");
  if (xbar.empty()) throw std::invalid_argument("censored_ranking: empty input");
  if (!tie_keys.empty() && tie_keys.size() != xbar.size()) {
    throw std::invalid_argument("censored_ranking: tie key count mismatch");
  }
  std::vector<std::size_t> retained, censored;
  for (std::size_t j = 0; j < xbar.size(); ++j) {
    (ybar[j] > threshold ? retained : censored).push_back(j);
  }
  std::stable_sort(retained.begin(), retained.end(),
                   [&](std::size_t a, std::size_t b) { return xbar[a] > xbar[b]; });
  std::stable_sort(censored.begin(), censored.end(), [&](std::size_t a, std::size_t b) {
    if (ybar[a] != ybar[b]) return ybar[a] > ybar[b];
    if (!tie_keys.empty() && tie_keys[a] != tie_keys[b]) return tie_keys[a] < tie_keys[b];
    return false;
  });
  retained.insert(retained.end(), censored.begin(), censored.end());
  return detail::ranks_from_order(retained);
}

struct ThresholdGrid {
  std::vector<double> binary;
  std::vector<double> continuous;
  std::vector<double> rejection_probs;
};

/// Thresholds giving equal censoring probabilities in the binary and
/// continuous scenarios. `count` is the number of variables averaged into
/// mean(Y) (K); P(mean(Y) <= S) = P(C <= c) with C ~ Bin(count, 1/2).
inline ThresholdGrid threshold_grid(std::size_t count) {
  if (count < 2) throw std::invalid_argument("threshold_grid: count must be at least 2");
  ThresholdGrid grid;
  const auto n = static_cast<unsigned>(count);
  const double sd = std::sqrt(1.0 / static_cast<double>(count));
  for (unsigned c = 0; c < n; ++c) {
    const double p = stats::binomial_half_cdf(c, n);
    grid.binary.push_back(static_cast<double>(c) / static_cast<double>(count));
    grid.continuous.push_back(stats::normal_quantile(p, 0.0, sd));
    grid.rejection_probs.push_back(p);
  }
  return grid;
}

/// One competition with both rankings. Per-candidate arrays are
/// candidate-major with K entries each.
struct RecruitmentMethod {
  std::size_t n_candidates = 0;
  std::size_t n_features = 0;
  std::vector<double> x, y, z, x_tilde;
  std::vector<double> xbar, ybar;
  std::vector<int> rank_perfect, rank_biased;
  std::vector<std::uint8_t> success_perfect, success_biased;

  std::span<const double> block(const std::vector<double>& v, std::size_t j) const {
    return {v.data() + j * n_features, n_features};
  }

  std::size_t perfect_winner() const {
    return static_cast<std::size_t>(
        std::find(rank_perfect.begin(), rank_perfect.end(), 1) - rank_perfect.begin());
  }
};

inline double block_mean(std::span<const double> v) {
  double s = 0.0;
  for (double e : v) s += e;
  return s / static_cast<double>(v.size());
}

inline void check_shapes(const ScenarioConfig& config, const BaseRandomness& base) {
  const auto& x = base.x;
  const bool ok = base.scenario == config.scenario && x.candidates() == config.n_candidates &&
                  x.features() == config.n_features && base.y.methods() == x.methods() &&
                  base.aux.methods() == x.methods() &&
                  base.tie_keys.size() == x.methods() * x.candidates() &&
                  (!is_binary(config.scenario) || base.mix.methods() == x.methods());
  if (!ok) throw std::invalid_argument("base randomness does not match the scenario config");
}

inline RecruitmentMethod build_method(const ScenarioConfig& config, const BaseRandomness& base,
                                      std::size_t i) {
  const std::size_t nd = config.n_candidates;
  const std::size_t k = config.n_features;
  RecruitmentMethod m;
  m.n_candidates = nd;
  m.n_features = k;
  m.x.resize(nd * k);
  m.y.resize(nd * k);
  m.z.resize(nd * k);
  for (std::size_t j = 0; j < nd; ++j) {
    for (std::size_t f = 0; f < k; ++f) {
      const std::size_t at = j * k + f;
      m.x[at] = base.x(i, j, f);
      m.y[at] = base.y(i, j, f);
      if (is_binary(config.scenario)) {
        m.z[at] = derive_z_binary(static_cast<int>(base.y(i, j, f)), static_cast<int>(base.aux(i, j, f)),
                                  static_cast<int>(base.mix(i, j, f)));
      } else {
        m.z[at] = derive_z_continuous(base.y(i, j, f), base.aux(i, j, f), config.alpha);
      }
    }
    m.xbar.push_back(block_mean(m.block(m.x, j)));
    m.ybar.push_back(block_mean(m.block(m.y, j)));
  }
  m.rank_perfect = perfect_ranking(m.xbar);

  if (config.scenario == Scenario::SelfCensorship) {
    m.x_tilde.resize(nd * k);
    std::vector<double> xtbar;
    for (std::size_t j = 0; j < nd; ++j) {
      for (std::size_t f = 0; f < k; ++f) {
        m.x_tilde[j * k + f] = self_censored_features(m.x[j * k + f], m.y[j * k + f], config.bias_param);
      }
      xtbar.push_back(block_mean(m.block(m.x_tilde, j)));
    }
    m.rank_biased = perfect_ranking(xtbar);
  } else {
    const std::span<const std::uint64_t> keys(base.tie_keys.data() + i * nd, nd);
    m.rank_biased = censored_ranking(m.xbar, m.ybar, config.bias_param, keys);
  }
  for (std::size_t j = 0; j < nd; ++j) {
    m.success_perfect.push_back(m.rank_perfect[j] == 1);
    m.success_biased.push_back(m.rank_biased[j] == 1);
  }
  return m;
}

inline std::vector<std::string> feature_names(std::size_t k, View view) {
  std::vector<std::string> names;
  for (std::size_t f = 1; f <= k; ++f) names.push_back("x" + std::to_string(f));
  if (view == View::Full) {
    for (std::size_t f = 1; f <= k; ++f) names.push_back("y" + std::to_string(f));
  }
  for (std::size_t f = 1; f <= k; ++f) names.push_back("z" + std::to_string(f));
  return names;
}

inline std::vector<FeatureBlock> feature_blocks(std::size_t k, View view) {
  std::vector<FeatureBlock> blocks(k, FeatureBlock::X);
  if (view == View::Full) blocks.insert(blocks.end(), k, FeatureBlock::Y);
  blocks.insert(blocks.end(), k, FeatureBlock::Z);
  return blocks;
}

inline std::size_t view_width(std::size_t k, View view) { return view == View::Full ? 3 * k : 2 * k; }

/// Write candidate j's feature vector for a view. `use_depreciated` swaps
/// X for X~ (self-censorship biased training rows).
inline void write_features(const RecruitmentMethod& m, std::size_t j, View view, bool use_depreciated,
                           std::span<double> out) {
  const auto& xs = use_depreciated ? m.x_tilde : m.x;
  std::size_t c = 0;
  for (double v : m.block(xs, j)) out[c++] = v;
  if (view == View::Full) {
    for (double v : m.block(m.y, j)) out[c++] = v;
  }
  for (double v : m.block(m.z, j)) out[c++] = v;
}

/// All training views of one world plus its test methods.
struct DatasetBundle {
  ScenarioConfig provenance;
  std::vector<RecruitmentMethod> train_methods;
  std::vector<RecruitmentMethod> test_methods;
  /// Indexed [view][label source].
  std::array<std::array<TrainingTable, 2>, 2> tables;

  const TrainingTable& table(View view, LabelSource labels) const {
    return tables[static_cast<std::size_t>(view)][static_cast<std::size_t>(labels)];
  }
  const TrainingTable& train_full(LabelSource labels) const { return table(View::Full, labels); }
  const TrainingTable& train_anon(LabelSource labels) const { return table(View::Anonymous, labels); }

  /// N_d x width feature matrix of a test method.
  Matrix test_features(std::size_t method, View view) const {
    const auto& m = test_methods.at(method);
    const bool depreciated = provenance.scenario == Scenario::SelfCensorship &&
                             provenance.test_features == TestFeatures::Depreciated;
    Matrix out(static_cast<Eigen::Index>(m.n_candidates),
               static_cast<Eigen::Index>(view_width(m.n_features, view)));
    for (std::size_t j = 0; j < m.n_candidates; ++j) {
      write_features(m, j, view, depreciated,
                     {out.data() + j * static_cast<std::size_t>(out.cols()), static_cast<std::size_t>(out.cols())});
    }
    return out;
  }
};

inline TrainingTable make_training_table(const ScenarioConfig& config,
                                         const std::vector<RecruitmentMethod>& methods, View view,
                                         LabelSource labels) {
  const std::size_t k = config.n_features;
  const std::size_t nd = config.n_candidates;
  const std::size_t width = view_width(k, view);
  const bool depreciated = config.scenario == Scenario::SelfCensorship && labels == LabelSource::Biased;
  TrainingTable t;
  t.features.resize(static_cast<Eigen::Index>(methods.size() * nd), static_cast<Eigen::Index>(width));
  t.labels.reserve(methods.size() * nd);
  std::size_t r = 0;
  for (const auto& m : methods) {
    for (std::size_t j = 0; j < nd; ++j, ++r) {
      write_features(m, j, view, depreciated, {t.features.data() + r * width, width});
      t.labels.push_back(labels == LabelSource::Perfect ? m.success_perfect[j] : m.success_biased[j]);
    }
  }
  t.names = feature_names(k, view);
  t.blocks = feature_blocks(k, view);
  return t;
}

/// Builds every training view (full/anonymous x perfect/biased) and the test
/// methods from shared base randomness. The bases may be reused across
/// bias parameters; only labels (and X~ in self-censorship) change.
inline DatasetBundle assemble_dataset(const ScenarioConfig& config, const BaseRandomness& train,
                                      const BaseRandomness& test) {
  config.validate();
  check_shapes(config, train);
  check_shapes(config, test);
  if (train.methods() != config.n_train || test.methods() != config.n_test) {
    throw std::invalid_argument("base method counts do not match n_train / n_test");
  }
  DatasetBundle bundle;
  bundle.provenance = config;
  bundle.train_methods.reserve(train.methods());
  for (std::size_t i = 0; i < train.methods(); ++i) bundle.train_methods.push_back(build_method(config, train, i));
  bundle.test_methods.reserve(test.methods());
  for (std::size_t i = 0; i < test.methods(); ++i) bundle.test_methods.push_back(build_method(config, test, i));
  for (View v : {View::Full, View::Anonymous}) {
    for (LabelSource l : {LabelSource::Perfect, LabelSource::Biased}) {
      bundle.tables[static_cast<std::size_t>(v)][static_cast<std::size_t>(l)] =
          make_training_table(config, bundle.train_methods, v, l);
    }
  }
  return bundle;
}

/// Train and test bases of one world (stream tags kTrain / kTest).
struct WorldBases {
  BaseRandomness train;
  BaseRandomness test;
};

inline WorldBases gen_world(const ScenarioConfig& config) {
  return {gen_base(config, config.n_train, stream::kTrain), gen_base(config, config.n_test, stream::kTest)};
}

inline DatasetBundle simulate(const ScenarioConfig& config) {
  const auto world = gen_world(config);
  return assemble_dataset(config, world.train, world.test);
}

}  // namespace fairsim
