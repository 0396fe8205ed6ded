#pragma once

// Run configuration: a `key = value` text file, one entry per line, `#`
// starts a comment. Lists are comma separated. Unknown or repeated keys are
// rejected. Presets fill in sizes first; explicit keys override them.
//
//   preset       paper | desk
//   scenarios    self_censorship, threshold_binary, threshold_continuous
//   alphas       e.g. 0.2, 0.5, 0.8
//   mu_levels    depreciation levels for self_censorship
//   algorithms   logistic, logistic_aic, knn, mlp, svm_linear
//   views        full, anon
//   replicates, n_train, n_test, n_candidates, n_features, master_seed,
//   threads, out
//   knn_min_l, knn_max_l, mlp_min_size, mlp_max_size, mlp_decays, svm_cost,
//   cv_folds
//   self_censorship_test_features   observed | depreciated
//   scenario, alpha, bias_index, bias_param, replicate    (generate)
//   calibration_matrices, calibration_n_train             (calibrate)

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "fairsim/common.hpp"
#include "fairsim/experiment.hpp"

namespace fairsim {

enum class Preset : std::uint8_t { Paper, Desk };

inline Preset parse_preset(std::string_view s) {
  if (s == "paper") return Preset::Paper;
  if (s == "desk") return Preset::Desk;
  throw ConfigError("unknown preset '" + std::string(s) + "' (expected paper or desk)");
}

inline std::string_view to_string(Preset p) { return p == Preset::Paper ? "paper" : "desk"; }

struct RunConfig {
  Preset preset = Preset::Paper;
  ExperimentPlan plan;
  std::string out = "fairsim_out";

  // generate
  Scenario scenario = Scenario::ThresholdBinary;
  double alpha = 0.5;
  std::optional<std::size_t> bias_index;
  std::optional<double> bias_param;
  std::size_t replicate = 0;

  // calibrate
  std::size_t calibration_matrices = 100;
  std::size_t calibration_n_train = 200;

  /// ScenarioConfig of the single world selected by the generate keys.
  ScenarioConfig generate_config() const {
    ScenarioConfig c;
    c.scenario = scenario;
    c.alpha = alpha;
    c.n_train = plan.n_train;
    c.n_test = plan.n_test;
    c.n_candidates = plan.n_candidates;
    c.n_features = plan.n_features;
    c.master_seed = replicate_seed(plan.master_seed, scenario, alpha, replicate);
    c.test_features = plan.test_features;
    if (bias_param) {
      c.bias_param = *bias_param;
    } else {
      const auto levels = bias_levels(plan, scenario);
      const std::size_t i = bias_index.value_or(levels.size() - 1);
      if (i >= levels.size()) throw ConfigError("bias_index out of range");
      c.bias_param = levels[i].param;
    }
    c.validate();
    return c;
  }
};

inline void apply_preset(RunConfig& config, Preset preset) {
  config.preset = preset;
  config.plan.n_train = preset == Preset::Paper ? 5000 : 1000;
  config.plan.n_test = config.plan.n_train / 10;
  config.plan.replicates = preset == Preset::Paper ? 100 : 20;
}

namespace detail {

template <class T, class F>
std::vector<T> parse_list(const std::string& value, F parse_one) {
  std::vector<T> out;
  for (const auto& item : split(value, ',')) {
    if (item.empty()) throw ConfigError("empty list element in '" + value + "'");
    out.push_back(parse_one(item));
  }
  return out;
}

inline TestFeatures parse_test_features(std::string_view s) {
  if (s == "observed") return TestFeatures::Observed;
  if (s == "depreciated") return TestFeatures::Depreciated;
  throw ConfigError("unknown test feature mode '" + std::string(s) + "' (expected observed or depreciated)");
}

}  // namespace detail

/// Parses config text. `preset_override` (from the command line) wins over
/// the file's own preset key.
inline RunConfig parse_config(std::string_view text, std::optional<Preset> preset_override = std::nullopt) {
  std::map<std::string, std::pair<std::string, std::size_t>> entries;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    std::string key(trim(body.substr(0, eq)));
    std::string value(trim(body.substr(eq + 1)));
    if (key.empty() || value.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key or value");
    if (!entries.emplace(key, std::make_pair(value, line_no)).second) {
      throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
  }

  RunConfig config;
  Preset preset = Preset::Paper;
  if (auto it = entries.find("preset"); it != entries.end()) preset = parse_preset(it->second.first);
  if (preset_override) preset = *preset_override;
  apply_preset(config, preset);

  auto& plan = config.plan;
  bool n_test_given = false;
  for (const auto& [key, entry] : entries) {
    const auto& v = entry.first;
    try {
      if (key == "preset") {
      } else if (key == "scenarios") {
        plan.scenarios = detail::parse_list<Scenario>(v, [](const std::string& s) { return parse_scenario(s); });
      } else if (key == "alphas") {
        plan.alphas = detail::parse_list<double>(v, [](const std::string& s) { return parse_real(s); });
      } else if (key == "mu_levels") {
        plan.mu_levels = detail::parse_list<double>(v, [](const std::string& s) { return parse_real(s); });
      } else if (key == "algorithms") {
        plan.algorithms = detail::parse_list<Algorithm>(v, [](const std::string& s) { return parse_algorithm(s); });
      } else if (key == "views") {
        plan.views = detail::parse_list<View>(v, [](const std::string& s) { return parse_view(s); });
      } else if (key == "replicates") {
        plan.replicates = parse_int<std::size_t>(v);
      } else if (key == "n_train") {
        plan.n_train = parse_int<std::size_t>(v);
      } else if (key == "n_test") {
        plan.n_test = parse_int<std::size_t>(v);
        n_test_given = true;
      } else if (key == "n_candidates") {
        plan.n_candidates = parse_int<std::size_t>(v);
      } else if (key == "n_features") {
        plan.n_features = parse_int<std::size_t>(v);
      } else if (key == "master_seed") {
        plan.master_seed = parse_int<std::uint64_t>(v);
      } else if (key == "threads") {
        plan.threads = parse_int<std::size_t>(v);
      } else if (key == "out") {
        config.out = v;
      } else if (key == "knn_min_l") {
        plan.fit.knn.min_l = parse_int<std::size_t>(v);
      } else if (key == "knn_max_l") {
        plan.fit.knn.max_l = parse_int<std::size_t>(v);
      } else if (key == "mlp_min_size") {
        plan.fit.mlp.min_size = parse_int<std::size_t>(v);
      } else if (key == "mlp_max_size") {
        plan.fit.mlp.max_size = parse_int<std::size_t>(v);
      } else if (key == "mlp_decays") {
        plan.fit.mlp.decays = detail::parse_list<double>(v, [](const std::string& s) { return parse_real(s); });
      } else if (key == "svm_cost") {
        plan.fit.svm.cost = parse_real(v);
      } else if (key == "cv_folds") {
        plan.fit.knn.folds = plan.fit.mlp.folds = parse_int<std::size_t>(v);
      } else if (key == "self_censorship_test_features") {
        plan.test_features = detail::parse_test_features(v);
      } else if (key == "scenario") {
        config.scenario = parse_scenario(v);
      } else if (key == "alpha") {
        config.alpha = parse_real(v);
      } else if (key == "bias_index") {
        config.bias_index = parse_int<std::size_t>(v);
      } else if (key == "bias_param") {
        config.bias_param = parse_real(v);
      } else if (key == "replicate") {
        config.replicate = parse_int<std::size_t>(v);
      } else if (key == "calibration_matrices") {
        config.calibration_matrices = parse_int<std::size_t>(v);
      } else if (key == "calibration_n_train") {
        config.calibration_n_train = parse_int<std::size_t>(v);
      } else {
        throw ConfigError("unknown key '" + key + "'");
      }
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(entry.second) + ": " + e.what());
    }
  }
  if (entries.count("n_train") && !n_test_given) plan.n_test = std::max<std::size_t>(1, plan.n_train / 10);

  plan.validate();
  if (config.bias_index && config.bias_param) throw ConfigError("give bias_index or bias_param, not both");
  if (!(plan.fit.svm.cost > 0.0)) throw ConfigError("svm_cost must be positive");
  if (plan.fit.knn.min_l == 0 || plan.fit.knn.max_l < plan.fit.knn.min_l) throw ConfigError("bad knn L range");
  if (plan.fit.mlp.min_size == 0 || plan.fit.mlp.max_size < plan.fit.mlp.min_size) {
    throw ConfigError("bad mlp size range");
  }
  for (double d : plan.fit.mlp.decays) {
    if (!(d >= 0.0)) throw ConfigError("mlp decays must be non-negative");
  }
  if (plan.fit.knn.folds < 2) throw ConfigError("cv_folds must be at least 2");
  if (config.calibration_matrices == 0 || config.calibration_n_train == 0) {
    throw ConfigError("calibration sizes must be positive");
  }
  return config;
}

inline RunConfig load_config(const std::string& path, std::optional<Preset> preset_override = std::nullopt) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), preset_override);
}

}  // namespace fairsim
