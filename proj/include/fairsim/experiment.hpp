#pragma once

// Factorial experiment: scenarios x alphas x bias levels x algorithms x views
// x replicates. Work is grouped by (scenario, alpha, replicate): one world is
// drawn per group and every bias level, view and label source reuses it.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <thread>
#include <tuple>
#include <vector>

#include "fairsim/common.hpp"
#include "fairsim/models/model.hpp"
#include "fairsim/rng.hpp"
#include "fairsim/simgen.hpp"

namespace fairsim {

struct ExperimentPlan {
  std::vector<Scenario> scenarios{Scenario::SelfCensorship, Scenario::ThresholdBinary,
                                  Scenario::ThresholdContinuous};
  std::vector<double> alphas{0.2, 0.5, 0.8};
  std::vector<double> mu_levels{0.4, 0.8, 1.2, 1.6, 2.0};
  std::vector<Algorithm> algorithms{kAllAlgorithms.begin(), kAllAlgorithms.end()};
  std::vector<View> views{View::Full, View::Anonymous};
  std::size_t replicates = 100;
  std::size_t n_train = 5000;
  std::size_t n_test = 500;
  std::size_t n_candidates = 5;
  std::size_t n_features = 5;
  std::uint64_t master_seed = 20240901;
  TestFeatures test_features = TestFeatures::Observed;
  FitOptions fit{};
  /// 0 = FAIRSIM_THREADS, else hardware concurrency.
  std::size_t threads = 0;

  void validate() const {
    if (scenarios.empty() || alphas.empty() || algorithms.empty() || views.empty()) {
      throw ConfigError("plan has an empty axis");
    }
    if (replicates == 0) throw ConfigError("replicates must be positive");
    for (double a : alphas) {
      if (!(a >= 0.0 && a < 1.0)) throw ConfigError("alpha must lie in [0, 1)");
    }
    if (std::find(scenarios.begin(), scenarios.end(), Scenario::SelfCensorship) != scenarios.end()) {
      if (mu_levels.empty()) throw ConfigError("self-censorship needs at least one mu level");
      for (double mu : mu_levels) {
        if (!(mu > 0.0)) throw ConfigError("mu levels must be positive");
      }
    }
    if (n_train == 0 || n_test == 0) throw ConfigError("n_train and n_test must be positive");
    if (n_candidates < 2) throw ConfigError("n_candidates must be at least 2");
    if (n_features < 2) throw ConfigError("n_features must be at least 2");
  }
};

struct BiasLevel {
  std::size_t index = 0;
  double param = 0.0;
  /// P(mean(Y) <= S) for threshold scenarios; NaN for self-censorship.
  double rejection_prob = std::numeric_limits<double>::quiet_NaN();
};

inline std::vector<BiasLevel> bias_levels(const ExperimentPlan& plan, Scenario scenario) {
  std::vector<BiasLevel> levels;
  if (scenario == Scenario::SelfCensorship) {
    for (std::size_t i = 0; i < plan.mu_levels.size(); ++i) levels.push_back({i, plan.mu_levels[i]});
    return levels;
  }
  const ThresholdGrid grid = threshold_grid(plan.n_features);
  const auto& thresholds = scenario == Scenario::ThresholdBinary ? grid.binary : grid.continuous;
  for (std::size_t i = 0; i < thresholds.size(); ++i) levels.push_back({i, thresholds[i], grid.rejection_probs[i]});
  return levels;
}

/// Seed of one (scenario, alpha, replicate) world. Bias level and view are
/// deliberately absent so they share base randomness.
inline std::uint64_t replicate_seed(std::uint64_t master_seed, Scenario scenario, double alpha,
                                    std::uint64_t replicate) {
  return derive_seed(master_seed, {static_cast<std::uint64_t>(scenario) + 1, real_tag(alpha), replicate});
}

/// `scenario:alpha:bias_index:algorithm:view`, any field may be `*`.
struct CellFilter {
  std::optional<Scenario> scenario;
  std::optional<double> alpha;
  std::optional<std::size_t> bias_index;
  std::optional<Algorithm> algorithm;
  std::optional<View> view;

  static CellFilter parse(std::string_view text) {
    const auto parts = split(text, ':');
    if (parts.size() != 5) throw ConfigError("cell filter needs 5 fields: scenario:alpha:bias_index:algorithm:view");
    CellFilter f;
    auto given = [](const std::string& s) { return trim(s) != "*"; };
    if (given(parts[0])) f.scenario = parse_scenario(trim(parts[0]));
    if (given(parts[1])) f.alpha = parse_real(trim(parts[1]));
    if (given(parts[2])) f.bias_index = parse_int<std::size_t>(trim(parts[2]));
    if (given(parts[3])) f.algorithm = parse_algorithm(trim(parts[3]));
    if (given(parts[4])) f.view = parse_view(trim(parts[4]));
    return f;
  }

  bool group_matches(Scenario s, double a) const {
    return (!scenario || *scenario == s) && (!alpha || std::abs(*alpha - a) < 1e-12);
  }
  bool level_matches(std::size_t b) const { return !bias_index || *bias_index == b; }
  bool model_matches(Algorithm al, View v) const { return (!algorithm || *algorithm == al) && (!view || *view == v); }
};

struct EvalRecord {
  Scenario scenario = Scenario::ThresholdBinary;
  double alpha = 0.0;
  std::size_t bias_index = 0;
  double bias_level = 0.0;
  double rejection_prob = std::numeric_limits<double>::quiet_NaN();
  Algorithm algorithm = Algorithm::Logistic;
  View view = View::Full;
  std::size_t replicate = 0;
  double acc_perfect = std::numeric_limits<double>::quiet_NaN();
  double acc_biased = std::numeric_limits<double>::quiet_NaN();
  /// Tuned hyperparameter of the biased-trained model (L or size), NaN if none.
  double hyperparam = std::numeric_limits<double>::quiet_NaN();
  bool converged = true;
  bool failed = false;
  std::string error;

  auto key() const {
    return std::make_tuple(static_cast<int>(scenario), alpha, bias_index, static_cast<int>(algorithm),
                           static_cast<int>(view), replicate);
  }
};

/// One coefficient of one logistic fit.
struct FitDiagnostic {
  Scenario scenario = Scenario::ThresholdBinary;
  double alpha = 0.0;
  std::size_t bias_index = 0;
  double bias_level = 0.0;
  Algorithm algorithm = Algorithm::Logistic;
  View view = View::Full;
  std::size_t replicate = 0;
  LabelSource labels = LabelSource::Perfect;
  std::string term;
  std::string block;  // "intercept", "X", "Y", "Z"
  double estimate = 0.0;
  double std_error = 0.0;
  double p_value = 0.0;
  std::size_t term_index = 0;

  auto key() const {
    return std::make_tuple(static_cast<int>(scenario), alpha, bias_index, static_cast<int>(algorithm),
                           static_cast<int>(view), replicate, static_cast<int>(labels), term_index);
  }
};

struct GroupResult {
  std::vector<EvalRecord> records;
  std::vector<FitDiagnostic> diagnostics;
};

/// Fraction of test methods whose top-ranked candidate is the perfect winner.
inline double top1_accuracy(const FittedModel& model, const DatasetBundle& bundle, View view, RandomStream& rng) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < bundle.test_methods.size(); ++i) {
    const auto ranks = rank_candidates(model, bundle.test_features(i, view), rng);
    const auto top = static_cast<std::size_t>(std::find(ranks.begin(), ranks.end(), 1) - ranks.begin());
    hits += (top == bundle.test_methods[i].perfect_winner());
  }
  return static_cast<double>(hits) / static_cast<double>(bundle.test_methods.size());
}

namespace detail {

inline std::uint64_t model_tag(Algorithm a, View v, LabelSource l) {
  return (static_cast<std::uint64_t>(a) << 8) | (static_cast<std::uint64_t>(v) << 4) | static_cast<std::uint64_t>(l);
}

inline void append_diagnostics(std::vector<FitDiagnostic>& out, const FittedModel& model, const FitDiagnostic& proto,
                               const TrainingTable& table) {
  const LogisticFit* fit = model.logistic_fit();
  if (fit == nullptr) return;
  for (std::size_t k = 0; k < fit->terms.size(); ++k) {
    FitDiagnostic d = proto;
    d.term = fit->terms[k];
    d.term_index = k;
    if (k == 0) {
      d.block = "intercept";
    } else {
      const auto at = std::find(table.names.begin(), table.names.end(), d.term) - table.names.begin();
      d.block = std::string(to_string(table.blocks[static_cast<std::size_t>(at)]));
    }
    const auto e = static_cast<Eigen::Index>(k);
    d.estimate = fit->beta[e];
    d.std_error = fit->std_errors[e];
    d.p_value = fit->p_values[e];
    out.push_back(std::move(d));
  }
}

struct TrainedModel {
  std::optional<FittedModel> model;
  std::string error;
};

inline TrainedModel train_guarded(Algorithm a, const TrainingTable& table, FitOptions options) {
  TrainedModel t;
  try {
    t.model = fit_algorithm(a, table, options);
  } catch (const std::exception& e) {
    t.error = e.what();
  }
  return t;
}

}  // namespace detail

/// All cells of one (scenario, alpha, replicate) world that pass `filter`.
inline GroupResult run_group(const ExperimentPlan& plan, Scenario scenario, double alpha, std::size_t replicate,
                             const CellFilter& filter = {}) {
  GroupResult result;
  const auto levels = bias_levels(plan, scenario);
  ScenarioConfig config;
  config.scenario = scenario;
  config.alpha = alpha;
  config.bias_param = levels.front().param;
  config.n_train = plan.n_train;
  config.n_test = plan.n_test;
  config.n_candidates = plan.n_candidates;
  config.n_features = plan.n_features;
  config.master_seed = replicate_seed(plan.master_seed, scenario, alpha, replicate);
  config.test_features = plan.test_features;
  const WorldBases world = gen_world(config);

  std::map<std::uint64_t, detail::TrainedModel> perfect_cache;
  for (const BiasLevel& level : levels) {
    if (!filter.level_matches(level.index)) continue;
    config.bias_param = level.param;
    const DatasetBundle bundle = assemble_dataset(config, world.train, world.test);
    for (Algorithm algorithm : plan.algorithms) {
      for (View view : plan.views) {
        if (!filter.model_matches(algorithm, view)) continue;
        EvalRecord rec;
        rec.scenario = scenario;
        rec.alpha = alpha;
        rec.bias_index = level.index;
        rec.bias_level = level.param;
        rec.rejection_prob = level.rejection_prob;
        rec.algorithm = algorithm;
        rec.view = view;
        rec.replicate = replicate;

        FitDiagnostic proto;
        proto.scenario = scenario;
        proto.alpha = alpha;
        proto.bias_index = level.index;
        proto.bias_level = level.param;
        proto.algorithm = algorithm;
        proto.view = view;
        proto.replicate = replicate;

        const auto perfect_tag = detail::model_tag(algorithm, view, LabelSource::Perfect);
        auto cached = perfect_cache.find(perfect_tag);
        if (cached == perfect_cache.end()) {
          FitOptions options = plan.fit;
          options.seed = derive_seed(config.master_seed, {stream::kModel, perfect_tag});
          const auto& table = bundle.table(view, LabelSource::Perfect);
          cached = perfect_cache.emplace(perfect_tag, detail::train_guarded(algorithm, table, options)).first;
          if (cached->second.model) {
            proto.labels = LabelSource::Perfect;
            detail::append_diagnostics(result.diagnostics, *cached->second.model, proto, table);
          }
        }
        const auto biased_tag = detail::model_tag(algorithm, view, LabelSource::Biased);
        FitOptions options = plan.fit;
        options.seed = derive_seed(config.master_seed, {stream::kModel, biased_tag});
        const auto& biased_table = bundle.table(view, LabelSource::Biased);
        const detail::TrainedModel biased = detail::train_guarded(algorithm, biased_table, options);
        if (biased.model) {
          proto.labels = LabelSource::Biased;
          detail::append_diagnostics(result.diagnostics, *biased.model, proto, biased_table);
        }

        const auto& perfect = cached->second;
        if (!perfect.model || !biased.model) {
          rec.failed = true;
          rec.converged = false;
          rec.error = !perfect.model ? "perfect: " + perfect.error : "biased: " + biased.error;
        } else {
          RandomStream perfect_eval(config.master_seed, {stream::kEvaluation, perfect_tag});
          RandomStream biased_eval(config.master_seed, {stream::kEvaluation, biased_tag});
          rec.acc_perfect = top1_accuracy(*perfect.model, bundle, view, perfect_eval);
          rec.acc_biased = top1_accuracy(*biased.model, bundle, view, biased_eval);
          rec.hyperparam = biased.model->hyperparam();
          rec.converged = perfect.model->converged() && biased.model->converged();
        }
        result.records.push_back(std::move(rec));
      }
    }
  }
  return result;
}

/// One cell, one replicate.
inline EvalRecord run_cell(const ExperimentPlan& plan, Scenario scenario, double alpha, std::size_t bias_index,
                           Algorithm algorithm, View view, std::size_t replicate) {
  CellFilter filter{scenario, alpha, bias_index, algorithm, view};
  auto group = run_group(plan, scenario, alpha, replicate, filter);
  if (group.records.size() != 1) throw std::invalid_argument("cell is not part of the plan");
  return group.records.front();
}

inline std::size_t resolve_threads(std::size_t requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("FAIRSIM_THREADS")) {
    try {
      const auto n = parse_int<std::size_t>(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
    }
  }
  return std::max(1U, std::thread::hardware_concurrency());
}

struct RunSummary {
  std::vector<EvalRecord> records;
  std::vector<FitDiagnostic> diagnostics;
  std::size_t failures = 0;
  double wall_seconds = 0.0;
};

struct GroupId {
  Scenario scenario;
  double alpha;
  std::size_t replicate;
};

/// Called after each finished group (under the sink lock).
using GroupSink = std::function<void(const GroupId&, const GroupResult&, std::size_t done, std::size_t total)>;

inline void sort_canonical(std::vector<EvalRecord>& records) {
  std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) { return a.key() < b.key(); });
}

inline void sort_canonical(std::vector<FitDiagnostic>& diagnostics) {
  std::sort(diagnostics.begin(), diagnostics.end(), [](const auto& a, const auto& b) { return a.key() < b.key(); });
}

inline RunSummary run_plan(const ExperimentPlan& plan, const CellFilter& filter = {}, const GroupSink& sink = {}) {
  plan.validate();
  const auto start = std::chrono::steady_clock::now();
  std::vector<GroupId> groups;
  for (Scenario s : plan.scenarios) {
    for (double a : plan.alphas) {
      if (!filter.group_matches(s, a)) continue;
      for (std::size_t r = 0; r < plan.replicates; ++r) groups.push_back({s, a, r});
    }
  }

  RunSummary summary;
  std::mutex sink_mutex;
  std::atomic<std::size_t> next{0};
  std::size_t done = 0;
  std::exception_ptr fatal;
  auto worker = [&] {
    for (;;) {
      const std::size_t g = next.fetch_add(1);
      if (g >= groups.size()) return;
      try {
        GroupResult result = run_group(plan, groups[g].scenario, groups[g].alpha, groups[g].replicate, filter);
        std::lock_guard lock(sink_mutex);
        ++done;
        if (sink) sink(groups[g], result, done, groups.size());
        for (auto& r : result.records) summary.records.push_back(std::move(r));
        for (auto& d : result.diagnostics) summary.diagnostics.push_back(std::move(d));
      } catch (...) {
        std::lock_guard lock(sink_mutex);
        if (!fatal) fatal = std::current_exception();
        next = groups.size();
        return;
      }
    }
  };
  const std::size_t threads = std::min(resolve_threads(plan.threads), std::max<std::size_t>(1, groups.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (fatal) std::rethrow_exception(fatal);

  sort_canonical(summary.records);
  sort_canonical(summary.diagnostics);
  for (const auto& r : summary.records) summary.failures += r.failed;
  summary.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return summary;
}

// ---- results files ----

inline constexpr std::string_view kResultsHeader =
    "scenario,alpha,bias_level,rejection_prob,algorithm,view,replicate,acc_perfect,acc_biased,hyperparam,converged";

inline constexpr std::string_view kFitsHeader =
    "scenario,alpha,bias_index,bias_level,algorithm,view,replicate,labels,term,block,estimate,std_error,p_value";

inline void write_record(std::ostream& out, const EvalRecord& r) {
  out << to_string(r.scenario) << ',' << format_real(r.alpha) << ',' << format_real(r.bias_level) << ','
      << format_real(r.rejection_prob) << ',' << to_string(r.algorithm) << ',' << to_string(r.view) << ','
      << r.replicate << ',' << format_real(r.acc_perfect) << ',' << format_real(r.acc_biased) << ','
      << format_real(r.hyperparam) << ',' << (r.failed ? "failed" : r.converged ? "1" : "0") << '\n';
}

inline void write_results_csv(std::ostream& out, const std::vector<EvalRecord>& records) {
  out << kResultsHeader << '\n';
  for (const auto& r : records) write_record(out, r);
}

inline void write_diagnostic(std::ostream& out, const FitDiagnostic& d) {
  out << to_string(d.scenario) << ',' << format_real(d.alpha) << ',' << d.bias_index << ','
      << format_real(d.bias_level) << ',' << to_string(d.algorithm) << ',' << to_string(d.view) << ','
      << d.replicate << ',' << to_string(d.labels) << ',' << d.term << ',' << d.block << ','
      << format_real(d.estimate) << ',' << format_real(d.std_error) << ',' << format_real(d.p_value) << '\n';
}

inline void write_fits_csv(std::ostream& out, const std::vector<FitDiagnostic>& diagnostics) {
  out << kFitsHeader << '\n';
  for (const auto& d : diagnostics) write_diagnostic(out, d);
}

inline void require_header(const CsvTable& t, std::string_view expected, const std::string& what) {
  if (join(t.header, ",") != expected) throw ConfigError(what + ": unexpected header '" + join(t.header, ",") + "'");
}

/// Reads results.csv. bias_index is recovered as the position of the bias
/// level among the distinct levels of its scenario, in ascending order.
inline std::vector<EvalRecord> read_results_csv(const std::string& path) {
  const CsvTable t = read_csv(path);
  require_header(t, kResultsHeader, path);
  std::vector<EvalRecord> records;
  for (const auto& row : t.rows) {
    EvalRecord r;
    r.scenario = parse_scenario(row[0]);
    r.alpha = parse_real(row[1]);
    r.bias_level = parse_real(row[2]);
    r.rejection_prob = parse_real(row[3]);
    r.algorithm = parse_algorithm(row[4]);
    r.view = parse_view(row[5]);
    r.replicate = parse_int<std::size_t>(row[6]);
    r.acc_perfect = parse_real(row[7]);
    r.acc_biased = parse_real(row[8]);
    r.hyperparam = parse_real(row[9]);
    r.failed = row[10] == "failed";
    r.converged = row[10] == "1";
    if (!r.failed && row[10] != "0" && row[10] != "1") throw ConfigError(path + ": bad converged flag '" + row[10] + "'");
    records.push_back(std::move(r));
  }
  std::map<int, std::vector<double>> levels;
  for (const auto& r : records) levels[static_cast<int>(r.scenario)].push_back(r.bias_level);
  for (auto& [s, v] : levels) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
  for (auto& r : records) {
    const auto& v = levels[static_cast<int>(r.scenario)];
    r.bias_index = static_cast<std::size_t>(std::lower_bound(v.begin(), v.end(), r.bias_level) - v.begin());
  }
  return records;
}

inline std::vector<FitDiagnostic> read_fits_csv(const std::string& path) {
  const CsvTable t = read_csv(path);
  require_header(t, kFitsHeader, path);
  std::vector<FitDiagnostic> out;
  std::map<std::tuple<int, double, std::size_t, int, int, std::size_t, int>, std::size_t> term_counter;
  for (const auto& row : t.rows) {
    FitDiagnostic d;
    d.scenario = parse_scenario(row[0]);
    d.alpha = parse_real(row[1]);
    d.bias_index = parse_int<std::size_t>(row[2]);
    d.bias_level = parse_real(row[3]);
    d.algorithm = parse_algorithm(row[4]);
    d.view = parse_view(row[5]);
    d.replicate = parse_int<std::size_t>(row[6]);
    d.labels = parse_label_source(row[7]);
    d.term = row[8];
    d.block = row[9];
    d.estimate = parse_real(row[10]);
    d.std_error = parse_real(row[11]);
    d.p_value = parse_real(row[12]);
    d.term_index = term_counter[{static_cast<int>(d.scenario), d.alpha, d.bias_index, static_cast<int>(d.algorithm),
                                 static_cast<int>(d.view), d.replicate, static_cast<int>(d.labels)}]++;
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace fairsim
