// fairsim command line: generate, calibrate, run, analyze, plot.
//
// Exit codes: 0 success, 1 runtime failure, 2 configuration or schema error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "fairsim/fairsim.hpp"
#include "json.hpp"

#ifndef FAIRSIM_VERSION
#define FAIRSIM_VERSION "dev"
#endif

namespace fs = std::filesystem;
using namespace fairsim;

namespace {

struct CommonFlags {
  std::string config;
  std::string out;
  std::string preset;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config, "key = value configuration file");
  cmd->add_option("--out", flags.out, "output directory");
  cmd->add_option("--preset", flags.preset, "size preset")->check(CLI::IsMember({"paper", "desk"}));
  cmd->add_option("--seed", flags.seed, "master seed (overrides the config)");
}

RunConfig resolve_config(const CommonFlags& flags) {
  std::optional<Preset> preset;
  if (!flags.preset.empty()) preset = parse_preset(flags.preset);
  RunConfig config = flags.config.empty() ? parse_config("", preset) : load_config(flags.config, preset);
  if (!flags.out.empty()) config.out = flags.out;
  if (flags.seed) config.plan.master_seed = *flags.seed;
  return config;
}

nlohmann::json plan_json(const ExperimentPlan& plan) {
  nlohmann::json j;
  for (auto s : plan.scenarios) j["scenarios"].push_back(std::string(to_string(s)));
  j["alphas"] = plan.alphas;
  j["mu_levels"] = plan.mu_levels;
  for (auto a : plan.algorithms) j["algorithms"].push_back(std::string(to_string(a)));
  for (auto v : plan.views) j["views"].push_back(std::string(to_string(v)));
  j["replicates"] = plan.replicates;
  j["n_train"] = plan.n_train;
  j["n_test"] = plan.n_test;
  j["n_candidates"] = plan.n_candidates;
  j["n_features"] = plan.n_features;
  j["master_seed"] = plan.master_seed;
  j["self_censorship_test_features"] = plan.test_features == TestFeatures::Observed ? "observed" : "depreciated";
  j["knn_l"] = {plan.fit.knn.min_l, plan.fit.knn.max_l};
  j["mlp_size"] = {plan.fit.mlp.min_size, plan.fit.mlp.max_size};
  j["mlp_decays"] = plan.fit.mlp.decays;
  j["svm_cost"] = plan.fit.svm.cost;
  j["cv_folds"] = plan.fit.knn.folds;
  return j;
}

int cmd_generate(const CommonFlags& flags) {
  const RunConfig config = resolve_config(flags);
  const ScenarioConfig sc = config.generate_config();
  const DatasetBundle bundle = simulate(sc);
  write_dataset(bundle, config.out);
  std::cerr << "wrote dataset (" << to_string(sc.scenario) << ", alpha " << format_real(sc.alpha) << ", bias "
            << format_real(sc.bias_param) << ") to " << config.out << '\n';
  return 0;
}

int cmd_calibrate(const CommonFlags& flags, const std::string& kind_name) {
  const RunConfig config = resolve_config(flags);
  const CalibrationKind kind = parse_calibration_kind(kind_name);
  CalibrationSettings settings;
  settings.matrices = config.calibration_matrices;
  settings.n_train = config.calibration_n_train;
  settings.folds = config.plan.fit.knn.folds;
  const auto report = calibrate(kind, config.plan, settings, [](std::size_t done, std::size_t total) {
    std::cerr << "\r[" << done << '/' << total << "] calibrating" << std::flush;
  });
  std::cerr << '\n';
  fs::create_directories(config.out);
  const fs::path path = fs::path(config.out) / ("calibration_" + kind_name + ".csv");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_calibration_csv(out, report);

  const std::string column = kind == CalibrationKind::Knn ? "L" : kind == CalibrationKind::Mlp ? "size" : "winner";
  std::cout << column << " distribution over " << report.rows.size() << " matrices:\n";
  for (const auto& [value, count] : calibration_counts(report, column)) std::cout << "  " << value << ": " << count << '\n';
  if (kind == CalibrationKind::Mlp) {
    std::cout << "decay distribution:\n";
    for (const auto& [value, count] : calibration_counts(report, "decay")) std::cout << "  " << value << ": " << count << '\n';
  }
  std::cout << "wrote " << path.string() << '\n';
  return 0;
}

int cmd_run(const CommonFlags& flags, const std::string& cell) {
  const RunConfig config = resolve_config(flags);
  const CellFilter filter = cell.empty() ? CellFilter{} : CellFilter::parse(cell);
  fs::create_directories(config.out);
  const fs::path results = fs::path(config.out) / "results.csv";
  const fs::path partial = fs::path(config.out) / "results.csv.partial";
  std::ofstream stream(partial);
  if (!stream) throw std::runtime_error("cannot write " + partial.string());
  stream << kResultsHeader << '\n';

  const auto summary = run_plan(config.plan, filter, [&](const GroupId& g, const GroupResult& r, std::size_t done,
                                                         std::size_t total) {
    for (const auto& rec : r.records) write_record(stream, rec);
    stream.flush();
    std::size_t failed = 0;
    for (const auto& rec : r.records) failed += rec.failed;
    std::cerr << '[' << done << '/' << total << "] " << to_string(g.scenario) << " alpha=" << format_real(g.alpha)
              << " replicate=" << g.replicate << " cells=" << r.records.size();
    if (failed) std::cerr << " failed=" << failed;
    std::cerr << '\n';
  });
  stream.close();

  {
    std::ofstream out(results);
    write_results_csv(out, summary.records);
  }
  {
    std::ofstream out(fs::path(config.out) / "fits.csv");
    write_fits_csv(out, summary.diagnostics);
  }
  fs::remove(partial);
  nlohmann::json manifest{{"format", "fairsim-manifest/1"},
                          {"version", FAIRSIM_VERSION},
                          {"preset", std::string(to_string(config.preset))},
                          {"plan", plan_json(config.plan)},
                          {"master_seed", config.plan.master_seed},
                          {"cell_filter", cell.empty() ? "*:*:*:*:*" : cell},
                          {"records", summary.records.size()},
                          {"failures", summary.failures},
                          {"wall_seconds", summary.wall_seconds}};
  for (const auto& r : summary.records) {
    if (r.failed) {
      manifest["failed_cells"].push_back({{"scenario", std::string(to_string(r.scenario))},
                                          {"alpha", r.alpha},
                                          {"bias_level", r.bias_level},
                                          {"algorithm", std::string(to_string(r.algorithm))},
                                          {"view", std::string(to_string(r.view))},
                                          {"replicate", r.replicate},
                                          {"error", r.error}});
    }
  }
  std::ofstream(fs::path(config.out) / "manifest.json") << manifest.dump(2) << '\n';
  std::cerr << summary.records.size() << " records (" << summary.failures << " failed) in "
            << format_real(std::round(summary.wall_seconds * 10.0) / 10.0) << " s -> " << results.string() << '\n';
  return 0;
}

int cmd_analyze(const std::string& results, const std::string& out_flag) {
  const fs::path out = out_flag.empty() ? fs::path(results).parent_path() / "analysis" : fs::path(out_flag);
  analyze_files(results, out);
  std::cerr << "wrote summary.csv, coefficients.csv, knn_L.csv, ellipses.json to " << out.string() << '\n';
  return 0;
}

int cmd_plot(const std::string& analysis_dir, const std::string& out_flag) {
  const fs::path out = out_flag.empty() ? fs::path(analysis_dir) / "figures" : fs::path(out_flag);
  const auto files = plot_directory(analysis_dir, out);
  for (const auto& f : files) std::cout << (out / f).string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fairsim: recruitment-bias simulation and classifier benchmark"};
  app.require_subcommand(1);
  app.set_version_flag("--version", FAIRSIM_VERSION);

  CommonFlags gen_flags, cal_flags, run_flags;
  auto* gen = app.add_subcommand("generate", "write one simulated dataset (CSV + JSON)");
  add_common(gen, gen_flags);

  std::string kind;
  auto* cal = app.add_subcommand("calibrate", "hyperparameter-range calibration on perfect labels");
  cal->add_option("kind", kind, "knn | mlp | svm-kernel")->required()->check(CLI::IsMember({"knn", "mlp", "svm-kernel"}));
  add_common(cal, cal_flags);

  std::string cell;
  auto* run = app.add_subcommand("run", "execute the experiment plan");
  add_common(run, run_flags);
  run->add_option("--cell", cell, "scenario:alpha:bias_index:algorithm:view, '*' matches anything");

  std::string results, analyze_out;
  auto* analyze = app.add_subcommand("analyze", "reduce results.csv to summary tables");
  analyze->add_option("results", results, "results.csv from run")->required();
  analyze->add_option("--out", analyze_out, "output directory (default: <results dir>/analysis)");

  std::string analysis_dir, plot_out;
  auto* plot = app.add_subcommand("plot", "render SVG figures from analyze output");
  plot->add_option("analysis", analysis_dir, "directory written by analyze")->required();
  plot->add_option("--out", plot_out, "output directory (default: <analysis>/figures)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*gen) return cmd_generate(gen_flags);
    if (*cal) return cmd_calibrate(cal_flags, kind);
    if (*run) return cmd_run(run_flags, cell);
    if (*analyze) return cmd_analyze(results, analyze_out);
    if (*plot) return cmd_plot(analysis_dir, plot_out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
