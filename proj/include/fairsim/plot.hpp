#pragma once

// Figure assembly from the analysis outputs:
//   scatter_<algorithm>_<scenario>.svg   rows = alpha, columns = bias level
//   pvalues_<algorithm>_<scenario>.svg   rows = unbiased/weak/strong, columns = alpha
//   coefficients_<algorithm>_<scenario>.svg
//   knn_L_<scenario>.svg                 rows = alpha, boxes per bias level and view

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "fairsim/analysis.hpp"
#include "fairsim/svg.hpp"
#include "json.hpp"

namespace fairsim {

struct Figure {
  std::string file;
  std::string svg;
};

inline std::string bias_label(Scenario scenario, double level, double rejection) {
  if (scenario == Scenario::SelfCensorship) return "mu = " + svg::label_num(level);
  std::string out = "S = " + svg::label_num(level);
  if (std::isfinite(rejection)) out += " (" + std::to_string(static_cast<int>(std::lround(100.0 * rejection))) + "%)";
  return out;
}

inline const char* view_color(std::string_view view) { return view == "full" ? svg::kFullColor : svg::kAnonColor; }

/// One scatter grid per (algorithm, scenario) from ellipses.json.
inline std::vector<Figure> scatter_figures(const nlohmann::json& ellipses) {
  if (!ellipses.contains("cells") || !ellipses["cells"].is_array()) throw ConfigError("ellipses.json: missing 'cells'");
  struct Group {
    std::set<double> alphas;
    std::map<double, double> levels;  // level -> rejection prob
    std::vector<const nlohmann::json*> cells;
  };
  std::map<std::pair<std::string, std::string>, Group> groups;
  for (const auto& c : ellipses["cells"]) {
    for (const char* key : {"scenario", "alpha", "bias_level", "algorithm", "view", "points"}) {
      if (!c.contains(key)) throw ConfigError(std::string("ellipses.json: cell without '") + key + "'");
    }
    auto& g = groups[{c["algorithm"].get<std::string>(), c["scenario"].get<std::string>()}];
    g.alphas.insert(c["alpha"].get<double>());
    const double rej = c["rejection_prob"].is_number() ? c["rejection_prob"].get<double>() : std::nan("");
    g.levels[c["bias_level"].get<double>()] = rej;
    g.cells.push_back(&c);
  }
  std::vector<Figure> figures;
  for (const auto& [key, g] : groups) {
    const auto& [algorithm, scenario_name] = key;
    const Scenario scenario = parse_scenario(scenario_name);
    const std::vector<double> alphas(g.alphas.begin(), g.alphas.end());
    std::vector<double> levels;
    std::vector<std::string> row_labels, col_labels;
    for (double a : alphas) row_labels.push_back("alpha = " + svg::num(a));
    for (const auto& [level, rej] : g.levels) {
      levels.push_back(level);
      col_labels.push_back(bias_label(scenario, level, rej));
    }
    std::vector<std::vector<svg::ScatterPanel>> panels(alphas.size(), std::vector<svg::ScatterPanel>(levels.size()));
    for (const auto* c : g.cells) {
      const auto r = static_cast<std::size_t>(std::find(alphas.begin(), alphas.end(), (*c)["alpha"].get<double>()) -
                                              alphas.begin());
      const auto col = static_cast<std::size_t>(
          std::find(levels.begin(), levels.end(), (*c)["bias_level"].get<double>()) - levels.begin());
      svg::ScatterSeries s;
      const std::string view = (*c)["view"].get<std::string>();
      s.label = view;
      s.color = view_color(view);
      for (const auto& p : (*c)["points"]) s.points.push_back({p[0].get<double>(), p[1].get<double>()});
      const auto& e = (*c)["ellipse"];
      if (e.is_object()) {
        EllipseSpec spec;
        spec.center = {e["center"][0].get<double>(), e["center"][1].get<double>()};
        spec.semi_axes[0] = e["semi_axes"][0].get<double>();
        spec.semi_axes[1] = e["semi_axes"][1].get<double>();
        spec.rotation = e["rotation"].get<double>();
        s.ellipse = spec;
      }
      panels[r][col].series.push_back(std::move(s));
    }
    // Full view first so anonymised points draw on top in a stable order.
    for (auto& row : panels) {
      for (auto& p : row) {
        std::stable_sort(p.series.begin(), p.series.end(),
                         [](const auto& a, const auto& b) { return a.label == "full" && b.label != "full"; });
      }
    }
    figures.push_back({"scatter_" + algorithm + "_" + scenario_name + ".svg",
                       svg::scatter_grid(algorithm + " / " + scenario_name, row_labels, col_labels, panels,
                                         "accuracy, trained on perfect labels",
                                         "accuracy, trained on biased labels")});
  }
  return figures;
}

/// p-value and coefficient box grids from coefficients.csv.
inline std::vector<Figure> coefficient_figures(const CsvTable& table) {
  if (join(table.header, ",") != kCoefficientsHeader) throw ConfigError("coefficients.csv: unexpected header");
  const std::vector<std::string> row_names{"unbiased", "weak", "strong"};
  struct Group {
    std::set<double> alphas;
    std::vector<std::string> series_order;
    // (row, alpha, series label) -> values
    std::map<std::tuple<std::string, double, std::string>, std::pair<std::vector<double>, std::vector<double>>> data;
  };
  std::map<std::pair<std::string, std::string>, Group> groups;
  for (const auto& r : table.rows) {
    auto& g = groups[{r[3], r[0]}];
    const double alpha = parse_real(r[1]);
    g.alphas.insert(alpha);
    const std::string label = r[7] + " " + r[4];
    if (std::find(g.series_order.begin(), g.series_order.end(), label) == g.series_order.end()) {
      g.series_order.push_back(label);
    }
    auto& slot = g.data[{r[6], alpha, label}];
    slot.first.push_back(parse_real(r[11]));
    slot.second.push_back(parse_real(r[9]));
  }
  std::vector<Figure> figures;
  for (const auto& [key, g] : groups) {
    const auto& [algorithm, scenario] = key;
    const std::vector<double> alphas(g.alphas.begin(), g.alphas.end());
    std::vector<std::string> col_labels;
    for (double a : alphas) col_labels.push_back("alpha = " + svg::num(a));
    for (int which = 0; which < 2; ++which) {
      std::vector<std::vector<svg::BoxPanel>> panels(row_names.size(), std::vector<svg::BoxPanel>(alphas.size()));
      for (std::size_t ri = 0; ri < row_names.size(); ++ri) {
        for (std::size_t ai = 0; ai < alphas.size(); ++ai) {
          for (const auto& label : g.series_order) {
            const auto it = g.data.find({row_names[ri], alphas[ai], label});
            if (it == g.data.end()) continue;
            const std::string view = label.substr(label.rfind(' ') + 1);
            panels[ri][ai].series.push_back(
                {label, view_color(view), which == 0 ? it->second.first : it->second.second});
          }
        }
      }
      if (which == 0) {
        figures.push_back({"pvalues_" + algorithm + "_" + scenario + ".svg",
                           svg::box_grid("Wald p-values, " + algorithm + " / " + scenario, row_names, col_labels,
                                         panels, "p-value", 0.05)});
      } else {
        figures.push_back({"coefficients_" + algorithm + "_" + scenario + ".svg",
                           svg::box_grid("coefficients, " + algorithm + " / " + scenario, row_names, col_labels,
                                         panels, "estimate", 0.0)});
      }
    }
  }
  return figures;
}

inline std::vector<Figure> knn_figures(const CsvTable& table) {
  if (join(table.header, ",") != kKnnLHeader) throw ConfigError("knn_L.csv: unexpected header");
  struct Group {
    std::set<double> alphas;
    std::map<double, double> levels;
    std::map<std::tuple<double, double, std::string>, std::vector<double>> data;
  };
  std::map<std::string, Group> groups;
  for (const auto& r : table.rows) {
    auto& g = groups[r[0]];
    const double alpha = parse_real(r[1]), level = parse_real(r[2]);
    g.alphas.insert(alpha);
    g.levels[level] = parse_real(r[3]);
    g.data[{alpha, level, r[4]}].push_back(parse_real(r[6]));
  }
  std::vector<Figure> figures;
  for (const auto& [scenario_name, g] : groups) {
    const Scenario scenario = parse_scenario(scenario_name);
    std::vector<std::string> row_labels;
    std::vector<std::vector<svg::BoxPanel>> panels;
    for (double a : g.alphas) {
      row_labels.push_back("alpha = " + svg::num(a));
      svg::BoxPanel panel;
      for (const auto& [level, rej] : g.levels) {
        for (const char* view : {"full", "anon"}) {
          const auto it = g.data.find({a, level, view});
          if (it == g.data.end()) continue;
          panel.series.push_back({bias_label(scenario, level, rej) + " " + view, view_color(view), it->second});
        }
      }
      panels.push_back({std::move(panel)});
    }
    figures.push_back({"knn_L_" + scenario_name + ".svg",
                       svg::box_grid("tuned L, knn / " + scenario_name, row_labels, {"biased labels"}, panels, "L")});
  }
  return figures;
}

/// Renders every figure from an analysis directory into `out_dir`.
inline std::vector<std::string> plot_directory(const std::filesystem::path& analysis_dir,
                                               const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  const fs::path summary = analysis_dir / "summary.csv";
  const fs::path ellipses = analysis_dir / "ellipses.json";
  if (!fs::exists(summary)) throw ConfigError("missing " + summary.string());
  if (join(read_csv(summary.string()).header, ",") != kSummaryHeader) {
    throw ConfigError(summary.string() + ": unexpected header");
  }
  if (!fs::exists(ellipses)) throw ConfigError("missing " + ellipses.string());
  nlohmann::json ej;
  {
    std::ifstream in(ellipses);
    try {
      in >> ej;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(ellipses.string() + ": " + e.what());
    }
  }
  std::vector<Figure> figures = scatter_figures(ej);
  if (const fs::path p = analysis_dir / "coefficients.csv"; fs::exists(p)) {
    for (auto& f : coefficient_figures(read_csv(p.string()))) figures.push_back(std::move(f));
  }
  if (const fs::path p = analysis_dir / "knn_L.csv"; fs::exists(p)) {
    for (auto& f : knn_figures(read_csv(p.string()))) figures.push_back(std::move(f));
  }
  fs::create_directories(out_dir);
  std::vector<std::string> written;
  for (const auto& f : figures) {
    std::ofstream out(out_dir / f.file);
    if (!out) throw std::runtime_error("cannot write " + (out_dir / f.file).string());
    out << f.svg;
    written.push_back(f.file);
  }
  return written;
}

}  // namespace fairsim
