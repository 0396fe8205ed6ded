#pragma once

// Reductions of experiment output: per-cell accuracy summaries with 95%
// Gaussian ellipses, logistic coefficient tables and tuned-L tables.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "fairsim/common.hpp"
#include "fairsim/experiment.hpp"
#include "fairsim/stats.hpp"
#include "json.hpp"

namespace fairsim {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// Confidence region {p : (p - c)^T Sigma^-1 (p - c) <= q} with q the 0.95
/// quantile of chi-square(2). semi_axes[0] is the major axis; rotation is
/// its angle to the x axis in radians, in (-pi/2, pi/2].
struct EllipseSpec {
  Point2 center;
  double semi_axes[2] = {0.0, 0.0};
  double rotation = 0.0;

  bool contains(Point2 p) const {
    const double c = std::cos(rotation), s = std::sin(rotation);
    const double dx = p.x - center.x, dy = p.y - center.y;
    const double u = (c * dx + s * dy) / semi_axes[0];
    const double v = (-s * dx + c * dy) / semi_axes[1];
    return u * u + v * v <= 1.0;
  }
};

inline double ellipse_quantile() { return stats::chi_squared_quantile(0.95, 2.0); }

inline EllipseSpec ellipse_95(std::span<const Point2> points) {
  if (points.size() < 3) throw std::invalid_argument("ellipse needs at least 3 points");
  const auto n = static_cast<double>(points.size());
  double mx = 0.0, my = 0.0;
  for (const auto& p : points) {
    mx += p.x;
    my += p.y;
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (const auto& p : points) {
    sxx += (p.x - mx) * (p.x - mx);
    syy += (p.y - my) * (p.y - my);
    sxy += (p.x - mx) * (p.y - my);
  }
  Eigen::Matrix2d cov;
  cov << sxx / (n - 1.0), sxy / (n - 1.0), sxy / (n - 1.0), syy / (n - 1.0);
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
  const double small = eig.eigenvalues()[0];
  const double large = eig.eigenvalues()[1];
  if (!(large > 0.0) || small <= 1e-12 * large) throw std::invalid_argument("collinear points");

  const double q = ellipse_quantile();
  EllipseSpec e;
  e.center = {mx, my};
  e.semi_axes[0] = std::sqrt(large * q);
  e.semi_axes[1] = std::sqrt(small * q);
  const Eigen::Vector2d major = eig.eigenvectors().col(1);
  double angle = std::atan2(major.y(), major.x());
  if (angle <= -std::numbers::pi / 2) angle += std::numbers::pi;
  if (angle > std::numbers::pi / 2) angle -= std::numbers::pi;
  e.rotation = angle;
  return e;
}

struct SummaryCell {
  Scenario scenario = Scenario::ThresholdBinary;
  double alpha = 0.0;
  std::size_t bias_index = 0;
  double bias_level = 0.0;
  double rejection_prob = 0.0;
  Algorithm algorithm = Algorithm::Logistic;
  View view = View::Full;
  std::size_t n = 0;       // usable replicates
  std::size_t failed = 0;  // replicates with a failed fit
  double mean_perfect = 0.0, sd_perfect = 0.0;
  double mean_biased = 0.0, sd_biased = 0.0;
  std::optional<EllipseSpec> ellipse;
  std::vector<Point2> points;  // (acc_perfect, acc_biased) per replicate
};

/// Per-cell aggregation over replicates. Failed replicates are counted but
/// excluded from the means; the ellipse is absent when it is undefined.
inline std::vector<SummaryCell> summarize(const std::vector<EvalRecord>& records) {
  using Key = std::tuple<int, double, double, int, int>;
  std::map<Key, SummaryCell> cells;
  for (const auto& r : records) {
    const Key key{static_cast<int>(r.scenario), r.alpha, r.bias_level, static_cast<int>(r.algorithm),
                  static_cast<int>(r.view)};
    auto [it, fresh] = cells.try_emplace(key);
    SummaryCell& c = it->second;
    if (fresh) {
      c.scenario = r.scenario;
      c.alpha = r.alpha;
      c.bias_index = r.bias_index;
      c.bias_level = r.bias_level;
      c.rejection_prob = r.rejection_prob;
      c.algorithm = r.algorithm;
      c.view = r.view;
    }
    if (r.failed || std::isnan(r.acc_perfect) || std::isnan(r.acc_biased)) {
      ++c.failed;
      continue;
    }
    c.points.push_back({r.acc_perfect, r.acc_biased});
  }
  std::vector<SummaryCell> out;
  out.reserve(cells.size());
  for (auto& [key, c] : cells) {
    c.n = c.points.size();
    std::vector<double> xs, ys;
    for (const auto& p : c.points) {
      xs.push_back(p.x);
      ys.push_back(p.y);
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    c.mean_perfect = c.n ? stats::mean(xs) : nan;
    c.mean_biased = c.n ? stats::mean(ys) : nan;
    c.sd_perfect = c.n > 1 ? std::sqrt(stats::variance(xs)) : nan;
    c.sd_biased = c.n > 1 ? std::sqrt(stats::variance(ys)) : nan;
    try {
      c.ellipse = ellipse_95(c.points);
    } catch (const std::invalid_argument&) {
      c.ellipse.reset();
    }
    out.push_back(std::move(c));
  }
  return out;
}

/// Row of a coefficient table: perfect labels, weak bias or strong bias.
enum class BiasRow : std::uint8_t { Unbiased, Weak, Strong };

inline std::string_view to_string(BiasRow r) {
  switch (r) {
    case BiasRow::Unbiased: return "unbiased";
    case BiasRow::Weak: return "weak";
    case BiasRow::Strong: return "strong";
  }
  return "?";
}

struct CoefficientRow {
  FitDiagnostic fit;
  BiasRow row = BiasRow::Unbiased;
};

/// Long-format coefficients of logistic fits. Perfect-label fits form the
/// unbiased row; biased fits at `weak_index` / `strong_index` (the 19% and
/// 97% levels of the default grid) form the weak and strong rows.
inline std::vector<CoefficientRow> coefficient_tables(const std::vector<FitDiagnostic>& diagnostics,
                                                      std::size_t weak_index = 1, std::size_t strong_index = 4) {
  std::vector<CoefficientRow> out;
  for (const auto& d : diagnostics) {
    if (!is_logistic(d.algorithm)) continue;
    if (d.labels == LabelSource::Perfect) {
      out.push_back({d, BiasRow::Unbiased});
    } else if (d.bias_index == weak_index) {
      out.push_back({d, BiasRow::Weak});
    } else if (d.bias_index == strong_index) {
      out.push_back({d, BiasRow::Strong});
    }
  }
  return out;
}

struct KnnLRow {
  Scenario scenario = Scenario::ThresholdBinary;
  double alpha = 0.0;
  double bias_level = 0.0;
  double rejection_prob = 0.0;
  View view = View::Full;
  std::size_t replicate = 0;
  double neighbours = 0.0;
};

inline std::vector<KnnLRow> knn_L_table(const std::vector<EvalRecord>& records) {
  std::vector<KnnLRow> out;
  for (const auto& r : records) {
    if (r.algorithm != Algorithm::Knn || r.failed || std::isnan(r.hyperparam)) continue;
    out.push_back({r.scenario, r.alpha, r.bias_level, r.rejection_prob, r.view, r.replicate, r.hyperparam});
  }
  return out;
}

// ---- writers ----

inline constexpr std::string_view kSummaryHeader =
    "scenario,alpha,bias_level,rejection_prob,algorithm,view,n,failed,mean_acc_perfect,sd_acc_perfect,"
    "mean_acc_biased,sd_acc_biased,ellipse_cx,ellipse_cy,ellipse_major,ellipse_minor,ellipse_rotation";

inline constexpr std::string_view kCoefficientsHeader =
    "scenario,alpha,bias_level,algorithm,view,replicate,row,term,block,estimate,std_error,p_value";

inline constexpr std::string_view kKnnLHeader = "scenario,alpha,bias_level,rejection_prob,view,replicate,L";

inline void write_summary_csv(std::ostream& out, const std::vector<SummaryCell>& cells) {
  out << kSummaryHeader << '\n';
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& c : cells) {
    const EllipseSpec e = c.ellipse.value_or(EllipseSpec{{nan, nan}, {nan, nan}, nan});
    out << to_string(c.scenario) << ',' << format_real(c.alpha) << ',' << format_real(c.bias_level) << ','
        << format_real(c.rejection_prob) << ',' << to_string(c.algorithm) << ',' << to_string(c.view) << ','
        << c.n << ',' << c.failed << ',' << format_real(c.mean_perfect) << ',' << format_real(c.sd_perfect) << ','
        << format_real(c.mean_biased) << ',' << format_real(c.sd_biased) << ',' << format_real(e.center.x) << ','
        << format_real(e.center.y) << ',' << format_real(e.semi_axes[0]) << ',' << format_real(e.semi_axes[1])
        << ',' << format_real(e.rotation) << '\n';
  }
}

inline void write_coefficients_csv(std::ostream& out, const std::vector<CoefficientRow>& rows) {
  out << kCoefficientsHeader << '\n';
  for (const auto& r : rows) {
    const auto& d = r.fit;
    out << to_string(d.scenario) << ',' << format_real(d.alpha) << ',' << format_real(d.bias_level) << ','
        << to_string(d.algorithm) << ',' << to_string(d.view) << ',' << d.replicate << ',' << to_string(r.row)
        << ',' << d.term << ',' << d.block << ',' << format_real(d.estimate) << ',' << format_real(d.std_error)
        << ',' << format_real(d.p_value) << '\n';
  }
}

inline void write_knn_L_csv(std::ostream& out, const std::vector<KnnLRow>& rows) {
  out << kKnnLHeader << '\n';
  for (const auto& r : rows) {
    out << to_string(r.scenario) << ',' << format_real(r.alpha) << ',' << format_real(r.bias_level) << ','
        << format_real(r.rejection_prob) << ',' << to_string(r.view) << ',' << r.replicate << ','
        << format_real(r.neighbours) << '\n';
  }
}

namespace detail {
inline nlohmann::json real_json(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }
}  // namespace detail

/// Ellipses and scatter points per cell, for the plot emitter.
inline nlohmann::json ellipses_json(const std::vector<SummaryCell>& cells, const std::string& source) {
  nlohmann::json cells_json = nlohmann::json::array();
  for (const auto& c : cells) {
    nlohmann::json j;
    j["scenario"] = std::string(to_string(c.scenario));
    j["alpha"] = c.alpha;
    j["bias_level"] = c.bias_level;
    j["rejection_prob"] = detail::real_json(c.rejection_prob);
    j["algorithm"] = std::string(to_string(c.algorithm));
    j["view"] = std::string(to_string(c.view));
    if (c.ellipse) {
      j["ellipse"] = {{"center", {c.ellipse->center.x, c.ellipse->center.y}},
                      {"semi_axes", {c.ellipse->semi_axes[0], c.ellipse->semi_axes[1]}},
                      {"rotation", c.ellipse->rotation}};
    } else {
      j["ellipse"] = nullptr;
    }
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : c.points) pts.push_back({p.x, p.y});
    j["points"] = std::move(pts);
    cells_json.push_back(std::move(j));
  }
  return {{"format", "fairsim-ellipses/1"},
          {"source", source},
          {"chi2_quantile", ellipse_quantile()},
          {"cells", std::move(cells_json)}};
}

/// Reads results.csv (and fits.csv next to it, when present) and writes
/// summary.csv, coefficients.csv, knn_L.csv and ellipses.json into out_dir.
inline void analyze_files(const std::filesystem::path& results_path, const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  if (!fs::exists(results_path)) throw std::runtime_error("missing results file " + results_path.string());
  const auto records = read_results_csv(results_path.string());
  std::vector<FitDiagnostic> diagnostics;
  if (const fs::path fits = results_path.parent_path() / "fits.csv"; fs::exists(fits)) {
    diagnostics = read_fits_csv(fits.string());
  }
  const auto cells = summarize(records);
  fs::create_directories(out_dir);
  auto open = [&](const char* name) {
    std::ofstream out(out_dir / name);
    if (!out) throw std::runtime_error("cannot write " + (out_dir / name).string());
    return out;
  };
  {
    auto out = open("summary.csv");
    write_summary_csv(out, cells);
  }
  {
    auto out = open("coefficients.csv");
    write_coefficients_csv(out, coefficient_tables(diagnostics));
  }
  {
    auto out = open("knn_L.csv");
    write_knn_L_csv(out, knn_L_table(records));
  }
  {
    auto out = open("ellipses.json");
    out << ellipses_json(cells, results_path.string()).dump(1) << '\n';
  }
}

}  // namespace fairsim
