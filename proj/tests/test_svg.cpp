#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <string>

#include "fairsim/plot.hpp"

using namespace fairsim;

namespace {

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto at = text.find(needle); at != std::string::npos; at = text.find(needle, at + 1)) ++n;
  return n;
}

std::filesystem::path temp_dir(const std::string& name) {
  auto d = std::filesystem::temp_directory_path() / ("fairsim_test_svg_" + name);
  std::filesystem::remove_all(d);
  std::filesystem::create_directories(d);
  return d;
}

}  // namespace

TEST_CASE("scatter grid has one panel and one identity line per cell") {
  std::vector<std::vector<svg::ScatterPanel>> panels(3, std::vector<svg::ScatterPanel>(5));
  panels[0][0].series.push_back({"full", svg::kFullColor, {{0.5, 0.4}, {0.6, 0.5}, {0.55, 0.3}}, std::nullopt});
  const auto text = svg::scatter_grid("t", {"a", "b", "c"}, {"1", "2", "3", "4", "5"}, panels, "x", "y");
  CHECK(text.rfind("<?xml", 0) == 0);
  CHECK(count(text, "class=\"panel\"") == 15);
  CHECK(count(text, "class=\"identity\"") == 15);
  CHECK(text.find("</svg>") != std::string::npos);
}

TEST_CASE("ellipses are drawn as closed outlines") {
  std::vector<std::vector<svg::ScatterPanel>> panels(1, std::vector<svg::ScatterPanel>(1));
  EllipseSpec e;
  e.center = {0.5, 0.5};
  e.semi_axes[0] = 0.1;
  e.semi_axes[1] = 0.05;
  panels[0][0].series.push_back({"anon", svg::kAnonColor, {{0.5, 0.5}, {0.4, 0.6}}, e});
  const auto text = svg::scatter_grid("t", {"r"}, {"c"}, panels, "x", "y");
  CHECK(count(text, "class=\"ellipse\"") == 1);
  CHECK(text.find(svg::kAnonColor) != std::string::npos);
}

TEST_CASE("box grid renders a reference line and one box per series") {
  std::vector<std::vector<svg::BoxPanel>> panels(3, std::vector<svg::BoxPanel>(3));
  panels[1][2].series.push_back({"x1 full", svg::kFullColor, {0.01, 0.2, 0.03, 0.5, 0.04}});
  panels[1][2].series.push_back({"x1 anon", svg::kAnonColor, {0.1, 0.2}});
  const auto text = svg::box_grid("p", {"u", "w", "s"}, {"a", "b", "c"}, panels, "p-value", 0.05);
  CHECK(count(text, "class=\"panel\"") == 9);
  CHECK(count(text, "class=\"reference\"") == 9);
  CHECK(count(text, "class=\"box\"") == 2);
}

TEST_CASE("type-7 quantiles") {
  const std::vector<double> v{1, 2, 3, 4};
  CHECK(svg::quantile_sorted(v, 0.5) == Catch::Approx(2.5));
  CHECK(svg::quantile_sorted(v, 0.25) == Catch::Approx(1.75));
  CHECK(svg::quantile_sorted(v, 1.0) == 4.0);
  CHECK(std::isnan(svg::quantile_sorted({}, 0.5)));
}

TEST_CASE("labels escape markup") { CHECK(svg::escape("a<b&c") == "a&lt;b&amp;c"); }

TEST_CASE("bias labels show the rejection share") {
  CHECK(bias_label(Scenario::ThresholdBinary, 0.2, 6.0 / 32.0) == "S = 0.2 (19%)");
  CHECK(bias_label(Scenario::SelfCensorship, 0.8, std::nan("")) == "mu = 0.8");
}

TEST_CASE("plot_directory renders every figure kind") {
  const auto dir = temp_dir("full");
  std::vector<EvalRecord> records;
  for (std::size_t rep = 0; rep < 4; ++rep) {
    for (double level : {0.0, 0.2}) {
      for (View v : {View::Full, View::Anonymous}) {
        EvalRecord r;
        r.scenario = Scenario::ThresholdBinary;
        r.alpha = 0.5;
        r.bias_level = level;
        r.rejection_prob = level == 0.0 ? 1.0 / 32.0 : 6.0 / 32.0;
        r.algorithm = Algorithm::Knn;
        r.view = v;
        r.replicate = rep;
        r.acc_perfect = 0.5 + 0.03 * static_cast<double>(rep);
        r.acc_biased = 0.4 + 0.01 * static_cast<double>(rep * rep);
        r.hyperparam = 10.0 + static_cast<double>(rep);
        records.push_back(r);
      }
    }
  }
  {
    std::ofstream out(dir / "summary.csv");
    write_summary_csv(out, summarize(records));
    std::ofstream ell(dir / "ellipses.json");
    ell << ellipses_json(summarize(records), "memory").dump();
    std::ofstream knn(dir / "knn_L.csv");
    write_knn_L_csv(knn, knn_L_table(records));
    std::ofstream coef(dir / "coefficients.csv");
    write_coefficients_csv(coef, {});
  }
  const auto files = plot_directory(dir, dir / "figures");
  REQUIRE(files.size() == 2);
  CHECK(files[0] == "scatter_knn_threshold_binary.svg");
  CHECK(files[1] == "knn_L_threshold_binary.svg");
  std::ifstream in(dir / "figures" / files[0]);
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(count(text, "class=\"panel\"") == 2);
  CHECK(count(text, "class=\"ellipse\"") == 4);
}

TEST_CASE("plot_directory rejects missing or malformed inputs") {
  const auto dir = temp_dir("bad");
  CHECK_THROWS_AS(plot_directory(dir, dir / "figures"), ConfigError);
  std::ofstream(dir / "summary.csv") << "wrong,header\n";
  CHECK_THROWS_AS(plot_directory(dir, dir / "figures"), ConfigError);
  std::ofstream(dir / "summary.csv") << kSummaryHeader << '\n';
  std::ofstream(dir / "ellipses.json") << "{\"cells\": [{\"scenario\": \"threshold_binary\"}]}";
  CHECK_THROWS_AS(plot_directory(dir, dir / "figures"), ConfigError);
}
