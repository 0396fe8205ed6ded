#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <vector>

#include "fairsim/analysis.hpp"
#include "oracles.hpp"

using namespace fairsim;

namespace {

std::vector<Point2> gaussian_cloud(RandomStream& rng, std::size_t n, double sx, double sy, double rho) {
  std::vector<Point2> pts;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = rng.gaussian(), b = rng.gaussian();
    pts.push_back({sx * a, sy * (rho * a + std::sqrt(1.0 - rho * rho) * b)});
  }
  return pts;
}

EvalRecord record(double level, std::size_t rep, double ap, double ab, Algorithm alg = Algorithm::Logistic) {
  EvalRecord r;
  r.scenario = Scenario::ThresholdBinary;
  r.alpha = 0.5;
  r.bias_level = level;
  r.rejection_prob = 0.5;
  r.algorithm = alg;
  r.view = View::Full;
  r.replicate = rep;
  r.acc_perfect = ap;
  r.acc_biased = ab;
  return r;
}

std::filesystem::path temp_dir(const std::string& name) {
  auto d = std::filesystem::temp_directory_path() / ("fairsim_test_analysis_" + name);
  std::filesystem::remove_all(d);
  std::filesystem::create_directories(d);
  return d;
}

}  // namespace

TEST_CASE("chi-square quantile of the 95% ellipse") {
  CHECK(ellipse_quantile() == Catch::Approx(-2.0 * std::log(0.05)).epsilon(1e-10));
}

TEST_CASE("unit-covariance cloud gives a circle of radius about 2.448") {
  RandomStream rng(801);
  const auto pts = gaussian_cloud(rng, 100000, 1.0, 1.0, 0.0);
  const auto e = ellipse_95(pts);
  CHECK(e.semi_axes[0] == Catch::Approx(2.4477).margin(0.05));
  CHECK(e.semi_axes[1] == Catch::Approx(2.4477).margin(0.05));
  CHECK(std::abs(e.center.x) < 0.02);
  CHECK(std::abs(e.center.y) < 0.02);
}

TEST_CASE("axis-aligned covariance has zero rotation and a 2:1 axis ratio") {
  RandomStream rng(802);
  const auto pts = gaussian_cloud(rng, 100000, 2.0, 1.0, 0.0);
  const auto e = ellipse_95(pts);
  CHECK(std::abs(e.rotation) < 0.02);
  CHECK(e.semi_axes[0] / e.semi_axes[1] == Catch::Approx(2.0).margin(0.03));
}

TEST_CASE("positively correlated cloud tilts towards the diagonal") {
  RandomStream rng(803);
  const auto e = ellipse_95(gaussian_cloud(rng, 50000, 1.0, 1.0, 0.8));
  CHECK(e.rotation == Catch::Approx(std::numbers::pi / 4).margin(0.03));
}

TEST_CASE("the ellipse covers 95% of fresh draws") {
  RandomStream rng(804);
  const auto fit_pts = gaussian_cloud(rng, 100000, 1.5, 0.7, -0.4);
  const auto e = ellipse_95(fit_pts);
  const auto test_pts = gaussian_cloud(rng, 100000, 1.5, 0.7, -0.4);
  std::size_t inside = 0, oracle_inside = 0;
  double mx = 0, my = 0;
  for (const auto& p : fit_pts) {
    mx += p.x;
    my += p.y;
  }
  mx /= fit_pts.size();
  my /= fit_pts.size();
  double sxx = 0, syy = 0, sxy = 0;
  for (const auto& p : fit_pts) {
    sxx += (p.x - mx) * (p.x - mx);
    syy += (p.y - my) * (p.y - my);
    sxy += (p.x - mx) * (p.y - my);
  }
  const double d = static_cast<double>(fit_pts.size() - 1);
  for (const auto& p : test_pts) {
    inside += e.contains(p);
    oracle_inside += oracle::inside_95(mx, my, sxx / d, syy / d, sxy / d, p.x, p.y);
  }
  CHECK(static_cast<double>(inside) / test_pts.size() == Catch::Approx(0.95).margin(0.005));
  CHECK(std::abs(static_cast<double>(inside) - static_cast<double>(oracle_inside)) <= 20.0);
}

TEST_CASE("degenerate point sets have no ellipse") {
  std::vector<Point2> line{{0, 0}, {1, 1}, {2, 2}, {3, 3}};
  CHECK_THROWS_WITH(ellipse_95(line), "collinear points");
  std::vector<Point2> two{{0, 0}, {1, 0}};
  CHECK_THROWS_AS(ellipse_95(two), std::invalid_argument);
  std::vector<Point2> same{{0.3, 0.3}, {0.3, 0.3}, {0.3, 0.3}};
  CHECK_THROWS_AS(ellipse_95(same), std::invalid_argument);
}

TEST_CASE("a single-record cell summarises to that record") {
  const auto cells = summarize({record(0.2, 0, 0.6, 0.4)});
  REQUIRE(cells.size() == 1);
  CHECK(cells[0].mean_perfect == 0.6);
  CHECK(cells[0].mean_biased == 0.4);
  CHECK(cells[0].n == 1);
  CHECK(std::isnan(cells[0].sd_perfect));
  CHECK_FALSE(cells[0].ellipse.has_value());
}

TEST_CASE("aggregation is linear over disjoint record sets") {
  RandomStream rng(805);
  std::vector<EvalRecord> a, b, all;
  for (std::size_t i = 0; i < 30; ++i) {
    auto r = record(0.4, i, rng.uniform(), rng.uniform());
    (i < 12 ? a : b).push_back(r);
    all.push_back(r);
  }
  const auto sa = summarize(a), sb = summarize(b), s = summarize(all);
  CHECK(s[0].mean_perfect == Catch::Approx((12 * sa[0].mean_perfect + 18 * sb[0].mean_perfect) / 30));
  CHECK(s[0].mean_biased == Catch::Approx((12 * sa[0].mean_biased + 18 * sb[0].mean_biased) / 30));
}

TEST_CASE("failed replicates are counted but excluded") {
  std::vector<EvalRecord> recs{record(0.2, 0, 0.5, 0.5), record(0.2, 1, 0.7, 0.3), record(0.2, 2, 0.6, 0.6)};
  recs[1].failed = true;
  recs[1].acc_perfect = recs[1].acc_biased = std::nan("");
  const auto cells = summarize(recs);
  CHECK(cells[0].n == 2);
  CHECK(cells[0].failed == 1);
  CHECK(cells[0].mean_perfect == Catch::Approx(0.55));
}

TEST_CASE("summaries never modify their input") {
  std::vector<EvalRecord> recs{record(0.2, 0, 0.5, 0.5), record(0.4, 1, 0.7, 0.3)};
  const auto before = recs;
  (void)summarize(recs);
  (void)knn_L_table(recs);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    CHECK(recs[i].key() == before[i].key());
    CHECK(recs[i].acc_perfect == before[i].acc_perfect);
  }
}

TEST_CASE("coefficient rows map labels and bias index to table rows") {
  std::vector<FitDiagnostic> diags;
  for (std::size_t idx = 0; idx < 5; ++idx) {
    FitDiagnostic d;
    d.algorithm = Algorithm::Logistic;
    d.labels = LabelSource::Biased;
    d.bias_index = idx;
    d.term = "x1";
    diags.push_back(d);
  }
  FitDiagnostic p;
  p.labels = LabelSource::Perfect;
  diags.push_back(p);
  FitDiagnostic other;
  other.algorithm = Algorithm::Knn;
  diags.push_back(other);
  const auto rows = coefficient_tables(diags);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].row == BiasRow::Weak);
  CHECK(rows[1].row == BiasRow::Strong);
  CHECK(rows[2].row == BiasRow::Unbiased);
}

TEST_CASE("knn L table keeps only tuned neighbour counts") {
  auto a = record(0.2, 0, 0.5, 0.5, Algorithm::Knn);
  a.hyperparam = 17;
  auto b = record(0.2, 1, 0.5, 0.5, Algorithm::Logistic);
  const auto rows = knn_L_table({a, b});
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].neighbours == 17);
  CHECK(knn_L_table({}).empty());
}

TEST_CASE("analysing an empty results file writes empty tables") {
  const auto dir = temp_dir("empty");
  std::ofstream(dir / "results.csv") << kResultsHeader << '\n';
  analyze_files(dir / "results.csv", dir / "analysis");
  const auto summary = read_csv((dir / "analysis" / "summary.csv").string());
  CHECK(join(summary.header, ",") == kSummaryHeader);
  CHECK(summary.rows.empty());
  CHECK(read_csv((dir / "analysis" / "coefficients.csv").string()).rows.empty());
  CHECK(read_csv((dir / "analysis" / "knn_L.csv").string()).rows.empty());
  CHECK(std::filesystem::exists(dir / "analysis" / "ellipses.json"));
}

TEST_CASE("analysis rejects a malformed results file") {
  const auto dir = temp_dir("bad");
  std::ofstream(dir / "results.csv") << "a,b,c\n1,2,3\n";
  CHECK_THROWS_AS(analyze_files(dir / "results.csv", dir / "analysis"), ConfigError);
  CHECK_THROWS(analyze_files(dir / "missing.csv", dir / "analysis"));
}
