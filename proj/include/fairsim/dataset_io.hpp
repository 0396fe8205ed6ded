#pragma once

// DatasetBundle on disk: four training CSVs, one test CSV and dataset.json.
//
//   train_{full,anon}_{perfect,biased}.csv
//       method_id,candidate_id,x1..xK[,y1..yK],z1..zK,w
//   test.csv
//       method_id,candidate_id,x1..xK,y1..yK,z1..zK,rank_perfect
//
// Rows are method-major, candidate-minor. Reals use the shortest decimal
// form that round-trips, so regenerated files are byte-identical.

#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>

#include "fairsim/common.hpp"
#include "fairsim/simgen.hpp"
#include "json.hpp"

namespace fairsim {

inline std::string feature_header(std::size_t k, View view) { return join(feature_names(k, view), ","); }

inline void write_training_csv(std::ostream& out, const DatasetBundle& bundle, View view, LabelSource labels) {
  const auto& config = bundle.provenance;
  const TrainingTable& table = bundle.table(view, labels);
  out << "method_id,candidate_id," << feature_header(config.n_features, view) << ",w\n";
  const std::size_t nd = config.n_candidates;
  for (std::size_t r = 0; r < table.rows(); ++r) {
    out << r / nd << ',' << r % nd;
    for (double v : table.row(r)) out << ',' << format_real(v);
    out << ',' << table.labels[r] << '\n';
  }
}

inline void write_test_csv(std::ostream& out, const DatasetBundle& bundle) {
  const auto& config = bundle.provenance;
  out << "method_id,candidate_id," << feature_header(config.n_features, View::Full) << ",rank_perfect\n";
  for (std::size_t i = 0; i < bundle.test_methods.size(); ++i) {
    const Matrix features = bundle.test_features(i, View::Full);
    for (Eigen::Index j = 0; j < features.rows(); ++j) {
      out << i << ',' << j;
      for (Eigen::Index c = 0; c < features.cols(); ++c) out << ',' << format_real(features(j, c));
      out << ',' << bundle.test_methods[i].rank_perfect[static_cast<std::size_t>(j)] << '\n';
    }
  }
}

inline nlohmann::json scenario_json(const ScenarioConfig& c) {
  return {{"scenario", std::string(to_string(c.scenario))},
          {"alpha", c.alpha},
          {"bias_param", c.bias_param},
          {"n_train", c.n_train},
          {"n_test", c.n_test},
          {"n_candidates", c.n_candidates},
          {"n_features", c.n_features},
          {"master_seed", c.master_seed},
          {"test_features", c.test_features == TestFeatures::Observed ? "observed" : "depreciated"}};
}

/// Writes every file of the bundle into `dir` (created if needed).
inline void write_dataset(const DatasetBundle& bundle, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json files = nlohmann::json::array();
  for (View view : {View::Full, View::Anonymous}) {
    for (LabelSource labels : {LabelSource::Perfect, LabelSource::Biased}) {
      const std::string name =
          "train_" + std::string(to_string(view)) + "_" + std::string(to_string(labels)) + ".csv";
      std::ofstream out(dir / name);
      if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
      write_training_csv(out, bundle, view, labels);
      files.push_back(name);
    }
  }
  {
    std::ofstream out(dir / "test.csv");
    if (!out) throw std::runtime_error("cannot write " + (dir / "test.csv").string());
    write_test_csv(out, bundle);
    files.push_back("test.csv");
  }
  nlohmann::json sidecar{{"format", "fairsim-dataset/1"},
                         {"config", scenario_json(bundle.provenance)},
                         {"layout", "method-major, candidate-minor, feature-innermost"},
                         {"files", files}};
  std::ofstream meta(dir / "dataset.json");
  meta << sidecar.dump(2) << '\n';
}

}  // namespace fairsim
