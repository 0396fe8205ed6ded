#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fairsim/common.hpp"

namespace fairsim {

enum class FeatureBlock : std::uint8_t { X, Y, Z };

inline std::string_view to_string(FeatureBlock b) {
  switch (b) {
    case FeatureBlock::X: return "X";
    case FeatureBlock::Y: return "Y";
    case FeatureBlock::Z: return "Z";
  }
  return "?";
}

/// Pooled candidate rows with a binary success label. Rows carry no method
/// identity: learners never see which candidates competed together.
struct TrainingTable {
  Matrix features;
  std::vector<int> labels;
  std::vector<std::string> names;
  std::vector<FeatureBlock> blocks;

  std::size_t rows() const { return static_cast<std::size_t>(features.rows()); }
  std::size_t width() const { return static_cast<std::size_t>(features.cols()); }

  std::span<const double> row(std::size_t i) const {
    return {features.data() + i * width(), width()};
  }

  std::size_t positives() const {
    std::size_t n = 0;
    for (int l : labels) n += (l == 1);
    return n;
  }

  /// Throws FitError unless the table is consistent and holds both labels.
  void check_fittable() const {
    if (labels.size() != rows()) throw FitError("label count does not match row count");
    if (names.size() != width() || blocks.size() != width()) {
      throw FitError("feature metadata does not match table width");
    }
    for (int l : labels) {
      if (l != 0 && l != 1) throw FitError("labels must be 0 or 1");
    }
    const auto pos = positives();
    if (rows() < 2 || pos == 0 || pos == rows()) throw FitError("degenerate labels");
  }

  TrainingTable subset(std::span<const std::size_t> indices) const {
    TrainingTable out;
    out.features.resize(static_cast<Eigen::Index>(indices.size()), features.cols());
    out.labels.reserve(indices.size());
    for (std::size_t r = 0; r < indices.size(); ++r) {
      out.features.row(static_cast<Eigen::Index>(r)) =
          features.row(static_cast<Eigen::Index>(indices[r]));
      out.labels.push_back(labels[indices[r]]);
    }
    out.names = names;
    out.blocks = blocks;
    return out;
  }
};

}  // namespace fairsim
