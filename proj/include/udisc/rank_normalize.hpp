#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "udisc/core_model.hpp"

namespace udisc {

struct ScaleRange {
  double min = 0.0;
  double max = 0.0;

  /// Min-max scaling, clamped to [0, 1]; a degenerate range maps to 0.5.
  double apply(double v) const {
    if (!(max > min)) return 0.5;
    const double s = (v - min) / (max - min);
    return s < 0.0 ? 0.0 : (s > 1.0 ? 1.0 : s);
  }
};

using ScaleParams = std::map<std::string, ScaleRange>;

struct NormalizedDataset {
  Dataset dataset;  // numeric columns rescaled into [0, 1]
  ScaleParams scale_params;
  AttributeRanking ranking;
};

/// Linear rank weights: position r (1-based) of m gets (m - r + 1) / (m (m + 1) / 2).
AttributeRanking build_ranking(const std::vector<std::string>& order, const Dataset& ds);

/// Per-column min-max scaling of numeric attributes; text passes through.
NormalizedDataset normalize(const Dataset& ds, const AttributeRanking& ranking);

/// Scales an unseen tuple with training-time ranges; output follows the input order.
/// Values outside the training range clamp.
std::vector<double> apply_scale(const ScaleParams& params,
                                const std::vector<std::pair<std::string, double>>& raw_tuple);

/// Scales a dataset with stored params instead of its own min/max (scoring new data).
NormalizedDataset normalize_with(const Dataset& ds, const ScaleParams& params,
                                 const AttributeRanking& ranking);

/// Reads a ranking file: one attribute per line, best first; '#' starts a comment.
std::vector<std::string> parse_ranking_text(std::string_view text);

}  // namespace udisc
