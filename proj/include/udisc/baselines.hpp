#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "udisc/utility_learn.hpp"

namespace udisc {

enum class BaselineKind { Plod, BodProxy, TopK, Skyline, MultiObjective };

std::string_view to_string(BaselineKind kind);

struct BaselineSpec {
  BaselineKind kind = BaselineKind::TopK;
  std::map<std::string, double> params;

  /// Checks kind-specific params: "k" must be a positive integer when present.
  static BaselineSpec make(BaselineKind kind, std::map<std::string, double> params = {});
  std::size_t k(std::size_t fallback) const;
};

/// Row a dominates row b: a >= b everywhere and a > b somewhere (maximization).
template <class DA, class DB>
bool dominates(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b) {
  bool strictly = false;
  for (Eigen::Index j = 0; j < a.size(); ++j) {
    if (a[j] < b[j]) return false;
    if (a[j] > b[j]) strictly = true;
  }
  return strictly;
}

struct SkylineStats {
  std::uint64_t comparisons = 0;
};

/// Block-nested-loop skyline over the rows of `points`; returns row indices, ascending.
std::vector<std::size_t> skyline_indices(const Eigen::MatrixXd& points, SkylineStats* stats = nullptr);

/// Fast non-dominated sorting; front index (0 = non-dominated) per row.
std::vector<int> nondominated_fronts(const Eigen::MatrixXd& points);

/// Crowding distance of each member of one front; boundary points get +infinity.
std::vector<double> crowding_distance(const Eigen::MatrixXd& points, std::span<const std::size_t> front);

/// Number of rows each row dominates.
std::vector<std::size_t> dominance_counts(const Eigen::MatrixXd& points);

DiscoveryResult run_plod(const NormalizedDataset& nds, std::span<const double> labels,
                         const TrainConfig& config, std::size_t k);
DiscoveryResult run_topk(const NormalizedDataset& nds, std::size_t k);
std::vector<TupleId> run_skyline(const NormalizedDataset& nds, SkylineStats* stats = nullptr);
/// Skyline as a size-k selection: score = -(number of dominators), so skyline members come first.
DiscoveryResult run_skyline_selection(const NormalizedDataset& nds, std::size_t k);
DiscoveryResult run_multiobjective(const NormalizedDataset& nds, std::size_t k);
/// Dominance-count proxy for BOD: score = number of tuples dominated.
DiscoveryResult run_bod_proxy(const NormalizedDataset& nds, std::size_t k);

DiscoveryResult run_baseline(const BaselineSpec& spec, const NormalizedDataset& nds,
                             std::span<const double> labels, const TrainConfig& config);

}  // namespace udisc
