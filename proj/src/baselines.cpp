#include "udisc/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace udisc {

std::string_view to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::Plod: return "plod";
    case BaselineKind::BodProxy: return "bod";
    case BaselineKind::TopK: return "topk";
    case BaselineKind::Skyline: return "skyline";
    case BaselineKind::MultiObjective: return "moo";
  }
  return "unknown";
}

BaselineSpec BaselineSpec::make(BaselineKind kind, std::map<std::string, double> params) {
  for (const auto& [key, value] : params) {
    if (key != "k") throw Error(ErrorCode::InvalidArgument, "unknown baseline parameter '" + key + "'");
    if (!(value >= 1.0) || value != std::floor(value)) {
      throw Error(ErrorCode::InvalidArgument, "baseline k must be a positive integer");
    }
  }
  return BaselineSpec{kind, std::move(params)};
}

std::size_t BaselineSpec::k(std::size_t fallback) const {
  auto it = params.find("k");
  return it == params.end() ? fallback : static_cast<std::size_t>(it->second);
}

namespace {

Eigen::MatrixXd objectives(const NormalizedDataset& nds, std::size_t minimum, ErrorCode code) {
  Eigen::MatrixXd x = nds.dataset.numeric_matrix();
  if (static_cast<std::size_t>(x.cols()) < minimum) {
    throw Error(code, "need at least " + std::to_string(minimum) + " numeric attribute(s), found " +
                          std::to_string(x.cols()));
  }
  return x;
}

DiscoveryResult select(const NormalizedDataset& nds, const Eigen::VectorXd& scores, std::size_t k) {
  return select_top_k(make_scored(nds.dataset.tuple_ids, scores), k);
}

}  // namespace

std::vector<std::size_t> skyline_indices(const Eigen::MatrixXd& points, SkylineStats* stats) {
  std::vector<std::size_t> window;
  std::uint64_t comparisons = 0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    bool dominated = false;
    for (auto it = window.begin(); it != window.end();) {
      ++comparisons;
      const auto w = static_cast<Eigen::Index>(*it);
      if (dominates(points.row(w), points.row(i))) {
        dominated = true;
        break;
      }
      if (dominates(points.row(i), points.row(w))) {
        it = window.erase(it);
      } else {
        ++it;
      }
    }
    if (!dominated) window.push_back(static_cast<std::size_t>(i));
  }
  if (stats) stats->comparisons += comparisons;
  std::sort(window.begin(), window.end());
  return window;
}

std::vector<int> nondominated_fronts(const Eigen::MatrixXd& points) {
  const auto n = static_cast<std::size_t>(points.rows());
  std::vector<std::vector<std::size_t>> dominated_by_p(n);
  std::vector<std::size_t> domination_count(n, 0);
  std::vector<int> front(n, -1);

  std::vector<std::size_t> current;
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t q = 0; q < n; ++q) {
      if (p == q) continue;
      const auto pr = points.row(static_cast<Eigen::Index>(p));
      const auto qr = points.row(static_cast<Eigen::Index>(q));
      if (dominates(pr, qr)) {
        dominated_by_p[p].push_back(q);
      } else if (dominates(qr, pr)) {
        ++domination_count[p];
      }
    }
    if (domination_count[p] == 0) {
      front[p] = 0;
      current.push_back(p);
    }
  }

  int rank = 0;
  while (!current.empty()) {
    std::vector<std::size_t> next;
    for (std::size_t p : current) {
      for (std::size_t q : dominated_by_p[p]) {
        if (--domination_count[q] == 0) {
          front[q] = rank + 1;
          next.push_back(q);
        }
      }
    }
    ++rank;
    current = std::move(next);
  }
  return front;
}

std::vector<double> crowding_distance(const Eigen::MatrixXd& points, std::span<const std::size_t> front) {
  const std::size_t size = front.size();
  std::vector<double> distance(size, 0.0);
  if (size <= 2) {
    std::fill(distance.begin(), distance.end(), std::numeric_limits<double>::infinity());
    return distance;
  }
  std::vector<std::size_t> order(size);
  for (Eigen::Index m = 0; m < points.cols(); ++m) {
    std::iota(order.begin(), order.end(), 0);
    auto value = [&](std::size_t local) { return points(static_cast<Eigen::Index>(front[local]), m); };
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return value(a) < value(b); });
    const double lo = value(order.front());
    const double hi = value(order.back());
    distance[order.front()] = std::numeric_limits<double>::infinity();
    distance[order.back()] = std::numeric_limits<double>::infinity();
    if (!(hi > lo)) continue;
    for (std::size_t i = 1; i + 1 < size; ++i) {
      distance[order[i]] += (value(order[i + 1]) - value(order[i - 1])) / (hi - lo);
    }
  }
  return distance;
}

std::vector<std::size_t> dominance_counts(const Eigen::MatrixXd& points) {
  const auto n = points.rows();
  std::vector<std::size_t> counts(static_cast<std::size_t>(n), 0);
  for (Eigen::Index p = 0; p < n; ++p)
    for (Eigen::Index q = 0; q < n; ++q)
      if (p != q && dominates(points.row(p), points.row(q))) ++counts[static_cast<std::size_t>(p)];
  return counts;
}

DiscoveryResult run_plod(const NormalizedDataset& nds, std::span<const double> labels,
                         const TrainConfig& config, std::size_t k) {
  const NumericFit fit = fit_numeric(nds, labels, config.ridge_lambda);
  const UtilityModel model = build_synthetic(fit, nullptr);
  return select(nds, score_rows(model, nds.dataset.numeric_matrix()), k);
}

DiscoveryResult run_topk(const NormalizedDataset& nds, std::size_t k) {
  const Eigen::MatrixXd x = objectives(nds, 1, ErrorCode::NoNumericAttributes);
  return select(nds, x.rowwise().mean(), k);
}

std::vector<TupleId> run_skyline(const NormalizedDataset& nds, SkylineStats* stats) {
  const Eigen::MatrixXd x = objectives(nds, 1, ErrorCode::NoNumericAttributes);
  std::vector<TupleId> ids;
  for (std::size_t i : skyline_indices(x, stats)) ids.push_back(nds.dataset.tuple_ids[i]);
  std::sort(ids.begin(), ids.end());
  return ids;
}

DiscoveryResult run_skyline_selection(const NormalizedDataset& nds, std::size_t k) {
  const Eigen::MatrixXd x = objectives(nds, 1, ErrorCode::NoNumericAttributes);
  Eigen::VectorXd scores = Eigen::VectorXd::Zero(x.rows());
  for (Eigen::Index p = 0; p < x.rows(); ++p)
    for (Eigen::Index q = 0; q < x.rows(); ++q)
      if (p != q && dominates(x.row(q), x.row(p))) scores[p] -= 1.0;
  return select(nds, scores, k);
}

DiscoveryResult run_multiobjective(const NormalizedDataset& nds, std::size_t k) {
  const Eigen::MatrixXd x = objectives(nds, 2, ErrorCode::NeedTwoObjectives);
  const std::vector<int> front = nondominated_fronts(x);
  const int fronts = front.empty() ? 0 : *std::max_element(front.begin(), front.end()) + 1;

  // Encode (front asc, crowding desc) as one score: front f occupies [-f, -f + 0.5].
  Eigen::VectorXd scores(x.rows());
  for (int f = 0; f < fronts; ++f) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < front.size(); ++i)
      if (front[i] == f) members.push_back(i);
    const auto crowding = crowding_distance(x, members);
    for (std::size_t m = 0; m < members.size(); ++m) {
      const double c = crowding[m];
      const double bonus = std::isinf(c) ? 0.5 : 0.5 * c / (1.0 + c);
      scores[static_cast<Eigen::Index>(members[m])] = -static_cast<double>(f) + bonus;
    }
  }
  return select(nds, scores, k);
}

DiscoveryResult run_bod_proxy(const NormalizedDataset& nds, std::size_t k) {
  const Eigen::MatrixXd x = objectives(nds, 1, ErrorCode::NoNumericAttributes);
  const auto counts = dominance_counts(x);
  Eigen::VectorXd scores(x.rows());
  for (std::size_t i = 0; i < counts.size(); ++i) scores[static_cast<Eigen::Index>(i)] = static_cast<double>(counts[i]);
  return select(nds, scores, k);
}

DiscoveryResult run_baseline(const BaselineSpec& spec, const NormalizedDataset& nds,
                             std::span<const double> labels, const TrainConfig& config) {
  const std::size_t k = spec.k(config.k);
  switch (spec.kind) {
    case BaselineKind::Plod: return run_plod(nds, labels, config, k);
    case BaselineKind::BodProxy: return run_bod_proxy(nds, k);
    case BaselineKind::TopK: return run_topk(nds, k);
    case BaselineKind::Skyline: return run_skyline_selection(nds, k);
    case BaselineKind::MultiObjective: return run_multiobjective(nds, k);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown baseline kind");
}

}  // namespace udisc
