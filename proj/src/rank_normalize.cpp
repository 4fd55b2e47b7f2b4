#include "udisc/rank_normalize.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace udisc {

AttributeRanking build_ranking(const std::vector<std::string>& order, const Dataset& ds) {
  std::set<std::string> seen;
  for (const auto& a : order) {
    if (!seen.insert(a).second) {
      throw Error(ErrorCode::DuplicateAttribute, "attribute '" + a + "' appears twice in the ranking");
    }
  }
  for (const auto& a : order) {
    if (!ds.find(a)) throw Error(ErrorCode::NotAPermutation, "ranked attribute '" + a + "' is not a column");
  }
  for (const auto& c : ds.columns) {
    if (!seen.count(c.name)) {
      throw Error(ErrorCode::NotAPermutation, "attribute '" + c.name + "' is missing from the ranking");
    }
  }
  if (order.empty()) throw Error(ErrorCode::NotAPermutation, "ranking is empty");

  AttributeRanking ranking;
  ranking.order = order;
  const double m = static_cast<double>(order.size());
  const double total = m * (m + 1.0) / 2.0;
  for (std::size_t r = 0; r < order.size(); ++r) {
    ranking.weights[order[r]] = (m - static_cast<double>(r)) / total;
  }
  return ranking;
}

namespace {

ScaleRange column_range(const std::vector<double>& v) {
  if (v.empty()) return {};
  auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return {*lo, *hi};
}

}  // namespace

NormalizedDataset normalize_with(const Dataset& ds, const ScaleParams& params,
                                 const AttributeRanking& ranking) {
  NormalizedDataset out{ds, {}, ranking};
  for (auto& c : out.dataset.columns) {
    if (!c.is_numeric()) continue;
    auto it = params.find(c.name);
    if (it == params.end()) throw Error(ErrorCode::UnknownAttribute, "no scale range for '" + c.name + "'");
    for (auto& v : c.numeric_values) v = it->second.apply(v);
    out.scale_params[c.name] = it->second;
  }
  return out;
}

NormalizedDataset normalize(const Dataset& ds, const AttributeRanking& ranking) {
  for (const auto& c : ds.columns) {
    if (!ranking.weights.count(c.name)) {
      throw Error(ErrorCode::NotAPermutation, "ranking does not cover attribute '" + c.name + "'");
    }
  }
  ScaleParams params;
  for (const auto& c : ds.columns)
    if (c.is_numeric()) params[c.name] = column_range(c.numeric_values);
  return normalize_with(ds, params, ranking);
}

std::vector<double> apply_scale(const ScaleParams& params,
                                const std::vector<std::pair<std::string, double>>& raw_tuple) {
  std::vector<double> out;
  out.reserve(raw_tuple.size());
  for (const auto& [name, value] : raw_tuple) {
    auto it = params.find(name);
    if (it == params.end()) throw Error(ErrorCode::UnknownAttribute, "no scale range for '" + name + "'");
    out.push_back(it->second.apply(value));
  }
  return out;
}

std::vector<std::string> parse_ranking_text(std::string_view text) {
  std::vector<std::string> order;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t\r");
    order.push_back(line.substr(b, e - b + 1));
  }
  return order;
}

}  // namespace udisc
