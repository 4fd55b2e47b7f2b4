#include "udisc/attr_graph.hpp"

#include <algorithm>
#include <cmath>

#include "udisc/random.hpp"

namespace udisc {

namespace {

// A series whose spread is rounding noise (e.g. unit embedding norms) carries no variation.
bool is_flat(const Eigen::VectorXd& s) {
  if (s.size() < 2) return true;
  const double spread = s.maxCoeff() - s.minCoeff();
  return !(spread > 1e-12 * std::max(1.0, s.cwiseAbs().maxCoeff()));
}

// |Pearson correlation|, or nullopt when either side is flat.
std::optional<double> abs_correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (is_flat(a) || is_flat(b)) return std::nullopt;
  const Eigen::VectorXd ca = a.array() - a.mean();
  const Eigen::VectorXd cb = b.array() - b.mean();
  return std::min(1.0, std::abs(ca.dot(cb)) / std::sqrt(ca.squaredNorm() * cb.squaredNorm()));
}

double threshold(double w) { return w < AttributeGraph::kEdgeThreshold ? 0.0 : w; }

}  // namespace

AttributeGraph AttributeGraph::from_adjacency(std::vector<std::string> nodes, Eigen::MatrixXd adjacency) {
  const auto m = static_cast<Eigen::Index>(nodes.size());
  if (adjacency.rows() != m || adjacency.cols() != m) {
    throw Error(ErrorCode::DimensionMismatch, "adjacency must be square with one row per node");
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    if (adjacency(i, i) != 1.0) throw Error(ErrorCode::InvalidArgument, "self-loops must have weight 1");
    for (Eigen::Index j = 0; j < m; ++j) {
      const double w = adjacency(i, j);
      if (!(w >= 0.0 && w <= 1.0)) throw Error(ErrorCode::InvalidArgument, "edge weights must lie in [0, 1]");
      if (w != adjacency(j, i)) throw Error(ErrorCode::InvalidArgument, "adjacency must be symmetric");
    }
  }
  AttributeGraph g;
  g.nodes = std::move(nodes);
  g.degree = adjacency.rowwise().sum();
  g.adjacency = std::move(adjacency);
  g.degenerate.assign(g.nodes.size(), false);
  return g;
}

Eigen::Index AttributeGraph::index_of(const std::string& node) const {
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i] == node) return static_cast<Eigen::Index>(i);
  throw Error(ErrorCode::UnknownAttribute, "graph has no node '" + node + "'");
}

Eigen::MatrixXd AttributeGraph::normalized_adjacency() const { return symmetric_normalize(adjacency); }

nlohmann::json AttributeGraph::to_json() const {
  nlohmann::json edges = nlohmann::json::array();
  nlohmann::json matrix = nlohmann::json::array();
  for (Eigen::Index i = 0; i < adjacency.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    nlohmann::json neighbours = nlohmann::json::array();
    for (Eigen::Index j = 0; j < adjacency.cols(); ++j) {
      row.push_back(adjacency(i, j));
      if (i != j && adjacency(i, j) > 0.0)
        neighbours.push_back({{"node", nodes[static_cast<std::size_t>(j)]}, {"weight", adjacency(i, j)}});
    }
    matrix.push_back(std::move(row));
    edges.push_back({{"node", nodes[static_cast<std::size_t>(i)]},
                     {"degree", degree[i]},
                     {"degenerate", static_cast<bool>(degenerate[static_cast<std::size_t>(i)])},
                     {"neighbours", std::move(neighbours)}});
  }
  return {{"nodes", nodes}, {"adjacency", std::move(matrix)}, {"adjacency_list", std::move(edges)}};
}

AttributeGraph AttributeGraph::from_json(const nlohmann::json& j) {
  try {
    auto nodes = j.at("nodes").get<std::vector<std::string>>();
    const auto& rows = j.at("adjacency");
    const auto m = static_cast<Eigen::Index>(nodes.size());
    Eigen::MatrixXd a(m, m);
    if (static_cast<Eigen::Index>(rows.size()) != m) throw Error(ErrorCode::DimensionMismatch, "adjacency row count");
    for (Eigen::Index r = 0; r < m; ++r) {
      const auto& row = rows.at(static_cast<std::size_t>(r));
      if (static_cast<Eigen::Index>(row.size()) != m) throw Error(ErrorCode::DimensionMismatch, "adjacency column count");
      for (Eigen::Index c = 0; c < m; ++c) a(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
    }
    auto g = from_adjacency(std::move(nodes), std::move(a));
    if (j.contains("adjacency_list")) {
      for (std::size_t i = 0; i < g.nodes.size(); ++i)
        g.degenerate[i] = j["adjacency_list"].at(i).value("degenerate", false);
    }
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("malformed graph: ") + e.what());
  }
}

const Eigen::MatrixXd& EmbeddingMatrix::at(const std::string& attribute) const {
  for (std::size_t i = 0; i < attributes.size(); ++i)
    if (attributes[i] == attribute) return values[i];
  throw Error(ErrorCode::UnknownAttribute, "no embeddings for '" + attribute + "'");
}

Eigen::MatrixXd EmbeddingMatrix::flatten() const {
  const Eigen::Index d = dim();
  Eigen::MatrixXd out(rows(), d * static_cast<Eigen::Index>(values.size()));
  for (std::size_t k = 0; k < values.size(); ++k) out.middleCols(static_cast<Eigen::Index>(k) * d, d) = values[k];
  return out;
}

EmbeddingMatrix embed_text_attributes(const Dataset& ds, const Embedder& embedder) {
  EmbeddingMatrix out;
  for (const auto& c : ds.columns) {
    if (!c.is_text()) continue;
    out.attributes.push_back(c.name);
    out.values.push_back(to_matrix(embed_column(c, embedder, ds.tuple_ids)));
    if (c.text_values.empty()) out.values.back().resize(0, embedder.dim());
  }
  return out;
}

AttributeGraph build_graph(const NormalizedDataset& nds, const EmbeddingMatrix& text_embeddings) {
  const auto& ds = nds.dataset;
  const auto m = static_cast<Eigen::Index>(ds.columns.size());
  const auto n = static_cast<Eigen::Index>(ds.row_count);

  // Per node: the scalar series used for correlations (numeric values or embedding norms),
  // and for text nodes the column-mean embedding.
  std::vector<Eigen::VectorXd> series(static_cast<std::size_t>(m));
  std::vector<Eigen::VectorXd> mean_embedding(static_cast<std::size_t>(m));
  std::vector<bool> degenerate(static_cast<std::size_t>(m), false);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& c = ds.columns[static_cast<std::size_t>(i)];
    auto& s = series[static_cast<std::size_t>(i)];
    if (c.is_numeric()) {
      s = Eigen::Map<const Eigen::VectorXd>(c.numeric_values.data(), n);
    } else {
      const auto& e = text_embeddings.at(c.name);
      if (e.rows() != n) throw Error(ErrorCode::DimensionMismatch, "embedding rows differ from row_count");
      s = e.rowwise().norm();
      mean_embedding[static_cast<std::size_t>(i)] = e.colwise().mean().transpose();
    }
    degenerate[static_cast<std::size_t>(i)] = is_flat(s);
  }

  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j) {
      const auto& ci = ds.columns[static_cast<std::size_t>(i)];
      const auto& cj = ds.columns[static_cast<std::size_t>(j)];
      double w = 0.0;
      if (ci.is_text() && cj.is_text()) {
        const auto& ei = mean_embedding[static_cast<std::size_t>(i)];
        const auto& ej = mean_embedding[static_cast<std::size_t>(j)];
        const double denom = ei.norm() * ej.norm();
        if (denom > 0.0) w = std::clamp(ei.dot(ej) / denom, 0.0, 1.0);
      } else if (auto r = abs_correlation(series[static_cast<std::size_t>(i)],
                                          series[static_cast<std::size_t>(j)])) {
        w = *r;
      }
      a(i, j) = a(j, i) = threshold(w);
    }
  }

  auto g = AttributeGraph::from_adjacency(ds.column_names(), std::move(a));
  g.degenerate = std::move(degenerate);
  return g;
}

NodeFeatures node_features(const NormalizedDataset& nds, const EmbeddingMatrix& text_embeddings, int dim) {
  const auto& ds = nds.dataset;
  const auto n = static_cast<Eigen::Index>(ds.row_count);
  NodeFeatures f;
  for (const auto& c : ds.columns) {
    f.nodes.push_back(c.name);
    f.is_text.push_back(c.is_text());
    if (c.is_text()) {
      const auto& e = text_embeddings.at(c.name);
      if (e.rows() != n || e.cols() != dim) {
        throw Error(ErrorCode::DimensionMismatch, "embeddings of '" + c.name + "' have the wrong shape");
      }
      f.values.push_back(e);
    } else {
      Eigen::MatrixXd v = Eigen::MatrixXd::Zero(n, dim);
      v.col(0) = Eigen::Map<const Eigen::VectorXd>(c.numeric_values.data(), n);
      f.values.push_back(std::move(v));
    }
  }
  return f;
}

EmbeddingMatrix aggregate_text_nodes(const AttributeGraph& graph, const NodeFeatures& features) {
  if (features.nodes != graph.nodes) {
    throw Error(ErrorCode::DimensionMismatch, "node features do not match the graph's nodes");
  }
  const Eigen::MatrixXd ahat = graph.normalized_adjacency();
  EmbeddingMatrix out;
  for (std::size_t k = 0; k < features.nodes.size(); ++k) {
    if (!features.is_text[k]) continue;
    const auto& first = features.values[k];
    Eigen::MatrixXd agg = Eigen::MatrixXd::Zero(first.rows(), first.cols());
    for (std::size_t j = 0; j < features.nodes.size(); ++j) {
      const double w = ahat(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j));
      if (w == 0.0) continue;
      if (features.values[j].rows() != first.rows() || features.values[j].cols() != first.cols()) {
        throw Error(ErrorCode::DimensionMismatch, "node feature matrices differ in shape");
      }
      agg.noalias() += w * features.values[j];
    }
    out.attributes.push_back(features.nodes[k]);
    out.values.push_back(std::move(agg));
  }
  return out;
}

EmbeddingMatrix apply_layer(const EmbeddingMatrix& aggregated, const GnnParams& params) {
  EmbeddingMatrix out;
  out.attributes = aggregated.attributes;
  for (const auto& agg : aggregated.values) {
    if (agg.cols() != params.weight.rows() || params.weight.cols() != params.bias.size()) {
      throw Error(ErrorCode::DimensionMismatch, "GNN parameters do not match the embedding dim");
    }
    Eigen::MatrixXd z = agg * params.weight;
    z.rowwise() += params.bias.transpose();
    out.values.push_back(z.cwiseMax(0.0));
  }
  return out;
}

EmbeddingMatrix message_pass(const AttributeGraph& graph, const NodeFeatures& features,
                             const GnnParams& params) {
  return apply_layer(aggregate_text_nodes(graph, features), params);
}

GnnParams init_params(const EmbedderConfig& config, std::uint64_t seed) {
  config.validate();
  const int d = config.dim;
  const double bound = std::sqrt(6.0 / (d + d));
  Rng rng(seed);
  GnnParams p;
  p.weight.resize(d, d);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) p.weight(r, c) = rng.uniform(-bound, bound);
  p.bias = Eigen::VectorXd::Zero(d);
  p.seed = seed;
  return p;
}

}  // namespace udisc
