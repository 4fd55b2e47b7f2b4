#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "udisc/rank_normalize.hpp"
#include "udisc/text_embed.hpp"

namespace udisc {

/// Attribute-level graph: one node per attribute, symmetric weights in [0, 1], unit self-loops.
struct AttributeGraph {
  static constexpr double kEdgeThreshold = 0.1;

  std::vector<std::string> nodes;
  Eigen::MatrixXd adjacency;
  Eigen::VectorXd degree;
  /// Attributes whose edges were zeroed because they carry no variation.
  std::vector<bool> degenerate;

  /// Validates symmetry, unit diagonal and weight range; computes degrees.
  static AttributeGraph from_adjacency(std::vector<std::string> nodes, Eigen::MatrixXd adjacency);

  Eigen::Index index_of(const std::string& node) const;
  Eigen::MatrixXd normalized_adjacency() const;

  nlohmann::json to_json() const;
  static AttributeGraph from_json(const nlohmann::json& j);
};

struct GnnParams {
  Eigen::MatrixXd weight;  // dim x dim
  Eigen::VectorXd bias;    // dim
  std::uint64_t seed = 0;
};

/// Per-attribute row_count x dim matrices, attributes in dataset order.
struct EmbeddingMatrix {
  std::vector<std::string> attributes;
  std::vector<Eigen::MatrixXd> values;

  const Eigen::MatrixXd& at(const std::string& attribute) const;
  Eigen::Index rows() const { return values.empty() ? 0 : values.front().rows(); }
  Eigen::Index dim() const { return values.empty() ? 0 : values.front().cols(); }
  bool empty() const { return attributes.empty(); }

  /// row_count x (K * dim), attribute-major; matches UtilityModel's text layout.
  Eigen::MatrixXd flatten() const;
};

/// Node inputs for message passing: one row_count x dim matrix per graph node.
struct NodeFeatures {
  std::vector<std::string> nodes;
  std::vector<bool> is_text;
  std::vector<Eigen::MatrixXd> values;
};

/// D^{-1/2} A D^{-1/2}.
template <class Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> symmetric_normalize(
    const Eigen::MatrixBase<Derived>& adjacency) {
  const auto inv_sqrt = adjacency.rowwise().sum().cwiseSqrt().cwiseInverse().eval();
  return inv_sqrt.asDiagonal() * adjacency * inv_sqrt.asDiagonal();
}

/// One graph-convolution layer over a single tuple: ReLU(Ahat H W + 1 b^T),
/// H holding one node per row.
template <class DA, class DH, class DW, class DB>
Eigen::Matrix<typename DH::Scalar, Eigen::Dynamic, Eigen::Dynamic> gcn_layer(
    const Eigen::MatrixBase<DA>& normalized_adjacency, const Eigen::MatrixBase<DH>& features,
    const Eigen::MatrixBase<DW>& weight, const Eigen::MatrixBase<DB>& bias) {
  using Scalar = typename DH::Scalar;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> z = normalized_adjacency * features * weight;
  z.rowwise() += bias.transpose();
  return z.cwiseMax(Scalar(0));
}

/// Pre-message-passing embeddings of every text attribute.
EmbeddingMatrix embed_text_attributes(const Dataset& ds, const Embedder& embedder);

AttributeGraph build_graph(const NormalizedDataset& nds, const EmbeddingMatrix& text_embeddings);

/// Numeric node j carries (x_ij, 0, ..., 0); text node k carries its embedding.
NodeFeatures node_features(const NormalizedDataset& nds, const EmbeddingMatrix& text_embeddings,
                           int dim);

/// Sum_j Ahat[k, j] F_j for every text node k; the linear part of the pass, independent of W, b.
EmbeddingMatrix aggregate_text_nodes(const AttributeGraph& graph, const NodeFeatures& features);

/// One layer, evaluated tuple by tuple over the attribute graph; emits text nodes only.
EmbeddingMatrix message_pass(const AttributeGraph& graph, const NodeFeatures& features,
                             const GnnParams& params);

/// Applies W, b and ReLU to already aggregated text-node inputs.
EmbeddingMatrix apply_layer(const EmbeddingMatrix& aggregated, const GnnParams& params);

/// Glorot-uniform weight in +-sqrt(6 / (2 dim)), zero bias.
GnnParams init_params(const EmbedderConfig& config, std::uint64_t seed);

}  // namespace udisc
