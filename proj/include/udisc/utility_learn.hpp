#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "udisc/attr_graph.hpp"
#include "udisc/ingest.hpp"

namespace udisc {

struct TrainConfig {
  double learning_rate = 0.01;
  int epochs = 500;
  double ridge_lambda = 1e-3;
  std::uint64_t seed = 42;
  std::size_t k = 10;

  void validate() const;
};

/// Least squares with an unpenalized intercept.
struct LinearFit {
  Eigen::VectorXd coeffs;
  double intercept = 0.0;
  double sse = 0.0;
};

/// Solves (Xc^T Xc + lambda I) beta = Xc^T yc on centred data; intercept = mean(y) - mean(X) beta.
/// Throws SingularSystem when lambda == 0 and X (centred) is rank-deficient.
LinearFit ridge_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda);

/// Rank-weighted labels: sum over numeric attributes of w_a x_ia plus, for text
/// attributes, w_a times the mean entry of the pre-message-passing embedding.
std::vector<double> synthesize_labels(const NormalizedDataset& nds, const EmbeddingMatrix& text_embeddings);

struct NumericFit {
  std::vector<std::string> attributes;
  LinearFit fit;
};

NumericFit fit_numeric(const NormalizedDataset& nds, std::span<const double> labels, double ridge_lambda);

/// Coefficients in raw attribute units, beta_j / (max_j - min_j); 0 for a degenerate range.
Eigen::VectorXd raw_scale_coeffs(const NumericFit& fit, const ScaleParams& params);

/// Trainable parameters of the text path: beta (K x dim) and the layer's W, b.
struct TextParams {
  Eigen::MatrixXd beta;
  GnnParams gnn;
};

/// SSE_text(params) = sum_i (y_i - sum_k beta_k . ReLU(agg_ik W + b))^2.
/// `aggregated` holds the Ahat-weighted node inputs of every text attribute.
struct TextObjective {
  EmbeddingMatrix aggregated;
  Eigen::VectorXd targets;

  double loss(const TextParams& params) const;
  /// Analytic gradient (same shapes as params); returns the loss through `loss_out` when given.
  TextParams gradient(const TextParams& params, double* loss_out = nullptr) const;
};

struct TextFitOptions {
  /// When false only beta is updated; W and b stay at their initial values.
  bool train_gnn = true;
  /// Overrides init_params(seed).
  std::optional<GnnParams> initial_gnn;
};

struct TextFit {
  std::vector<std::string> attributes;
  Eigen::MatrixXd beta;  // K x dim
  GnnParams gnn;
  double sse = 0.0;
  std::vector<double> loss_history;
  int epochs_run = 0;
};

/// Full-batch gradient descent with step halving (at most 10 halvings per epoch);
/// a step never raises the loss. The trial step starts each epoch at
/// min(learning_rate, 2 * last accepted step).
TextFit fit_text(const NormalizedDataset& nds, const AttributeGraph& graph,
                 const EmbeddingMatrix& text_embeddings, std::span<const double> labels,
                 const TrainConfig& config, const TextFitOptions& options = {});

UtilityModel build_synthetic(const NumericFit& numeric, const TextFit* text);

/// [numeric features | flattened post-message-passing text embeddings].
Eigen::MatrixXd feature_matrix(const NormalizedDataset& nds, const EmbeddingMatrix& post_gnn);

/// Ridge regression of the targets (user labels, or u_syn's own scores) on the feature matrix.
UtilityModel refine_real(const NormalizedDataset& nds, const EmbeddingMatrix& post_gnn,
                         const UtilityModel& synthetic, const std::optional<std::vector<double>>& labels,
                         const TrainConfig& config);

struct TrainedPipeline {
  UtilityModel synthetic;
  UtilityModel real;
  GnnParams gnn_params;
  ScaleParams scale_params;
  AttributeRanking ranking;
  AttributeGraph graph;
  EmbedderConfig embedder;
  TrainConfig config;
  double sse_num = 0.0;
  double sse_text = 0.0;
  bool user_labels = false;
  /// Attribute names and kinds of the training data, in column order.
  std::vector<std::pair<std::string, AttributeKind>> schema;
};

/// Everything produced while training that scoring the same data needs again.
struct TrainingRun {
  TrainedPipeline pipeline;
  NormalizedDataset normalized;
  EmbeddingMatrix post_gnn;
  std::vector<double> labels;
  std::vector<double> text_loss_history;
};

TrainingRun train_pipeline(const LabeledDataset& data, const std::vector<std::string>& ranking_order,
                           const TrainConfig& config, const EmbedderConfig& embedder = {});

DiscoveryResult discover(const TrainedPipeline& pipeline, const NormalizedDataset& nds,
                         const EmbeddingMatrix& post_gnn, std::size_t k);

/// Scores a new dataset with the stored scale ranges, graph and layer parameters.
/// Throws SchemaMismatch listing missing or extra attributes.
DiscoveryResult discover(const TrainedPipeline& pipeline, const Dataset& ds, std::size_t k);

}  // namespace udisc
