#include "udisc/utility_learn.hpp"

#include <algorithm>
#include <cmath>

namespace udisc {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw Error(ErrorCode::InvalidArgument, "learning_rate must be positive");
  if (epochs < 1) throw Error(ErrorCode::InvalidArgument, "epochs must be positive");
  if (!(ridge_lambda >= 0.0)) throw Error(ErrorCode::InvalidArgument, "ridge_lambda must be non-negative");
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be positive");
}

LinearFit ridge_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda) {
  if (x.rows() != y.size()) throw Error(ErrorCode::DimensionMismatch, "design rows differ from target count");
  if (y.size() == 0) throw Error(ErrorCode::EmptyInput, "no rows to fit");
  if (!x.allFinite() || !y.allFinite()) throw Error(ErrorCode::NonFiniteInput, "regression inputs are not finite");
  if (lambda < 0.0) throw Error(ErrorCode::InvalidArgument, "ridge lambda must be non-negative");

  const Eigen::Index p = x.cols();
  const Eigen::RowVectorXd x_mean = x.colwise().mean();
  const double y_mean = y.mean();
  LinearFit fit;
  if (p == 0) {
    fit.coeffs.resize(0);
    fit.intercept = y_mean;
  } else {
    const Eigen::MatrixXd xc = x.rowwise() - x_mean;
    const Eigen::VectorXd yc = y.array() - y_mean;
    if (lambda == 0.0) {
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xc);
      if (qr.rank() < p) {
        throw Error(ErrorCode::SingularSystem, "design matrix has rank " + std::to_string(qr.rank()) +
                                                   " < " + std::to_string(p) + " and ridge is 0");
      }
    }
    Eigen::MatrixXd gram = xc.transpose() * xc;
    gram.diagonal().array() += lambda;
    fit.coeffs = gram.ldlt().solve(xc.transpose() * yc);
    fit.intercept = y_mean - x_mean.dot(fit.coeffs);
  }
  Eigen::VectorXd residual = y.array() - fit.intercept;
  if (p > 0) residual.noalias() -= x * fit.coeffs;
  fit.sse = residual.squaredNorm();
  if (!fit.coeffs.allFinite() || !std::isfinite(fit.intercept)) {
    throw Error(ErrorCode::SingularSystem, "normal equations produced non-finite coefficients");
  }
  return fit;
}

std::vector<double> synthesize_labels(const NormalizedDataset& nds, const EmbeddingMatrix& text_embeddings) {
  const auto& ds = nds.dataset;
  std::vector<double> labels(ds.row_count, 0.0);
  for (const auto& c : ds.columns) {
    const double w = nds.ranking.weight(c.name);
    if (c.is_numeric()) {
      for (std::size_t i = 0; i < ds.row_count; ++i) labels[i] += w * c.numeric_values[i];
    } else {
      const Eigen::VectorXd means = text_embeddings.at(c.name).rowwise().mean();
      for (std::size_t i = 0; i < ds.row_count; ++i) labels[i] += w * means[static_cast<Eigen::Index>(i)];
    }
  }
  return labels;
}

namespace {

Eigen::VectorXd to_vector(std::span<const double> v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

NumericFit fit_numeric(const NormalizedDataset& nds, std::span<const double> labels, double ridge_lambda) {
  const auto& ds = nds.dataset;
  if (labels.size() != ds.row_count) throw Error(ErrorCode::DimensionMismatch, "label count differs from row_count");
  NumericFit out;
  out.attributes = ds.numeric_names();
  if (ds.row_count < out.attributes.size() + 1) {
    throw Error(ErrorCode::InvalidArgument, "need at least " + std::to_string(out.attributes.size() + 1) +
                                                " rows to fit " + std::to_string(out.attributes.size()) +
                                                " numeric coefficients");
  }
  out.fit = ridge_fit(ds.numeric_matrix(), to_vector(labels), ridge_lambda);
  return out;
}

Eigen::VectorXd raw_scale_coeffs(const NumericFit& fit, const ScaleParams& params) {
  Eigen::VectorXd raw(fit.fit.coeffs.size());
  for (std::size_t j = 0; j < fit.attributes.size(); ++j) {
    const auto it = params.find(fit.attributes[j]);
    if (it == params.end()) throw Error(ErrorCode::UnknownAttribute, "no scale range for '" + fit.attributes[j] + "'");
    const double span = it->second.max - it->second.min;
    const auto i = static_cast<Eigen::Index>(j);
    raw[i] = span > 0.0 ? fit.fit.coeffs[i] / span : 0.0;
  }
  return raw;
}

double TextObjective::loss(const TextParams& params) const {
  Eigen::VectorXd pred = Eigen::VectorXd::Zero(targets.size());
  for (std::size_t k = 0; k < aggregated.values.size(); ++k) {
    Eigen::MatrixXd z = aggregated.values[k] * params.gnn.weight;
    z.rowwise() += params.gnn.bias.transpose();
    pred.noalias() += z.cwiseMax(0.0) * params.beta.row(static_cast<Eigen::Index>(k)).transpose();
  }
  return (targets - pred).squaredNorm();
}

TextParams TextObjective::gradient(const TextParams& params, double* loss_out) const {
  const std::size_t kcount = aggregated.values.size();
  std::vector<Eigen::MatrixXd> z(kcount);
  Eigen::VectorXd pred = Eigen::VectorXd::Zero(targets.size());
  for (std::size_t k = 0; k < kcount; ++k) {
    z[k] = aggregated.values[k] * params.gnn.weight;
    z[k].rowwise() += params.gnn.bias.transpose();
    pred.noalias() += z[k].cwiseMax(0.0) * params.beta.row(static_cast<Eigen::Index>(k)).transpose();
  }
  const Eigen::VectorXd residual = targets - pred;
  if (loss_out) *loss_out = residual.squaredNorm();
  const Eigen::VectorXd dpred = -2.0 * residual;

  TextParams g;
  g.beta = Eigen::MatrixXd::Zero(params.beta.rows(), params.beta.cols());
  g.gnn.weight = Eigen::MatrixXd::Zero(params.gnn.weight.rows(), params.gnn.weight.cols());
  g.gnn.bias = Eigen::VectorXd::Zero(params.gnn.bias.size());
  g.gnn.seed = params.gnn.seed;
  for (std::size_t k = 0; k < kcount; ++k) {
    const auto row = static_cast<Eigen::Index>(k);
    const Eigen::MatrixXd h = z[k].cwiseMax(0.0);
    g.beta.row(row) = (h.transpose() * dpred).transpose();
    // dL/dZ = (dpred beta_k^T) masked by the ReLU derivative.
    const Eigen::MatrixXd dz =
        ((dpred * params.beta.row(row)).array() * (z[k].array() > 0.0).cast<double>()).matrix();
    g.gnn.weight.noalias() += aggregated.values[k].transpose() * dz;
    g.gnn.bias += dz.colwise().sum().transpose();
  }
  return g;
}

TextFit fit_text(const NormalizedDataset& nds, const AttributeGraph& graph,
                 const EmbeddingMatrix& text_embeddings, std::span<const double> labels,
                 const TrainConfig& config, const TextFitOptions& options) {
  config.validate();
  if (text_embeddings.empty()) throw Error(ErrorCode::NoTextAttributes, "dataset has no text attributes");
  if (labels.size() != nds.dataset.row_count) throw Error(ErrorCode::DimensionMismatch, "label count differs from row_count");

  const auto dim = static_cast<int>(text_embeddings.dim());
  TextObjective objective{
      aggregate_text_nodes(graph, node_features(nds, text_embeddings, dim)), to_vector(labels)};

  TextParams params;
  params.beta = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(text_embeddings.attributes.size()), dim);
  if (options.initial_gnn) {
    params.gnn = *options.initial_gnn;
  } else {
    EmbedderConfig shape;
    shape.dim = dim;
    params.gnn = init_params(shape, config.seed);
  }
  if (params.gnn.weight.rows() != dim || params.gnn.weight.cols() != dim || params.gnn.bias.size() != dim) {
    throw Error(ErrorCode::DimensionMismatch, "initial GNN parameters do not match the embedding dim");
  }

  TextFit fit;
  fit.attributes = text_embeddings.attributes;
  double loss = 0.0;
  TextParams grad = objective.gradient(params, &loss);
  if (!std::isfinite(loss)) throw Error(ErrorCode::DivergedLoss, "initial text loss is not finite");
  fit.loss_history.push_back(loss);

  constexpr int kMaxHalvings = 10;
  double step = config.learning_rate;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    if (!grad.beta.allFinite() || !grad.gnn.weight.allFinite() || !grad.gnn.bias.allFinite()) {
      throw Error(ErrorCode::DivergedLoss, "text gradient became non-finite at epoch " + std::to_string(epoch));
    }
    const bool flat = grad.beta.isZero(0.0) &&
                      (!options.train_gnn || (grad.gnn.weight.isZero(0.0) && grad.gnn.bias.isZero(0.0)));
    if (flat) break;

    bool accepted = false;
    TextParams trial = params;
    double trial_loss = loss;
    for (int halving = 0; halving <= kMaxHalvings; ++halving) {
      trial.beta = params.beta - step * grad.beta;
      if (options.train_gnn) {
        trial.gnn.weight = params.gnn.weight - step * grad.gnn.weight;
        trial.gnn.bias = params.gnn.bias - step * grad.gnn.bias;
      }
      trial_loss = objective.loss(trial);
      if (std::isfinite(trial_loss) && trial_loss <= loss) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    params = std::move(trial);
    grad = objective.gradient(params, &loss);
    fit.loss_history.push_back(loss);
    ++fit.epochs_run;
    step = std::min(config.learning_rate, 2.0 * step);
  }

  fit.beta = std::move(params.beta);
  fit.gnn = std::move(params.gnn);
  fit.sse = loss;
  return fit;
}

UtilityModel build_synthetic(const NumericFit& numeric, const TextFit* text) {
  if (!text) {
    return UtilityModel::synthetic(numeric.attributes, numeric.fit.coeffs, {}, 0, Eigen::VectorXd(0),
                                   numeric.fit.intercept, numeric.fit.sse);
  }
  // Row-major flattening of beta gives the attribute-major layout the model uses.
  const Eigen::Index dim = text->beta.cols();
  Eigen::VectorXd text_coeffs(text->beta.size());
  for (Eigen::Index k = 0; k < text->beta.rows(); ++k) text_coeffs.segment(k * dim, dim) = text->beta.row(k).transpose();
  // The text part has no intercept of its own, so the numeric one carries over unchanged.
  return UtilityModel::synthetic(numeric.attributes, numeric.fit.coeffs, text->attributes,
                                 static_cast<int>(dim), std::move(text_coeffs), numeric.fit.intercept,
                                 numeric.fit.sse + text->sse);
}

Eigen::MatrixXd feature_matrix(const NormalizedDataset& nds, const EmbeddingMatrix& post_gnn) {
  const Eigen::MatrixXd x = nds.dataset.numeric_matrix();
  if (post_gnn.empty()) return x;
  if (post_gnn.rows() != x.rows()) throw Error(ErrorCode::DimensionMismatch, "embedding rows differ from row_count");
  Eigen::MatrixXd f(x.rows(), x.cols() + post_gnn.dim() * static_cast<Eigen::Index>(post_gnn.values.size()));
  f << x, post_gnn.flatten();
  return f;
}

UtilityModel refine_real(const NormalizedDataset& nds, const EmbeddingMatrix& post_gnn,
                         const UtilityModel& synthetic, const std::optional<std::vector<double>>& labels,
                         const TrainConfig& config) {
  const Eigen::MatrixXd f = feature_matrix(nds, post_gnn);
  const Eigen::VectorXd targets = labels ? to_vector(*labels) : score_rows(synthetic, f);
  const LinearFit fit = ridge_fit(f, targets, config.ridge_lambda);
  const Eigen::Index m = synthetic.numeric_count();
  return UtilityModel::refined_from(synthetic, fit.coeffs.head(m), fit.coeffs.tail(fit.coeffs.size() - m),
                                    fit.intercept, fit.sse);
}

TrainingRun train_pipeline(const LabeledDataset& data, const std::vector<std::string>& ranking_order,
                           const TrainConfig& config, const EmbedderConfig& embedder) {
  config.validate();
  embedder.validate();
  const Dataset& ds = data.dataset;
  if (ds.row_count == 0) throw Error(ErrorCode::EmptyInput, "cannot train on an empty dataset");

  const AttributeRanking ranking = build_ranking(ranking_order, ds);
  NormalizedDataset nds = normalize(ds, ranking);
  const EmbeddingMatrix pre_gnn = embed_text_attributes(ds, HashedNgramEmbedder(embedder));
  AttributeGraph graph = build_graph(nds, pre_gnn);

  std::vector<double> labels = data.labels ? *data.labels : synthesize_labels(nds, pre_gnn);

  const NumericFit numeric = fit_numeric(nds, labels, config.ridge_lambda);
  std::optional<TextFit> text;
  GnnParams gnn;
  if (!pre_gnn.empty()) {
    text = fit_text(nds, graph, pre_gnn, labels, config);
    gnn = text->gnn;
  } else {
    gnn = init_params(embedder, config.seed);
  }

  EmbeddingMatrix post_gnn;
  if (!pre_gnn.empty()) post_gnn = message_pass(graph, node_features(nds, pre_gnn, embedder.dim), gnn);

  UtilityModel synthetic = build_synthetic(numeric, text ? &*text : nullptr);
  UtilityModel real = refine_real(nds, post_gnn, synthetic, data.labels, config);

  std::vector<std::pair<std::string, AttributeKind>> schema;
  for (const auto& c : ds.columns) schema.emplace_back(c.name, c.kind);

  TrainedPipeline pipeline{std::move(synthetic),
                           std::move(real),
                           std::move(gnn),
                           nds.scale_params,
                           ranking,
                           std::move(graph),
                           embedder,
                           config,
                           numeric.fit.sse,
                           text ? text->sse : 0.0,
                           data.labels.has_value(),
                           std::move(schema)};
  std::vector<double> history = text ? text->loss_history : std::vector<double>{};
  return TrainingRun{std::move(pipeline), std::move(nds), std::move(post_gnn), std::move(labels), std::move(history)};
}

DiscoveryResult discover(const TrainedPipeline& pipeline, const NormalizedDataset& nds,
                         const EmbeddingMatrix& post_gnn, std::size_t k) {
  const Eigen::VectorXd scores = score_rows(pipeline.real, feature_matrix(nds, post_gnn));
  const auto scored = make_scored(nds.dataset.tuple_ids, scores);
  return select_top_k(scored, k, pipeline.real.stage());
}

DiscoveryResult discover(const TrainedPipeline& pipeline, const Dataset& ds, std::size_t k) {
  std::vector<std::string> missing;
  std::vector<std::string> extra;
  for (const auto& [name, kind] : pipeline.schema) {
    const auto* c = ds.find(name);
    if (!c) {
      missing.push_back(name);
    } else if (c->kind != kind) {
      missing.push_back(name + " (expected " + (kind == AttributeKind::Numeric ? "numeric" : "text") + ")");
    }
  }
  for (const auto& c : ds.columns) {
    const bool known = std::any_of(pipeline.schema.begin(), pipeline.schema.end(),
                                   [&](const auto& s) { return s.first == c.name; });
    if (!known) extra.push_back(c.name);
  }
  if (!missing.empty() || !extra.empty()) {
    std::string msg = "CSV does not match the model's attributes;";
    auto join = [](const std::vector<std::string>& v) {
      std::string s;
      for (const auto& x : v) s += (s.empty() ? "" : ", ") + x;
      return s;
    };
    if (!missing.empty()) msg += " missing: " + join(missing) + ";";
    if (!extra.empty()) msg += " extra: " + join(extra) + ";";
    throw Error(ErrorCode::SchemaMismatch, msg);
  }

  // Reorder columns to the training schema so feature layouts line up.
  Dataset ordered = ds;
  ordered.columns.clear();
  for (const auto& [name, kind] : pipeline.schema) ordered.columns.push_back(ds.column(name));

  const NormalizedDataset nds = normalize_with(ordered, pipeline.scale_params, pipeline.ranking);
  EmbeddingMatrix post_gnn;
  if (pipeline.real.text_count() > 0) {
    const EmbeddingMatrix pre = embed_text_attributes(ordered, HashedNgramEmbedder(pipeline.embedder));
    post_gnn = message_pass(pipeline.graph, node_features(nds, pre, pipeline.embedder.dim), pipeline.gnn_params);
  }
  return discover(pipeline, nds, post_gnn, k);
}

}  // namespace udisc
