#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "udisc/error.hpp"

namespace udisc {

using TupleId = std::int64_t;

enum class AttributeKind { Numeric, Text };

struct AttributeColumn {
  std::string name;
  AttributeKind kind = AttributeKind::Numeric;
  std::vector<double> numeric_values;    // populated iff kind == Numeric
  std::vector<std::string> text_values;  // populated iff kind == Text
  std::vector<bool> missing_mask;

  static AttributeColumn numeric(std::string name, std::vector<double> values,
                                 std::vector<bool> missing = {});
  static AttributeColumn text(std::string name, std::vector<std::string> values,
                              std::vector<bool> missing = {});

  std::size_t size() const {
    return kind == AttributeKind::Numeric ? numeric_values.size() : text_values.size();
  }
  bool is_numeric() const { return kind == AttributeKind::Numeric; }
  bool is_text() const { return kind == AttributeKind::Text; }
};

/// Typed table of tuples. Numeric and text attributes keep their column order;
/// feature vectors everywhere follow that order (numeric block, then text block).
struct Dataset {
  std::string name;
  std::vector<AttributeColumn> columns;
  std::size_t row_count = 0;
  std::vector<TupleId> tuple_ids;

  /// Builds a dataset with dense ids 0..n-1 and checks every invariant.
  static Dataset make(std::string name, std::vector<AttributeColumn> columns);

  void validate() const;

  const AttributeColumn& column(const std::string& name) const;
  const AttributeColumn* find(const std::string& name) const;
  std::vector<std::string> column_names() const;
  std::vector<std::string> numeric_names() const;
  std::vector<std::string> text_names() const;

  /// row_count x (#numeric) matrix in column order.
  Eigen::MatrixXd numeric_matrix() const;
};

/// Strict best-first ordering of attributes with linear rank weights.
struct AttributeRanking {
  std::vector<std::string> order;
  std::map<std::string, double> weights;

  double weight(const std::string& attribute) const;
};

enum class Stage { Synthetic, Real };

std::string_view to_string(Stage stage);
Stage stage_from_string(std::string_view s);

/// Linear utility over [numeric features | text embedding features] plus an intercept.
/// Text coefficients are stored attribute-major: index = k * text_dim + d.
class UtilityModel {
 public:
  static UtilityModel synthetic(std::vector<std::string> numeric_attributes,
                                Eigen::VectorXd numeric_coeffs,
                                std::vector<std::string> text_attributes, int text_dim,
                                Eigen::VectorXd text_coeffs, double intercept,
                                double training_sse);

  /// The only way to obtain a Real model; `source` must be Synthetic.
  static UtilityModel refined_from(const UtilityModel& source, Eigen::VectorXd numeric_coeffs,
                                   Eigen::VectorXd text_coeffs, double intercept,
                                   double training_sse);

  Stage stage() const { return stage_; }
  const std::vector<std::string>& numeric_attributes() const { return numeric_attributes_; }
  const std::vector<std::string>& text_attributes() const { return text_attributes_; }
  int text_dim() const { return text_dim_; }
  const Eigen::VectorXd& numeric_coeffs() const { return numeric_coeffs_; }
  const Eigen::VectorXd& text_coeffs() const { return text_coeffs_; }
  double intercept() const { return intercept_; }
  double training_sse() const { return training_sse_; }

  double numeric_coeff(const std::string& attribute) const;
  double text_coeff(const std::string& attribute, int dim) const;

  Eigen::Index numeric_count() const { return numeric_coeffs_.size(); }
  Eigen::Index text_count() const { return text_coeffs_.size(); }
  Eigen::Index feature_count() const { return numeric_count() + text_count(); }

  /// Concatenated [numeric | text] coefficient vector.
  Eigen::VectorXd coefficients() const;

  /// FNV-1a over the model's coefficients; Real models record their source's value.
  std::uint64_t fingerprint() const;
  std::optional<std::uint64_t> provenance() const { return provenance_; }

 private:
  UtilityModel() = default;

  Stage stage_ = Stage::Synthetic;
  std::vector<std::string> numeric_attributes_;
  std::vector<std::string> text_attributes_;
  int text_dim_ = 0;
  Eigen::VectorXd numeric_coeffs_;
  Eigen::VectorXd text_coeffs_;
  double intercept_ = 0.0;
  double training_sse_ = 0.0;
  std::optional<std::uint64_t> provenance_;
};

struct ScoredTuple {
  TupleId tuple_id = 0;
  double score = 0.0;

  friend bool operator==(const ScoredTuple&, const ScoredTuple&) = default;
};

struct DiscoveryResult {
  std::vector<ScoredTuple> selected;
  std::size_t k = 0;
  /// Empty for baselines that do not go through a utility model.
  std::optional<Stage> model_stage;

  std::vector<TupleId> ids() const;
};

/// Orders by score descending, then tuple_id ascending.
inline bool ranks_before(const ScoredTuple& a, const ScoredTuple& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.tuple_id < b.tuple_id;
}

template <class NumDerived, class TextDerived>
double score_tuple(const UtilityModel& model, const Eigen::MatrixBase<NumDerived>& numeric_features,
                   const Eigen::MatrixBase<TextDerived>& text_embeddings) {
  if (numeric_features.size() != model.numeric_count() ||
      text_embeddings.size() != model.text_count()) {
    throw Error(ErrorCode::DimensionMismatch,
                "expected " + std::to_string(model.numeric_count()) + " numeric and " +
                    std::to_string(model.text_count()) + " text features, got " +
                    std::to_string(numeric_features.size()) + " and " +
                    std::to_string(text_embeddings.size()));
  }
  if (!numeric_features.allFinite() || !text_embeddings.allFinite()) {
    throw Error(ErrorCode::NonFiniteInput, "feature vector contains NaN or Inf");
  }
  double s = model.intercept();
  if (model.numeric_count() > 0) s += model.numeric_coeffs().dot(numeric_features.template cast<double>());
  if (model.text_count() > 0) s += model.text_coeffs().dot(text_embeddings.template cast<double>());
  return s;
}

inline double score_tuple(const UtilityModel& model, std::span<const double> numeric_features,
                          std::span<const double> text_embeddings) {
  using ConstMap = Eigen::Map<const Eigen::VectorXd>;
  return score_tuple(model,
                     ConstMap(numeric_features.data(), static_cast<Eigen::Index>(numeric_features.size())),
                     ConstMap(text_embeddings.data(), static_cast<Eigen::Index>(text_embeddings.size())));
}

/// Scores every row of a [numeric | text] feature matrix.
Eigen::VectorXd score_rows(const UtilityModel& model, const Eigen::MatrixXd& features);

/// Pairs scores with tuple ids, position i -> ids[i].
std::vector<ScoredTuple> make_scored(std::span<const TupleId> ids, const Eigen::VectorXd& scores);

DiscoveryResult select_top_k(std::span<const ScoredTuple> scores, std::size_t k,
                             std::optional<Stage> stage = std::nullopt);

nlohmann::json to_json(const DiscoveryResult& result);
DiscoveryResult discovery_result_from_json(const nlohmann::json& j);
std::string to_csv(const DiscoveryResult& result);

}  // namespace udisc
