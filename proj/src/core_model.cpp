#include "udisc/core_model.hpp"

#include <algorithm>
#include <charconv>
#include <cstring>
#include <set>
#include <sstream>

namespace udisc {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::LabelNotNumeric: return "LabelNotNumeric";
    case ErrorCode::EmptyFile: return "EmptyFile";
    case ErrorCode::AllMissingColumn: return "AllMissingColumn";
    case ErrorCode::NotAPermutation: return "NotAPermutation";
    case ErrorCode::DuplicateAttribute: return "DuplicateAttribute";
    case ErrorCode::UnknownAttribute: return "UnknownAttribute";
    case ErrorCode::KindMismatch: return "KindMismatch";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::NoTextAttributes: return "NoTextAttributes";
    case ErrorCode::DivergedLoss: return "DivergedLoss";
    case ErrorCode::NoNumericAttributes: return "NoNumericAttributes";
    case ErrorCode::NeedTwoObjectives: return "NeedTwoObjectives";
    case ErrorCode::KMismatch: return "KMismatch";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

AttributeColumn AttributeColumn::numeric(std::string name, std::vector<double> values,
                                         std::vector<bool> missing) {
  AttributeColumn c;
  c.name = std::move(name);
  c.kind = AttributeKind::Numeric;
  if (missing.empty()) missing.assign(values.size(), false);
  c.numeric_values = std::move(values);
  c.missing_mask = std::move(missing);
  return c;
}

AttributeColumn AttributeColumn::text(std::string name, std::vector<std::string> values,
                                      std::vector<bool> missing) {
  AttributeColumn c;
  c.name = std::move(name);
  c.kind = AttributeKind::Text;
  if (missing.empty()) missing.assign(values.size(), false);
  c.text_values = std::move(values);
  c.missing_mask = std::move(missing);
  return c;
}

Dataset Dataset::make(std::string name, std::vector<AttributeColumn> columns) {
  Dataset ds;
  ds.name = std::move(name);
  ds.row_count = columns.empty() ? 0 : columns.front().size();
  ds.columns = std::move(columns);
  ds.tuple_ids.resize(ds.row_count);
  for (std::size_t i = 0; i < ds.row_count; ++i) ds.tuple_ids[i] = static_cast<TupleId>(i);
  ds.validate();
  return ds;
}

void Dataset::validate() const {
  std::set<std::string> names;
  for (const auto& c : columns) {
    if (!names.insert(c.name).second) {
      throw Error(ErrorCode::DuplicateAttribute, "column name '" + c.name + "' is not unique");
    }
    const bool numeric_ok = c.kind == AttributeKind::Numeric ? c.text_values.empty()
                                                            : c.numeric_values.empty();
    if (!numeric_ok) {
      throw Error(ErrorCode::KindMismatch, "column '" + c.name + "' carries values of the wrong kind");
    }
    if (c.size() != row_count) {
      throw Error(ErrorCode::DimensionMismatch,
                  "column '" + c.name + "' has " + std::to_string(c.size()) + " values, expected " +
                      std::to_string(row_count));
    }
    if (c.missing_mask.size() != c.size()) {
      throw Error(ErrorCode::DimensionMismatch, "missing mask of '" + c.name + "' has wrong length");
    }
  }
  if (tuple_ids.size() != row_count) {
    throw Error(ErrorCode::DimensionMismatch, "tuple_ids length differs from row_count");
  }
  std::set<TupleId> ids(tuple_ids.begin(), tuple_ids.end());
  if (ids.size() != tuple_ids.size()) {
    throw Error(ErrorCode::InvalidArgument, "tuple_ids are not distinct");
  }
}

const AttributeColumn* Dataset::find(const std::string& name) const {
  for (const auto& c : columns)
    if (c.name == name) return &c;
  return nullptr;
}

const AttributeColumn& Dataset::column(const std::string& name) const {
  if (const auto* c = find(name)) return *c;
  throw Error(ErrorCode::UnknownAttribute, "no column named '" + name + "'");
}

std::vector<std::string> Dataset::column_names() const {
  std::vector<std::string> out;
  for (const auto& c : columns) out.push_back(c.name);
  return out;
}

std::vector<std::string> Dataset::numeric_names() const {
  std::vector<std::string> out;
  for (const auto& c : columns)
    if (c.is_numeric()) out.push_back(c.name);
  return out;
}

std::vector<std::string> Dataset::text_names() const {
  std::vector<std::string> out;
  for (const auto& c : columns)
    if (c.is_text()) out.push_back(c.name);
  return out;
}

Eigen::MatrixXd Dataset::numeric_matrix() const {
  const auto names = numeric_names();
  Eigen::MatrixXd x(static_cast<Eigen::Index>(row_count), static_cast<Eigen::Index>(names.size()));
  Eigen::Index j = 0;
  for (const auto& c : columns) {
    if (!c.is_numeric()) continue;
    x.col(j++) = Eigen::Map<const Eigen::VectorXd>(c.numeric_values.data(),
                                                   static_cast<Eigen::Index>(row_count));
  }
  return x;
}

double AttributeRanking::weight(const std::string& attribute) const {
  auto it = weights.find(attribute);
  if (it == weights.end()) throw Error(ErrorCode::UnknownAttribute, "'" + attribute + "' is not ranked");
  return it->second;
}

std::string_view to_string(Stage stage) {
  return stage == Stage::Synthetic ? "synthetic" : "real";
}

Stage stage_from_string(std::string_view s) {
  if (s == "synthetic") return Stage::Synthetic;
  if (s == "real") return Stage::Real;
  throw Error(ErrorCode::ParseError, "unknown model stage '" + std::string(s) + "'");
}

UtilityModel UtilityModel::synthetic(std::vector<std::string> numeric_attributes,
                                     Eigen::VectorXd numeric_coeffs,
                                     std::vector<std::string> text_attributes, int text_dim,
                                     Eigen::VectorXd text_coeffs, double intercept,
                                     double training_sse) {
  if (numeric_coeffs.size() != static_cast<Eigen::Index>(numeric_attributes.size())) {
    throw Error(ErrorCode::DimensionMismatch, "numeric coefficient count differs from attribute count");
  }
  if (text_coeffs.size() != static_cast<Eigen::Index>(text_attributes.size()) * text_dim) {
    throw Error(ErrorCode::DimensionMismatch, "text coefficient count differs from attributes x dim");
  }
  UtilityModel m;
  m.stage_ = Stage::Synthetic;
  m.numeric_attributes_ = std::move(numeric_attributes);
  m.numeric_coeffs_ = std::move(numeric_coeffs);
  m.text_attributes_ = std::move(text_attributes);
  m.text_dim_ = text_dim;
  m.text_coeffs_ = std::move(text_coeffs);
  m.intercept_ = intercept;
  m.training_sse_ = std::max(0.0, training_sse);
  return m;
}

UtilityModel UtilityModel::refined_from(const UtilityModel& source, Eigen::VectorXd numeric_coeffs,
                                        Eigen::VectorXd text_coeffs, double intercept,
                                        double training_sse) {
  if (source.stage() != Stage::Synthetic) {
    throw Error(ErrorCode::InvalidArgument, "a real model can only be refined from a synthetic one");
  }
  UtilityModel m = synthetic(source.numeric_attributes_, std::move(numeric_coeffs),
                             source.text_attributes_, source.text_dim_, std::move(text_coeffs),
                             intercept, training_sse);
  m.stage_ = Stage::Real;
  m.provenance_ = source.fingerprint();
  return m;
}

double UtilityModel::numeric_coeff(const std::string& attribute) const {
  for (std::size_t j = 0; j < numeric_attributes_.size(); ++j)
    if (numeric_attributes_[j] == attribute) return numeric_coeffs_[static_cast<Eigen::Index>(j)];
  throw Error(ErrorCode::UnknownAttribute, "model has no numeric attribute '" + attribute + "'");
}

double UtilityModel::text_coeff(const std::string& attribute, int dim) const {
  if (dim < 0 || dim >= text_dim_) throw Error(ErrorCode::InvalidArgument, "embedding dim out of range");
  for (std::size_t k = 0; k < text_attributes_.size(); ++k)
    if (text_attributes_[k] == attribute)
      return text_coeffs_[static_cast<Eigen::Index>(k) * text_dim_ + dim];
  throw Error(ErrorCode::UnknownAttribute, "model has no text attribute '" + attribute + "'");
}

Eigen::VectorXd UtilityModel::coefficients() const {
  Eigen::VectorXd c(feature_count());
  c << numeric_coeffs_, text_coeffs_;
  return c;
}

std::uint64_t UtilityModel::fingerprint() const {
  std::uint64_t h = 14695981039346656037ULL;
  auto mix = [&h](double v) {
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &v, sizeof(double));
    for (unsigned char b : bytes) {
      h ^= b;
      h *= 1099511628211ULL;
    }
  };
  for (Eigen::Index i = 0; i < numeric_coeffs_.size(); ++i) mix(numeric_coeffs_[i]);
  for (Eigen::Index i = 0; i < text_coeffs_.size(); ++i) mix(text_coeffs_[i]);
  mix(intercept_);
  return h;
}

Eigen::VectorXd score_rows(const UtilityModel& model, const Eigen::MatrixXd& features) {
  if (features.cols() != model.feature_count()) {
    throw Error(ErrorCode::DimensionMismatch,
                "feature matrix has " + std::to_string(features.cols()) + " columns, model expects " +
                    std::to_string(model.feature_count()));
  }
  if (!features.allFinite()) throw Error(ErrorCode::NonFiniteInput, "feature matrix contains NaN or Inf");
  Eigen::VectorXd s = Eigen::VectorXd::Constant(features.rows(), model.intercept());
  if (model.feature_count() > 0) s.noalias() += features * model.coefficients();
  return s;
}

std::vector<ScoredTuple> make_scored(std::span<const TupleId> ids, const Eigen::VectorXd& scores) {
  if (static_cast<Eigen::Index>(ids.size()) != scores.size()) {
    throw Error(ErrorCode::DimensionMismatch, "score count differs from tuple count");
  }
  std::vector<ScoredTuple> out(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i)
    out[i] = {ids[i], scores[static_cast<Eigen::Index>(i)]};
  return out;
}

DiscoveryResult select_top_k(std::span<const ScoredTuple> scores, std::size_t k,
                             std::optional<Stage> stage) {
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
  if (scores.empty()) throw Error(ErrorCode::EmptyInput, "no scored tuples to select from");
  for (const auto& s : scores)
    if (!std::isfinite(s.score)) throw Error(ErrorCode::NonFiniteInput, "non-finite tuple score");

  std::vector<ScoredTuple> sorted(scores.begin(), scores.end());
  const std::size_t take = std::min(k, sorted.size());
  std::partial_sort(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(take), sorted.end(),
                    ranks_before);
  sorted.resize(take);
  return DiscoveryResult{std::move(sorted), k, stage};
}

std::vector<TupleId> DiscoveryResult::ids() const {
  std::vector<TupleId> out;
  out.reserve(selected.size());
  for (const auto& s : selected) out.push_back(s.tuple_id);
  return out;
}

nlohmann::json to_json(const DiscoveryResult& result) {
  nlohmann::json sel = nlohmann::json::array();
  for (const auto& s : result.selected) sel.push_back({{"tuple_id", s.tuple_id}, {"score", s.score}});
  return {{"k", result.k},
          {"stage", result.model_stage ? std::string(to_string(*result.model_stage)) : "none"},
          {"selected", std::move(sel)}};
}

DiscoveryResult discovery_result_from_json(const nlohmann::json& j) {
  try {
    DiscoveryResult r;
    r.k = j.at("k").get<std::size_t>();
    const auto stage = j.at("stage").get<std::string>();
    if (stage != "none") r.model_stage = stage_from_string(stage);
    for (const auto& s : j.at("selected"))
      r.selected.push_back({s.at("tuple_id").get<TupleId>(), s.at("score").get<double>()});
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("malformed discovery result: ") + e.what());
  }
}

std::string to_csv(const DiscoveryResult& result) {
  std::ostringstream out;
  out << "tuple_id,score\n";
  char buf[64];
  for (const auto& s : result.selected) {
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), s.score);
    out << s.tuple_id << ',' << std::string_view(buf, static_cast<std::size_t>(end - buf)) << '\n';
  }
  return out.str();
}

}  // namespace udisc
