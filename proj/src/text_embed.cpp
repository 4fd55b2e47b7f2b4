#include "udisc/text_embed.hpp"

#include <sstream>

#include "udisc/ingest.hpp"

namespace udisc {

void EmbedderConfig::validate() const {
  if (dim < 8) throw Error(ErrorCode::InvalidArgument, "embedding dim must be at least 8");
  if (ngram_min < 1 || ngram_min > ngram_max) {
    throw Error(ErrorCode::InvalidArgument, "need 1 <= ngram_min <= ngram_max");
  }
}

namespace {

// Byte offsets of code point starts, plus a trailing end offset.
std::vector<std::size_t> code_point_offsets(std::string_view s) {
  std::vector<std::size_t> offsets;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if ((static_cast<unsigned char>(s[i]) & 0xC0) != 0x80) offsets.push_back(i);
  }
  offsets.push_back(s.size());
  return offsets;
}

}  // namespace

std::vector<std::string> char_ngrams(std::string_view text, const EmbedderConfig& config) {
  std::string s(text);
  if (config.lowercase) {
    for (auto& c : s)
      if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  const auto offsets = code_point_offsets(s);
  const std::size_t chars = offsets.size() - 1;
  std::vector<std::string> grams;
  for (int n = config.ngram_min; n <= config.ngram_max; ++n) {
    const auto len = static_cast<std::size_t>(n);
    for (std::size_t i = 0; i + len <= chars; ++i) {
      grams.push_back(s.substr(offsets[i], offsets[i + len] - offsets[i]));
    }
  }
  return grams;
}

HashedNgramEmbedder::HashedNgramEmbedder(EmbedderConfig config) : config_(config) {
  config_.validate();
}

Eigen::VectorXd HashedNgramEmbedder::embed(std::string_view text) const {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(config_.dim);
  const auto dim = static_cast<std::uint64_t>(config_.dim);
  for (const auto& gram : char_ngrams(text, config_)) {
    const std::uint64_t h = fnv1a64(gram);
    const double sign = (h >> 63) == 0 ? 1.0 : -1.0;
    v[static_cast<Eigen::Index>(h % dim)] += sign;
  }
  const double norm = v.norm();
  if (norm > 0.0) v /= norm;
  return v;
}

TextEmbedding embed(std::string_view text, const EmbedderConfig& config) {
  return {HashedNgramEmbedder(config).embed(text), {}, 0};
}

std::vector<TextEmbedding> embed_column(const AttributeColumn& col, const Embedder& embedder,
                                        std::span<const TupleId> tuple_ids) {
  if (!col.is_text()) throw Error(ErrorCode::KindMismatch, "column '" + col.name + "' is not text");
  std::vector<TextEmbedding> out;
  out.reserve(col.text_values.size());
  for (std::size_t i = 0; i < col.text_values.size(); ++i) {
    const TupleId id = tuple_ids.empty() ? static_cast<TupleId>(i) : tuple_ids[i];
    Eigen::VectorXd v = col.missing_mask[i] ? Eigen::VectorXd::Zero(embedder.dim())
                                            : embedder.embed(col.text_values[i]);
    out.push_back({std::move(v), col.name, id});
  }
  return out;
}

std::vector<TextEmbedding> embed_column(const AttributeColumn& col, const EmbedderConfig& config) {
  return embed_column(col, HashedNgramEmbedder(config));
}

Eigen::MatrixXd to_matrix(const std::vector<TextEmbedding>& embeddings) {
  if (embeddings.empty()) return {};
  const auto dim = embeddings.front().vector.size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(embeddings.size()), dim);
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    if (embeddings[i].vector.size() != dim) throw Error(ErrorCode::DimensionMismatch, "ragged embeddings");
    m.row(static_cast<Eigen::Index>(i)) = embeddings[i].vector.transpose();
  }
  return m;
}

std::string embeddings_to_csv(const std::vector<TextEmbedding>& embeddings) {
  std::ostringstream out;
  const auto dim = embeddings.empty() ? 0 : embeddings.front().vector.size();
  out << "tuple_id,attr";
  for (Eigen::Index d = 0; d < dim; ++d) out << ",v" << d;
  out << '\n';
  for (const auto& e : embeddings) {
    out << e.tuple_id << ',' << csv::quote(e.source_attribute, ',');
    for (Eigen::Index d = 0; d < e.vector.size(); ++d) out << ',' << format_double(e.vector[d]);
    out << '\n';
  }
  return out.str();
}

}  // namespace udisc
