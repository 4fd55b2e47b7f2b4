#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "udisc/core_model.hpp"

namespace udisc {

struct EmbedderConfig {
  int dim = 64;
  int ngram_min = 2;
  int ngram_max = 3;
  bool lowercase = true;

  void validate() const;
};

struct TextEmbedding {
  Eigen::VectorXd vector;
  std::string source_attribute;
  TupleId tuple_id = 0;
};

constexpr std::uint64_t kFnvOffsetBasis = 14695981039346656037ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

constexpr std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = kFnvOffsetBasis;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= kFnvPrime;
  }
  return h;
}

/// Text -> fixed-size vector. Implementations must be deterministic and stateless.
class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual int dim() const = 0;
  virtual Eigen::VectorXd embed(std::string_view text) const = 0;
};

/// Signed feature hashing of character n-grams (code points, hashed as UTF-8 bytes),
/// L2-normalized. Lowercasing only touches ASCII letters.
class HashedNgramEmbedder final : public Embedder {
 public:
  explicit HashedNgramEmbedder(EmbedderConfig config = {});

  int dim() const override { return config_.dim; }
  Eigen::VectorXd embed(std::string_view text) const override;
  const EmbedderConfig& config() const { return config_; }

 private:
  EmbedderConfig config_;
};

/// Character n-grams of lengths [ngram_min, ngram_max] over UTF-8 code points.
std::vector<std::string> char_ngrams(std::string_view text, const EmbedderConfig& config);

TextEmbedding embed(std::string_view text, const EmbedderConfig& config);

std::vector<TextEmbedding> embed_column(const AttributeColumn& col, const EmbedderConfig& config);
std::vector<TextEmbedding> embed_column(const AttributeColumn& col, const Embedder& embedder,
                                        std::span<const TupleId> tuple_ids = {});

/// Stacks embeddings row-wise into an n x dim matrix.
Eigen::MatrixXd to_matrix(const std::vector<TextEmbedding>& embeddings);

/// CSV dump: tuple_id,attr,v0..v{dim-1}.
std::string embeddings_to_csv(const std::vector<TextEmbedding>& embeddings);

}  // namespace udisc
