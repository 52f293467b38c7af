#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ragbreaker {

/// Dense vector with its Euclidean norm cached at construction.
class EmbeddingVector {
 public:
  EmbeddingVector() = default;
  explicit EmbeddingVector(std::vector<double> values);

  std::span<const double> values() const { return values_; }
  std::size_t dim() const { return values_.size(); }
  double norm() const { return norm_; }
  bool is_zero() const { return norm_ == 0.0; }

  friend bool operator==(const EmbeddingVector&,
                         const EmbeddingVector&) = default;

 private:
  std::vector<double> values_;
  double norm_ = 0.0;
};

/// dot(a, b) / (|a| |b|); 0 when either vector is zero.
/// Throws DimensionMismatch on unequal dimensions.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

/// 64-bit FNV-1a with the standard offset basis and prime.
std::uint64_t fnv1a64(std::string_view bytes);

enum class EmbedderKind { HashedNGram, WordVectorTable };

struct EmbedderConfig {
  EmbedderKind kind = EmbedderKind::HashedNGram;
  std::size_t dim = 1024;
  std::size_t ngram_min = 1;
  std::size_t ngram_max = 2;
  std::uint64_t hash_seed = 0;
  std::optional<std::filesystem::path> vector_file;
};

/// Immutable once constructed; safe to share across threads.
class Embedder {
 public:
  explicit Embedder(EmbedderConfig config);

  const EmbedderConfig& config() const { return config_; }
  std::size_t dim() const { return dim_; }

  EmbeddingVector embed_text(std::string_view text) const;
  EmbeddingVector embed_token_list(std::span<const std::string> tokens) const;
  std::vector<EmbeddingVector> embed_tokens(
      std::span<const std::string> tokens) const;

  /// Stable description of everything that affects vectors; part of the
  /// index fingerprint.
  std::string describe() const;

 private:
  EmbeddingVector hashed(std::span<const std::string> tokens) const;
  EmbeddingVector table_mean(std::span<const std::string> tokens) const;

  EmbedderConfig config_;
  std::size_t dim_ = 0;
  std::unordered_map<std::string, std::vector<double>> table_;
  std::uint64_t table_digest_ = 0;
};

EmbeddingVector embed_text(std::string_view text, const EmbedderConfig& config);
std::vector<EmbeddingVector> embed_tokens(std::span<const std::string> tokens,
                                          const EmbedderConfig& config);

std::string_view embedder_kind_name(EmbedderKind kind);
EmbedderKind parse_embedder_kind(std::string_view name);

}  // namespace ragbreaker
