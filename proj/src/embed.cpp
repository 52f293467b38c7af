#include "ragbreaker/embed.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "ragbreaker/corpus.hpp"
#include "ragbreaker/error.hpp"

namespace ragbreaker {

namespace {

constexpr std::uint64_t kFnvOffset = 14695981039346656037ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

double l2(std::span<const double> v) {
  double sum = 0.0;
  for (double x : v) sum += x * x;
  return std::sqrt(sum);
}

EmbeddingVector normalized(std::vector<double> values) {
  const double n = l2(values);
  if (n > 0.0) {
    for (double& x : values) x /= n;
  }
  return EmbeddingVector(std::move(values));
}

bool parse_size(const std::string& s, std::size_t& out) {
  if (s.empty()) return false;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
  }
  out = std::stoull(s);
  return true;
}

}  // namespace

EmbeddingVector::EmbeddingVector(std::vector<double> values)
    : values_(std::move(values)), norm_(l2(values_)) {}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dim() != b.dim()) {
    throw Error(ErrorCode::DimensionMismatch,
                "cosine over vectors of dimension " + std::to_string(a.dim()) +
                    " and " + std::to_string(b.dim()));
  }
  if (a.is_zero() || b.is_zero()) return 0.0;
  const auto av = a.values();
  const auto bv = b.values();
  double dot = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) dot += av[i] * bv[i];
  return dot / (a.norm() * b.norm());
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = kFnvOffset;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= kFnvPrime;
  }
  return h;
}

std::string_view embedder_kind_name(EmbedderKind kind) {
  return kind == EmbedderKind::HashedNGram ? "hashed_ngram"
                                           : "word_vector_table";
}

EmbedderKind parse_embedder_kind(std::string_view name) {
  if (name == "hashed_ngram" || name == "HashedNGram") {
    return EmbedderKind::HashedNGram;
  }
  if (name == "word_vector_table" || name == "WordVectorTable") {
    return EmbedderKind::WordVectorTable;
  }
  throw Error(ErrorCode::InvalidConfig,
              "unknown embedder kind '" + std::string(name) + "'");
}

Embedder::Embedder(EmbedderConfig config) : config_(std::move(config)) {
  if (config_.kind == EmbedderKind::HashedNGram) {
    if (config_.dim < 8) {
      throw Error(ErrorCode::InvalidConfig, "embedding dim must be >= 8");
    }
    if (config_.ngram_min < 1 || config_.ngram_min > config_.ngram_max) {
      throw Error(ErrorCode::InvalidConfig, "invalid ngram range");
    }
    dim_ = config_.dim;
    return;
  }

  if (!config_.vector_file) {
    throw Error(ErrorCode::VectorFileMissing,
                "word_vector_table embedder requires vector_file");
  }
  std::ifstream in(*config_.vector_file);
  if (!in) {
    throw Error(ErrorCode::VectorFileMissing,
                "cannot open vector file " + config_.vector_file->string());
  }
  std::string line;
  std::size_t line_no = 0;
  std::uint64_t digest = kFnvOffset;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::vector<std::string> parts;
    for (std::string f; fields >> f;) parts.push_back(std::move(f));
    if (parts.empty()) continue;
    std::size_t a = 0;
    std::size_t b = 0;
    if (line_no == 1 && parts.size() == 2 && parse_size(parts[0], a) &&
        parse_size(parts[1], b)) {
      continue;
    }
    std::vector<double> row;
    row.reserve(parts.size() - 1);
    try {
      for (std::size_t i = 1; i < parts.size(); ++i) {
        row.push_back(std::stod(parts[i]));
      }
    } catch (const std::exception&) {
      throw Error(ErrorCode::DimensionMismatch,
                  "vector file line " + std::to_string(line_no) +
                      ": non-numeric component");
    }
    if (row.empty() || (dim_ != 0 && row.size() != dim_)) {
      throw Error(ErrorCode::DimensionMismatch,
                  "vector file line " + std::to_string(line_no) + " has " +
                      std::to_string(row.size()) + " components, expected " +
                      std::to_string(dim_));
    }
    dim_ = row.size();
    for (char c : line) {
      digest ^= static_cast<unsigned char>(c);
      digest *= kFnvPrime;
    }
    table_[parts[0]] = std::move(row);
  }
  if (dim_ == 0) {
    throw Error(ErrorCode::DimensionMismatch, "vector file has no rows");
  }
  table_digest_ = digest;
  config_.dim = dim_;
}

EmbeddingVector Embedder::hashed(std::span<const std::string> tokens) const {
  std::vector<double> acc(dim_, 0.0);
  std::string gram;
  for (std::size_t n = config_.ngram_min; n <= config_.ngram_max; ++n) {
    if (tokens.size() < n) break;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
      gram = tokens[i];
      for (std::size_t j = 1; j < n; ++j) {
        gram += ' ';
        gram += tokens[i + j];
      }
      const std::uint64_t h = fnv1a64(gram) ^ config_.hash_seed;
      const double sign = (h >> 63) == 0 ? 1.0 : -1.0;
      acc[h % dim_] += sign;
    }
  }
  return normalized(std::move(acc));
}

EmbeddingVector Embedder::table_mean(
    std::span<const std::string> tokens) const {
  std::vector<double> acc(dim_, 0.0);
  std::size_t known = 0;
  for (const auto& t : tokens) {
    auto it = table_.find(t);
    if (it == table_.end()) continue;
    ++known;
    for (std::size_t i = 0; i < dim_; ++i) acc[i] += it->second[i];
  }
  if (known == 0) return EmbeddingVector(std::move(acc));
  for (double& x : acc) x /= static_cast<double>(known);
  return normalized(std::move(acc));
}

EmbeddingVector Embedder::embed_token_list(
    std::span<const std::string> tokens) const {
  return config_.kind == EmbedderKind::HashedNGram ? hashed(tokens)
                                                   : table_mean(tokens);
}

EmbeddingVector Embedder::embed_text(std::string_view text) const {
  const auto tokens = tokenize(text);
  return embed_token_list(tokens);
}

std::vector<EmbeddingVector> Embedder::embed_tokens(
    std::span<const std::string> tokens) const {
  std::vector<EmbeddingVector> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(embed_text(t));
  return out;
}

std::string Embedder::describe() const {
  std::ostringstream s;
  s << "kind=" << embedder_kind_name(config_.kind) << ";dim=" << dim_;
  if (config_.kind == EmbedderKind::HashedNGram) {
    s << ";ngram=" << config_.ngram_min << "," << config_.ngram_max
      << ";seed=" << config_.hash_seed;
  } else {
    s << ";table=" << std::hex << table_digest_;
  }
  return s.str();
}

EmbeddingVector embed_text(std::string_view text,
                           const EmbedderConfig& config) {
  return Embedder(config).embed_text(text);
}

std::vector<EmbeddingVector> embed_tokens(std::span<const std::string> tokens,
                                          const EmbedderConfig& config) {
  return Embedder(config).embed_tokens(tokens);
}

}  // namespace ragbreaker
