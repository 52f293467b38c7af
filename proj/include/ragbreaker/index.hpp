#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "ragbreaker/corpus.hpp"
#include "ragbreaker/embed.hpp"

namespace ragbreaker {

struct IndexEntry {
  std::string chunk_id;
  EmbeddingVector vector;
  Provenance provenance = Provenance::Benign;
};

struct RetrievalResult {
  std::string chunk_id;
  double score = 0.0;
  std::size_t rank = 0;  // 1-based
  Provenance provenance = Provenance::Benign;
};

/// Hex digest over the embedder description and chunking parameters. Two
/// indexes are comparable only if their fingerprints agree.
std::string config_fingerprint(const Embedder& embedder, ChunkParams params);

/// Exact cosine index. Every successful mutation bumps `version()`.
///
/// Provenance is carried for red-team reporting only and never enters the
/// score computation.
class VectorIndex {
 public:
  static constexpr int kSchemaVersion = 1;

  VectorIndex() = default;
  explicit VectorIndex(std::string config_fingerprint)
      : fingerprint_(std::move(config_fingerprint)) {}
  /// Bulk construction; the result is at version 1.
  VectorIndex(std::string config_fingerprint, std::vector<IndexEntry> entries);

  const std::string& config_fingerprint() const { return fingerprint_; }
  std::uint64_t version() const { return version_; }
  std::span<const IndexEntry> entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  bool contains(const std::string& chunk_id) const {
    return positions_.count(chunk_id) != 0;
  }
  const IndexEntry* find(const std::string& chunk_id) const;

  /// Appends entries. All-or-nothing: on DuplicateChunkId or
  /// DimensionMismatch the index is left untouched.
  std::uint64_t insert(std::vector<IndexEntry> entries);

  /// Removes entries. Throws UnknownChunkId (index untouched) if any id is
  /// absent.
  std::uint64_t remove(std::span<const std::string> chunk_ids);

  /// Top-k by cosine, score descending, ties by chunk_id ascending.
  std::vector<RetrievalResult> search(const EmbeddingVector& query,
                                      std::size_t k) const;

  nlohmann::json to_json() const;
  static VectorIndex from_json(const nlohmann::json& doc);

  void save(const std::filesystem::path& path) const;
  static VectorIndex load(const std::filesystem::path& path);

 private:
  void reindex();

  std::vector<IndexEntry> entries_;
  std::unordered_map<std::string, std::size_t> positions_;
  std::string fingerprint_;
  std::uint64_t version_ = 1;
};

VectorIndex build_index(std::span<const Chunk> chunks, const Embedder& embedder,
                        ChunkParams params,
                        Provenance provenance = Provenance::Benign);

/// Indexes every chunk of the store, taking provenance from its document.
VectorIndex build_index(const CorpusStore& store, const Embedder& embedder,
                        ChunkParams params);

std::uint64_t insert_chunks(VectorIndex& index, std::span<const Chunk> chunks,
                            const Embedder& embedder, Provenance provenance);

std::vector<RetrievalResult> search_top_k(const VectorIndex& index,
                                          const EmbeddingVector& query,
                                          std::size_t k);

struct QueryDiff {
  std::string query;
  bool changed = false;
  std::vector<std::string> before;  // chunk ids in rank order
  std::vector<std::string> after;
};

std::vector<QueryDiff> diff_top_k(const VectorIndex& before,
                                  const VectorIndex& after,
                                  std::span<const std::string> queries,
                                  std::size_t k, const Embedder& embedder);

}  // namespace ragbreaker
