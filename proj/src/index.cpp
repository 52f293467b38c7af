#include "ragbreaker/index.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "ragbreaker/error.hpp"

namespace ragbreaker {

namespace {

bool ranks_before(const RetrievalResult& a, const RetrievalResult& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.chunk_id < b.chunk_id;
}

}  // namespace

std::string config_fingerprint(const Embedder& embedder, ChunkParams params) {
  const std::string desc = embedder.describe() +
                           ";chunk=" + std::to_string(params.size) + "/" +
                           std::to_string(params.overlap);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(desc)));
  return buf;
}

VectorIndex::VectorIndex(std::string config_fingerprint,
                         std::vector<IndexEntry> entries)
    : fingerprint_(std::move(config_fingerprint)) {
  insert(std::move(entries));
  version_ = 1;
}

const IndexEntry* VectorIndex::find(const std::string& chunk_id) const {
  auto it = positions_.find(chunk_id);
  return it == positions_.end() ? nullptr : &entries_[it->second];
}

void VectorIndex::reindex() {
  positions_.clear();
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    positions_.emplace(entries_[i].chunk_id, i);
  }
}

std::uint64_t VectorIndex::insert(std::vector<IndexEntry> entries) {
  std::unordered_set<std::string> incoming;
  std::size_t dim = entries_.empty() ? 0 : entries_.front().vector.dim();
  for (const auto& e : entries) {
    if (contains(e.chunk_id) || !incoming.insert(e.chunk_id).second) {
      throw Error(ErrorCode::DuplicateChunkId,
                  "chunk id already indexed: " + e.chunk_id);
    }
    if (dim == 0) dim = e.vector.dim();
    if (e.vector.dim() != dim) {
      throw Error(ErrorCode::DimensionMismatch,
                  "chunk " + e.chunk_id + " has dimension " +
                      std::to_string(e.vector.dim()) + ", index uses " +
                      std::to_string(dim));
    }
  }
  entries_.reserve(entries_.size() + entries.size());
  for (auto& e : entries) {
    positions_.emplace(e.chunk_id, entries_.size());
    entries_.push_back(std::move(e));
  }
  return ++version_;
}

std::uint64_t VectorIndex::remove(std::span<const std::string> chunk_ids) {
  std::unordered_set<std::string> doomed;
  for (const auto& id : chunk_ids) {
    if (!contains(id)) {
      throw Error(ErrorCode::UnknownChunkId, "chunk id not indexed: " + id);
    }
    doomed.insert(id);
  }
  std::erase_if(entries_, [&](const IndexEntry& e) {
    return doomed.count(e.chunk_id) != 0;
  });
  reindex();
  return ++version_;
}

std::vector<RetrievalResult> VectorIndex::search(const EmbeddingVector& query,
                                                 std::size_t k) const {
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
  if (!entries_.empty() && entries_.front().vector.dim() != query.dim()) {
    throw Error(ErrorCode::DimensionMismatch,
                "query dimension " + std::to_string(query.dim()) +
                    " does not match index dimension " +
                    std::to_string(entries_.front().vector.dim()));
  }
  std::vector<RetrievalResult> scored;
  scored.reserve(entries_.size());
  for (const auto& e : entries_) {
    scored.push_back({e.chunk_id, cosine(query, e.vector), 0, e.provenance});
  }
  const std::size_t n = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + n, scored.end(),
                    ranks_before);
  scored.resize(n);
  for (std::size_t i = 0; i < n; ++i) scored[i].rank = i + 1;
  return scored;
}

nlohmann::json VectorIndex::to_json() const {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : entries_) {
    nlohmann::json vec = nlohmann::json::array();
    for (double x : e.vector.values()) vec.push_back(x);
    entries.push_back({{"chunk_id", e.chunk_id},
                       {"provenance", provenance_name(e.provenance)},
                       {"vector", std::move(vec)}});
  }
  return {{"schema_version", kSchemaVersion},
          {"config_fingerprint", fingerprint_},
          {"version", version_},
          {"entries", std::move(entries)}};
}

VectorIndex VectorIndex::from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("schema_version").get<int>() != kSchemaVersion) {
      throw Error(ErrorCode::MalformedRecord,
                  "unsupported index schema_version " +
                      doc.at("schema_version").dump());
    }
    std::vector<IndexEntry> entries;
    for (const auto& e : doc.at("entries")) {
      entries.push_back(
          {e.at("chunk_id").get<std::string>(),
           EmbeddingVector(e.at("vector").get<std::vector<double>>()),
           parse_provenance(e.at("provenance").get<std::string>())});
    }
    VectorIndex index(doc.at("config_fingerprint").get<std::string>(),
                      std::move(entries));
    index.version_ = doc.at("version").get<std::uint64_t>();
    return index;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedRecord,
                std::string("malformed index file: ") + e.what());
  }
}

void VectorIndex::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::MissingPath, "cannot write " + path.string());
  }
  out << to_json().dump() << '\n';
}

VectorIndex VectorIndex::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::MissingPath, "cannot read index " + path.string());
  }
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::MalformedRecord,
                "index file is not valid JSON: " + path.string());
  }
  return from_json(doc);
}

namespace {

std::vector<IndexEntry> embed_chunks(std::span<const Chunk> chunks,
                                     const Embedder& embedder,
                                     Provenance provenance) {
  std::vector<IndexEntry> entries;
  entries.reserve(chunks.size());
  for (const auto& c : chunks) {
    entries.push_back({c.chunk_id, embedder.embed_text(c.text), provenance});
  }
  return entries;
}

}  // namespace

VectorIndex build_index(std::span<const Chunk> chunks, const Embedder& embedder,
                        ChunkParams params, Provenance provenance) {
  return VectorIndex(config_fingerprint(embedder, params),
                     embed_chunks(chunks, embedder, provenance));
}

VectorIndex build_index(const CorpusStore& store, const Embedder& embedder,
                        ChunkParams params) {
  std::vector<IndexEntry> entries;
  for (const auto& c : store.all_chunks()) {
    const Document* doc = store.find_document(c.doc_id);
    entries.push_back({c.chunk_id, embedder.embed_text(c.text),
                       doc ? doc->provenance : Provenance::Benign});
  }
  return VectorIndex(config_fingerprint(embedder, params), std::move(entries));
}

std::uint64_t insert_chunks(VectorIndex& index, std::span<const Chunk> chunks,
                            const Embedder& embedder, Provenance provenance) {
  return index.insert(embed_chunks(chunks, embedder, provenance));
}

std::vector<RetrievalResult> search_top_k(const VectorIndex& index,
                                          const EmbeddingVector& query,
                                          std::size_t k) {
  return index.search(query, k);
}

std::vector<QueryDiff> diff_top_k(const VectorIndex& before,
                                  const VectorIndex& after,
                                  std::span<const std::string> queries,
                                  std::size_t k, const Embedder& embedder) {
  if (before.config_fingerprint() != after.config_fingerprint()) {
    throw Error(ErrorCode::FingerprintMismatch,
                "indexes were built with different configurations (" +
                    before.config_fingerprint() + " vs " +
                    after.config_fingerprint() + ")");
  }
  auto ids = [](const std::vector<RetrievalResult>& results) {
    std::vector<std::string> out;
    out.reserve(results.size());
    for (const auto& r : results) out.push_back(r.chunk_id);
    return out;
  };
  std::vector<QueryDiff> diffs;
  diffs.reserve(queries.size());
  for (const auto& q : queries) {
    const auto qv = embedder.embed_text(q);
    QueryDiff d;
    d.query = q;
    d.before = ids(before.search(qv, k));
    d.after = ids(after.search(qv, k));
    d.changed = d.before != d.after;
    diffs.push_back(std::move(d));
  }
  return diffs;
}

}  // namespace ragbreaker
