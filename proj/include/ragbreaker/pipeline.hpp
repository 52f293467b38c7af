#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ragbreaker/corpus.hpp"
#include "ragbreaker/embed.hpp"
#include "ragbreaker/generate.hpp"
#include "ragbreaker/index.hpp"

namespace ragbreaker {

/// Chunk texts plus the index over them. Shared as an immutable snapshot.
struct KnowledgeBase {
  CorpusStore store;
  VectorIndex index;
};

struct GeneratorConfig {
  enum class Kind { Extractive, Remote };
  Kind kind = Kind::Extractive;
  std::size_t max_sentences = 3;
  RemoteEndpoint remote;
};

struct PipelineConfig {
  std::size_t k = 4;
  EmbedderConfig embedder;
  ChunkParams chunking;
  GeneratorConfig generator;
  std::string template_id = "default";
};

struct RetrievalTrace {
  std::string query;
  double query_vector_norm = 0.0;
  std::vector<RetrievalResult> results;
  bool poison_hit = false;
  std::optional<std::size_t> poison_rank;
  std::uint64_t index_version = 0;
};

struct QueryOutcome {
  Answer answer;
  RetrievalTrace trace;
};

/// Retrieves the top-k chunks for `question` and generates an answer from
/// them. `k_override`, when set, replaces `config.k` for this call.
QueryOutcome answer_query(const std::string& question, const KnowledgeBase& kb,
                          const Embedder& embedder,
                          const PipelineConfig& config,
                          std::optional<std::size_t> k_override = {});

/// Ingests and chunks `docs` and indexes them.
KnowledgeBase build_knowledge_base(const std::vector<Document>& docs,
                                   const Embedder& embedder,
                                   ChunkParams params);

}  // namespace ragbreaker
