#include "ragbreaker/pipeline.hpp"

#include <algorithm>

#include "ragbreaker/error.hpp"

namespace ragbreaker {

QueryOutcome answer_query(const std::string& question, const KnowledgeBase& kb,
                          const Embedder& embedder,
                          const PipelineConfig& config,
                          std::optional<std::size_t> k_override) {
  if (question.find_first_not_of(" \t\r\n") == std::string::npos) {
    throw Error(ErrorCode::EmptyQuestion, "question is empty");
  }
  if (kb.index.empty()) {
    throw Error(ErrorCode::EmptyIndex, "the index has no entries");
  }
  const std::size_t k = k_override.value_or(config.k);
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");

  QueryOutcome out;
  auto& trace = out.trace;
  const auto qv = embedder.embed_text(question);
  trace.query = question;
  trace.query_vector_norm = qv.norm();
  trace.index_version = kb.index.version();
  trace.results = kb.index.search(qv, k);
  for (const auto& r : trace.results) {
    if (r.provenance == Provenance::Poisoned) {
      trace.poison_hit = true;
      trace.poison_rank = r.rank;
      break;
    }
  }

  const Prompt prompt =
      assemble_prompt(trace.results, kb.store, question, config.template_id);
  if (config.generator.kind == GeneratorConfig::Kind::Remote) {
    out.answer = generate_remote(prompt, config.generator.remote);
  } else {
    out.answer = generate_extractive(prompt, config.generator.max_sentences);
  }
  return out;
}

KnowledgeBase build_knowledge_base(const std::vector<Document>& docs,
                                   const Embedder& embedder,
                                   ChunkParams params) {
  KnowledgeBase kb;
  for (const auto& doc : docs) {
    kb.store.add(doc, chunk_document(doc, params));
  }
  kb.index = build_index(kb.store, embedder, params);
  return kb;
}

}  // namespace ragbreaker
