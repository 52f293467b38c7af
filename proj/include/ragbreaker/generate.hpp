#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ragbreaker/corpus.hpp"
#include "ragbreaker/index.hpp"

namespace ragbreaker {

struct ContextChunk {
  std::string chunk_id;
  std::string text;
  Provenance provenance = Provenance::Benign;
};

struct Prompt {
  std::vector<ContextChunk> context;  // retrieval rank order
  std::string question;
  std::string template_id = "default";

  std::string render() const;
  std::vector<std::string> chunk_ids() const;
};

struct Answer {
  std::string text;
  std::string generator_id;
  std::vector<std::string> context_chunk_ids;
  double elapsed_ms = 0.0;
};

/// Chunk texts are looked up in `store`; throws EmptyContext when `results`
/// is empty and UnknownTemplate for unregistered template ids.
Prompt assemble_prompt(std::span<const RetrievalResult> results,
                       const CorpusStore& store, const std::string& question,
                       const std::string& template_id = "default");

/// Sentences end at '.', '!' or '?' followed by whitespace or end of text.
/// Returned sentences are trimmed substrings of `text`.
std::vector<std::string> split_sentences(const std::string& text);

/// Picks the context sentences sharing the most distinct tokens with the
/// question (earlier context wins ties) and emits them in context order.
Answer generate_extractive(const Prompt& prompt, std::size_t max_sentences = 3);

struct RemoteEndpoint {
  std::string url;  // e.g. http://localhost:8000/v1/chat/completions
  std::string model_id;
  std::string auth_token_env;  // empty: no Authorization header
  int timeout_ms = 30000;
};

/// Chat-completion style call. Connection failures are retried at most
/// twice; Timeout, HttpError and MalformedResponse surface to the caller.
Answer generate_remote(const Prompt& prompt, const RemoteEndpoint& endpoint);

}  // namespace ragbreaker
