#include "ragbreaker/generate.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <unordered_set>

#include "httplib.h"
#include "json.hpp"
#include "ragbreaker/error.hpp"

namespace ragbreaker {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start)
      .count();
}

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

std::string trim(const std::string& s, std::size_t from, std::size_t to) {
  while (from < to && is_space(s[from])) ++from;
  while (to > from && is_space(s[to - 1])) --to;
  return s.substr(from, to - from);
}

struct Candidate {
  std::string text;
  std::size_t position = 0;  // global order across the context
  std::size_t score = 0;
};

}  // namespace

std::string Prompt::render() const {
  std::string out = "Context:\n";
  for (const auto& c : context) {
    out += c.text;
    out += '\n';
  }
  out += "\nQuestion: ";
  out += question;
  out += "\nAnswer:";
  return out;
}

std::vector<std::string> Prompt::chunk_ids() const {
  std::vector<std::string> ids;
  ids.reserve(context.size());
  for (const auto& c : context) ids.push_back(c.chunk_id);
  return ids;
}

Prompt assemble_prompt(std::span<const RetrievalResult> results,
                       const CorpusStore& store, const std::string& question,
                       const std::string& template_id) {
  if (results.empty()) {
    throw Error(ErrorCode::EmptyContext, "no retrieved context to answer from");
  }
  if (question.empty()) {
    throw Error(ErrorCode::EmptyQuestion, "question is empty");
  }
  if (template_id != "default") {
    throw Error(ErrorCode::UnknownTemplate,
                "unknown prompt template '" + template_id + "'");
  }
  std::vector<const RetrievalResult*> ordered;
  for (const auto& r : results) ordered.push_back(&r);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](auto* a, auto* b) { return a->rank < b->rank; });

  Prompt prompt;
  prompt.question = question;
  prompt.template_id = template_id;
  for (const auto* r : ordered) {
    const Chunk* chunk = store.find_chunk(r->chunk_id);
    if (chunk == nullptr) {
      throw Error(ErrorCode::UnknownChunkId,
                  "retrieved chunk has no stored text: " + r->chunk_id);
    }
    prompt.context.push_back({r->chunk_id, chunk->text, r->provenance});
  }
  return prompt;
}

std::vector<std::string> split_sentences(const std::string& text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c != '.' && c != '!' && c != '?') continue;
    if (i + 1 < text.size() && !is_space(text[i + 1])) continue;
    auto s = trim(text, start, i + 1);
    if (!s.empty()) out.push_back(std::move(s));
    start = i + 1;
  }
  auto tail = trim(text, start, text.size());
  if (!tail.empty()) out.push_back(std::move(tail));
  return out;
}

Answer generate_extractive(const Prompt& prompt, std::size_t max_sentences) {
  const auto start = Clock::now();
  if (prompt.context.empty()) {
    throw Error(ErrorCode::EmptyContext, "prompt has no context");
  }
  if (prompt.question.empty()) {
    throw Error(ErrorCode::EmptyQuestion, "question is empty");
  }
  const auto q_tokens = tokenize(prompt.question);
  const std::unordered_set<std::string> question(q_tokens.begin(),
                                                 q_tokens.end());

  std::vector<Candidate> candidates;
  std::unordered_set<std::string> seen;
  std::string fallback;
  for (const auto& chunk : prompt.context) {
    for (auto& sentence : split_sentences(chunk.text)) {
      if (fallback.empty()) fallback = sentence;
      // Overlapping chunks of one document repeat sentences verbatim.
      if (!seen.insert(sentence).second) continue;
      const auto toks = tokenize(sentence);
      const std::unordered_set<std::string> present(toks.begin(), toks.end());
      std::size_t score = 0;
      for (const auto& t : question) score += present.count(t);
      candidates.push_back({std::move(sentence), candidates.size(), score});
    }
  }

  std::vector<Candidate*> ranked;
  for (auto& c : candidates) {
    if (c.score > 0) ranked.push_back(&c);
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](auto* a, auto* b) {
    if (a->score != b->score) return a->score > b->score;
    return a->position < b->position;
  });
  if (ranked.size() > max_sentences) ranked.resize(max_sentences);
  std::sort(ranked.begin(), ranked.end(),
            [](auto* a, auto* b) { return a->position < b->position; });

  Answer answer;
  answer.generator_id = "extractive";
  answer.context_chunk_ids = prompt.chunk_ids();
  if (ranked.empty()) {
    if (fallback.empty()) {
      throw Error(ErrorCode::EmptyContext, "context contains no sentences");
    }
    answer.text = fallback;
  } else {
    for (const auto* c : ranked) {
      if (!answer.text.empty()) answer.text += ' ';
      answer.text += c->text;
    }
  }
  answer.elapsed_ms = ms_since(start);
  return answer;
}

Answer generate_remote(const Prompt& prompt, const RemoteEndpoint& endpoint) {
  const auto start = Clock::now();
  // Split "scheme://host[:port]" from the request path.
  const auto scheme_end = endpoint.url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::InvalidConfig,
                "remote endpoint url needs a scheme: " + endpoint.url);
  }
  const auto path_start = endpoint.url.find('/', scheme_end + 3);
  const std::string origin = endpoint.url.substr(0, path_start);
  const std::string path = path_start == std::string::npos
                               ? "/"
                               : endpoint.url.substr(path_start);

  httplib::Client client(origin);
  const auto timeout = std::chrono::milliseconds(endpoint.timeout_ms);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);

  httplib::Headers headers;
  if (!endpoint.auth_token_env.empty()) {
    if (const char* token = std::getenv(endpoint.auth_token_env.c_str())) {
      headers.emplace("Authorization", std::string("Bearer ") + token);
    }
  }
  const nlohmann::json request = {
      {"model", endpoint.model_id},
      {"messages", {{{"role", "user"}, {"content", prompt.render()}}}}};
  const std::string body = request.dump();

  constexpr int kMaxRetries = 2;
  httplib::Result res{nullptr, httplib::Error::Unknown};
  for (int attempt = 0;; ++attempt) {
    const auto call_start = Clock::now();
    res = client.Post(path, headers, body, "application/json");
    if (res) break;
    const auto err = res.error();
    if (err == httplib::Error::ConnectionTimeout ||
        ((err == httplib::Error::Read || err == httplib::Error::Write) &&
         ms_since(call_start) >= 0.9 * endpoint.timeout_ms)) {
      throw Error(ErrorCode::Timeout,
                  "remote generator timed out after " +
                      std::to_string(endpoint.timeout_ms) + " ms");
    }
    if (err != httplib::Error::Connection || attempt == kMaxRetries) {
      throw Error::http(0, "remote generator request failed: " +
                               httplib::to_string(err));
    }
  }
  if (res->status < 200 || res->status >= 300) {
    throw Error::http(res->status, "remote generator returned HTTP " +
                                       std::to_string(res->status));
  }

  Answer answer;
  try {
    const auto doc = nlohmann::json::parse(res->body);
    answer.text =
        doc.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedResponse,
                std::string("unexpected remote response: ") + e.what());
  }
  if (answer.text.empty()) {
    throw Error(ErrorCode::MalformedResponse, "remote completion is empty");
  }
  answer.generator_id = "remote:" + endpoint.model_id;
  answer.context_chunk_ids = prompt.chunk_ids();
  answer.elapsed_ms = ms_since(start);
  return answer;
}

}  // namespace ragbreaker
