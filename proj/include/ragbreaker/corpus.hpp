#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace ragbreaker {

enum class Provenance { Benign, Poisoned };

std::string_view provenance_name(Provenance p);
Provenance parse_provenance(std::string_view name);

struct Document {
  std::string id;
  std::string source_uri;
  std::string title;
  std::string body;
  Provenance provenance = Provenance::Benign;
  std::map<std::string, std::string> metadata;
};

struct Chunk {
  std::string chunk_id;
  std::string doc_id;
  std::size_t ordinal = 0;
  std::string text;
  std::size_t token_count = 0;
};

/// A token together with the byte range it occupies in the source text.
struct TokenSpan {
  std::string token;
  std::size_t begin = 0;
  std::size_t end = 0;
};

/// Maximal runs of letters/digits, lowercased. Everything else separates.
///
/// Classification covers ASCII, Latin-1, Latin Extended-A, Greek and Cyrillic;
/// other code points are treated as separators. Invalid UTF-8 bytes are
/// separators too, so the function never fails.
std::vector<std::string> tokenize(std::string_view text);
std::vector<TokenSpan> tokenize_spans(std::string_view text);

struct ChunkParams {
  std::size_t size = 128;
  std::size_t overlap = 32;
};

std::vector<Chunk> chunk_document(const Document& doc, ChunkParams params = {});

/// Reads `.txt`/`.md` files (recursively) and `.jsonl` record files.
/// Results are sorted by id.
std::vector<Document> ingest_dir(const std::filesystem::path& path);

/// Parses a JSONL corpus stream. `origin` is used in error messages and as
/// the default source_uri.
std::vector<Document> parse_jsonl_corpus(std::string_view content,
                                         const std::string& origin);

/// Documents plus their chunks, keyed by id. Value type; copies are cheap
/// enough at desk scale and let callers publish immutable snapshots.
class CorpusStore {
 public:
  void add(Document doc, std::vector<Chunk> chunks);
  // Returns false if the document is unknown.
  bool remove(const std::string& doc_id);

  bool contains(const std::string& doc_id) const {
    return docs_.count(doc_id) != 0;
  }
  const Document* find_document(const std::string& doc_id) const;
  const Chunk* find_chunk(const std::string& chunk_id) const;
  std::vector<const Document*> documents() const;
  std::vector<Chunk> all_chunks() const;
  std::vector<std::string> chunk_ids_of(const std::string& doc_id) const;
  std::size_t document_count() const { return docs_.size(); }
  std::size_t chunk_count() const { return chunks_.size(); }

 private:
  std::map<std::string, Document> docs_;
  std::map<std::string, Chunk> chunks_;
  std::map<std::string, std::vector<std::string>> doc_chunks_;
};

}  // namespace ragbreaker
