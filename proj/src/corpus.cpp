#include "ragbreaker/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "ragbreaker/error.hpp"

namespace ragbreaker {

namespace {

constexpr char32_t kInvalid = 0xFFFFFFFF;

// Decodes one code point starting at `pos`, advancing it. Returns kInvalid for
// malformed sequences (consuming a single byte).
char32_t decode_utf8(std::string_view s, std::size_t& pos) {
  const auto b0 = static_cast<unsigned char>(s[pos]);
  if (b0 < 0x80) {
    ++pos;
    return b0;
  }
  std::size_t len = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    ++pos;
    return kInvalid;
  }
  if (pos + len > s.size()) {
    ++pos;
    return kInvalid;
  }
  for (std::size_t i = 1; i < len; ++i) {
    const auto b = static_cast<unsigned char>(s[pos + i]);
    if ((b & 0xC0) != 0x80) {
      ++pos;
      return kInvalid;
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  // Reject overlong encodings and surrogates.
  static constexpr char32_t kMin[] = {0, 0, 0x80, 0x800, 0x10000};
  if (cp < kMin[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
    ++pos;
    return kInvalid;
  }
  pos += len;
  return cp;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

bool is_word_char(char32_t c) {
  if (c < 0x80) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
           (c >= '0' && c <= '9');
  }
  if (c == 0xAA || c == 0xB5 || c == 0xBA) return true;
  if (c >= 0xC0 && c <= 0xFF) return c != 0xD7 && c != 0xF7;
  if (c >= 0x100 && c <= 0x17F) return true;
  if (c == 0x386 || (c >= 0x388 && c <= 0x38A) || c == 0x38C) return true;
  if (c >= 0x38E && c <= 0x3CE) return c != 0x3A2;
  if (c >= 0x400 && c <= 0x481) return true;
  if (c >= 0x48A && c <= 0x4FF) return true;
  return false;
}

char32_t to_lower(char32_t c) {
  if (c >= 'A' && c <= 'Z') return c + 0x20;
  if (c < 0x80) return c;
  if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return c + 0x20;
  if (c >= 0x100 && c <= 0x17F) {
    if (c == 0x130) return 'i';
    if (c == 0x178) return 0xFF;
    if ((c >= 0x100 && c <= 0x137) || (c >= 0x14A && c <= 0x177)) {
      return (c % 2 == 0) ? c + 1 : c;
    }
    if ((c >= 0x139 && c <= 0x148) || (c >= 0x179 && c <= 0x17E)) {
      return (c % 2 == 1) ? c + 1 : c;
    }
    return c;
  }
  if (c == 0x386) return 0x3AC;
  if (c >= 0x388 && c <= 0x38A) return c + 37;
  if (c == 0x38C) return 0x3CC;
  if (c == 0x38E || c == 0x38F) return c + 63;
  if ((c >= 0x391 && c <= 0x3A1) || (c >= 0x3A3 && c <= 0x3AB)) {
    return c + 0x20;
  }
  if (c >= 0x400 && c <= 0x40F) return c + 0x50;
  if (c >= 0x410 && c <= 0x42F) return c + 0x20;
  if ((c >= 0x460 && c <= 0x481) || (c >= 0x48A && c <= 0x4BF) ||
      (c >= 0x4D0 && c <= 0x4FF)) {
    return (c % 2 == 0) ? c + 1 : c;
  }
  if (c == 0x4C0) return 0x4CF;
  if (c >= 0x4C1 && c <= 0x4CE) return (c % 2 == 1) ? c + 1 : c;
  return c;
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::MissingPath, "cannot read " + p.generic_string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Text files may start with this line to mark a crafted poison artifact.
constexpr std::string_view kPoisonMarker = "[[provenance: poisoned]]";

Document document_from_text(const std::string& id, const std::string& uri,
                            std::string content) {
  Document doc;
  doc.id = id;
  doc.source_uri = uri;
  if (content.rfind(kPoisonMarker, 0) == 0) {
    doc.provenance = Provenance::Poisoned;
    auto nl = content.find('\n');
    content = nl == std::string::npos ? std::string() : content.substr(nl + 1);
  }
  auto nl = content.find('\n');
  doc.title = trim(std::string_view(content).substr(0, nl));
  doc.body = std::move(content);
  if (trim(doc.body).empty()) {
    throw Error(ErrorCode::MalformedRecord, uri + ": document body is empty");
  }
  return doc;
}

}  // namespace

std::string_view provenance_name(Provenance p) {
  return p == Provenance::Poisoned ? "poisoned" : "benign";
}

Provenance parse_provenance(std::string_view name) {
  if (name == "poisoned" || name == "Poisoned") return Provenance::Poisoned;
  if (name == "benign" || name == "Benign") return Provenance::Benign;
  throw Error(ErrorCode::MalformedRecord,
              "unknown provenance '" + std::string(name) + "'");
}

std::vector<TokenSpan> tokenize_spans(std::string_view text) {
  std::vector<TokenSpan> out;
  std::string current;
  std::size_t begin = 0;
  std::size_t pos = 0;
  bool in_token = false;
  while (pos < text.size()) {
    const std::size_t start = pos;
    const char32_t cp = decode_utf8(text, pos);
    if (cp != kInvalid && is_word_char(cp)) {
      if (!in_token) {
        in_token = true;
        begin = start;
      }
      append_utf8(current, to_lower(cp));
    } else if (in_token) {
      out.push_back({std::move(current), begin, start});
      current.clear();
      in_token = false;
    }
  }
  if (in_token) out.push_back({std::move(current), begin, text.size()});
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  auto spans = tokenize_spans(text);
  std::vector<std::string> out;
  out.reserve(spans.size());
  for (auto& s : spans) out.push_back(std::move(s.token));
  return out;
}

std::vector<Chunk> chunk_document(const Document& doc, ChunkParams params) {
  if (params.size == 0 || params.overlap >= params.size) {
    throw Error(ErrorCode::InvalidChunkParams,
                "chunk overlap must be smaller than chunk size (size=" +
                    std::to_string(params.size) +
                    ", overlap=" + std::to_string(params.overlap) + ")");
  }
  const auto spans = tokenize_spans(doc.body);
  std::vector<Chunk> chunks;
  auto make = [&](std::size_t ordinal, std::string text, std::size_t count) {
    Chunk c;
    c.chunk_id = doc.id + "#" + std::to_string(ordinal);
    c.doc_id = doc.id;
    c.ordinal = ordinal;
    c.text = std::move(text);
    c.token_count = count;
    return c;
  };
  if (spans.empty()) {
    chunks.push_back(make(0, doc.body, 0));
    return chunks;
  }
  const std::size_t stride = params.size - params.overlap;
  for (std::size_t start = 0;; start += stride) {
    const std::size_t end = std::min(start + params.size, spans.size());
    const std::size_t from = spans[start].begin;
    const std::size_t to = spans[end - 1].end;
    chunks.push_back(
        make(chunks.size(), doc.body.substr(from, to - from), end - start));
    if (end == spans.size()) break;
  }
  return chunks;
}

std::vector<Document> parse_jsonl_corpus(std::string_view content,
                                         const std::string& origin) {
  std::vector<Document> docs;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= content.size()) {
    auto nl = content.find('\n', pos);
    if (nl == std::string_view::npos) nl = content.size();
    const auto line = content.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (trim(line).empty()) continue;
    const std::string where = origin + ":" + std::to_string(line_no);
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::MalformedRecord, where + ": invalid JSON");
    }
    if (!rec.is_object()) {
      throw Error(ErrorCode::MalformedRecord, where + ": expected an object");
    }
    for (const char* field : {"id", "title", "body"}) {
      if (!rec.contains(field) || !rec[field].is_string()) {
        throw Error(ErrorCode::MalformedRecord,
                    where + ": missing string field '" + field + "'");
      }
    }
    Document doc;
    doc.id = rec["id"].get<std::string>();
    doc.title = rec["title"].get<std::string>();
    doc.body = rec["body"].get<std::string>();
    doc.source_uri = rec.value("source_uri", origin);
    if (rec.contains("provenance")) {
      doc.provenance = parse_provenance(rec["provenance"].get<std::string>());
    }
    if (rec.contains("metadata")) {
      if (!rec["metadata"].is_object()) {
        throw Error(ErrorCode::MalformedRecord,
                    where + ": metadata must be an object");
      }
      for (const auto& [k, v] : rec["metadata"].items()) {
        doc.metadata[k] = v.is_string() ? v.get<std::string>() : v.dump();
      }
    }
    if (doc.id.empty() || trim(doc.body).empty()) {
      throw Error(ErrorCode::MalformedRecord,
                  where + ": id and body must be non-empty");
    }
    docs.push_back(std::move(doc));
    if (nl == content.size()) break;
  }
  return docs;
}

std::vector<Document> ingest_dir(const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(path, ec)) {
    throw Error(ErrorCode::MissingPath,
                "corpus directory not found: " + path.generic_string());
  }
  std::vector<fs::path> files;
  for (auto it = fs::recursive_directory_iterator(path); it != fs::end(it);
       ++it) {
    if (it->is_regular_file()) files.push_back(it->path());
  }
  std::sort(files.begin(), files.end());

  std::vector<Document> docs;
  for (const auto& file : files) {
    const auto ext = file.extension().string();
    const auto rel = fs::relative(file, path).generic_string();
    if (ext == ".txt" || ext == ".md") {
      docs.push_back(document_from_text(rel, file.generic_string(),
                                        read_file(file)));
    } else if (ext == ".jsonl") {
      for (auto& d : parse_jsonl_corpus(read_file(file), rel)) {
        docs.push_back(std::move(d));
      }
    }
  }
  std::sort(docs.begin(), docs.end(),
            [](const Document& a, const Document& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < docs.size(); ++i) {
    if (docs[i].id == docs[i - 1].id) {
      throw Error(ErrorCode::MalformedRecord,
                  "duplicate document id '" + docs[i].id + "'");
    }
  }
  return docs;
}

void CorpusStore::add(Document doc, std::vector<Chunk> chunks) {
  const std::string id = doc.id;
  auto& ids = doc_chunks_[id];
  for (const auto& stale : ids) chunks_.erase(stale);
  ids.clear();
  for (auto& c : chunks) {
    ids.push_back(c.chunk_id);
    chunks_[c.chunk_id] = std::move(c);
  }
  docs_[id] = std::move(doc);
}

bool CorpusStore::remove(const std::string& doc_id) {
  auto it = docs_.find(doc_id);
  if (it == docs_.end()) return false;
  for (const auto& cid : doc_chunks_[doc_id]) chunks_.erase(cid);
  doc_chunks_.erase(doc_id);
  docs_.erase(it);
  return true;
}

const Document* CorpusStore::find_document(const std::string& doc_id) const {
  auto it = docs_.find(doc_id);
  return it == docs_.end() ? nullptr : &it->second;
}

const Chunk* CorpusStore::find_chunk(const std::string& chunk_id) const {
  auto it = chunks_.find(chunk_id);
  return it == chunks_.end() ? nullptr : &it->second;
}

std::vector<const Document*> CorpusStore::documents() const {
  std::vector<const Document*> out;
  out.reserve(docs_.size());
  for (const auto& [id, doc] : docs_) out.push_back(&doc);
  return out;
}

std::vector<Chunk> CorpusStore::all_chunks() const {
  std::vector<Chunk> out;
  out.reserve(chunks_.size());
  for (const auto& [doc_id, ids] : doc_chunks_) {
    for (const auto& cid : ids) out.push_back(chunks_.at(cid));
  }
  return out;
}

std::vector<std::string> CorpusStore::chunk_ids_of(
    const std::string& doc_id) const {
  auto it = doc_chunks_.find(doc_id);
  return it == doc_chunks_.end() ? std::vector<std::string>{} : it->second;
}

}  // namespace ragbreaker
