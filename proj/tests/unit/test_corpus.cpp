#include <random>

#include "helpers.hpp"
#include "ragbreaker/corpus.hpp"

using namespace ragbreaker;
using testing::TempDir;
using testing::write_file;

namespace {

Document doc_with_tokens(std::size_t n) {
  std::string body;
  for (std::size_t i = 0; i < n; ++i) body += "w" + std::to_string(i) + " ";
  return Document{"d", "d", "d", body, Provenance::Benign, {}};
}

}  // namespace

TEST_SUITE("corpus") {

TEST_CASE("tokenize splits on non-alphanumerics and lowercases") {
  CHECK(tokenize("Graph Theory.") == std::vector<std::string>{"graph", "theory"});
  CHECK(tokenize("").empty());
  CHECK(tokenize("Dr. Varga's research") ==
        std::vector<std::string>{"dr", "varga", "s", "research"});
  CHECK(tokenize("Summer 2024, April-12!") ==
        std::vector<std::string>{"summer", "2024", "april", "12"});
  CHECK(tokenize("  \t\n ...").empty());
}

TEST_CASE("tokenize handles non-ASCII letters and invalid UTF-8") {
  CHECK(tokenize("Lindqvist Ångström café") ==
        std::vector<std::string>{"lindqvist", "ångström", "café"});
  CHECK(tokenize("ΣΟΦΙΑ Мир") == std::vector<std::string>{"σοφια", "мир"});
  CHECK(tokenize(std::string("ab\xff" "cd")) == std::vector<std::string>{"ab", "cd"});
  CHECK(tokenize(std::string("x\xc3")) == std::vector<std::string>{"x"});
}

TEST_CASE("token spans point back into the source") {
  const std::string text = "Hello, World";
  auto spans = tokenize_spans(text);
  REQUIRE(spans.size() == 2);
  CHECK(text.substr(spans[1].begin, spans[1].end - spans[1].begin) == "World");
  CHECK(spans[1].token == "world");
}

TEST_CASE("chunking windows") {
  auto one = chunk_document(doc_with_tokens(10));
  REQUIRE(one.size() == 1);
  CHECK(one[0].ordinal == 0);
  CHECK(one[0].chunk_id == "d#0");
  CHECK(one[0].token_count == 10);

  auto two = chunk_document(doc_with_tokens(200));
  REQUIRE(two.size() == 2);
  CHECK(tokenize(two[1].text).front() == "w96");
  CHECK(two[0].token_count == 128);
  CHECK(two[1].token_count == 104);

  CHECK_THROWS_CODE(chunk_document(doc_with_tokens(5), {128, 128}),
                    ErrorCode::InvalidChunkParams);
  CHECK_THROWS_CODE(chunk_document(doc_with_tokens(5), {0, 0}),
                    ErrorCode::InvalidChunkParams);
}

TEST_CASE("chunk text keeps original casing") {
  Document d{"d", "d", "d", "Dr. Varga Studies AI.", Provenance::Benign, {}};
  auto chunks = chunk_document(d);
  REQUIRE(chunks.size() == 1);
  CHECK(chunks[0].text == "Dr. Varga Studies AI");
}

TEST_CASE("reconstruction property over random documents") {
  std::mt19937_64 rng(7);
  const char* words[] = {"alpha", "Beta", "gamma", "x1", "ñu", "delta!", "e.f", "42"};
  for (int trial = 0; trial < 200; ++trial) {
    std::string body;
    const auto n = rng() % 600;
    for (std::size_t i = 0; i < n; ++i) {
      body += words[rng() % 8];
      body += (rng() % 5 == 0) ? "\n" : " ";
    }
    if (body.empty()) body = "-";
    const ChunkParams params{1 + rng() % 64, 0};
    const ChunkParams p2{params.size, rng() % params.size};
    Document d{"doc", "doc", "doc", body, Provenance::Benign, {}};
    auto chunks = chunk_document(d, p2);
    std::vector<std::string> joined;
    for (std::size_t i = 0; i < chunks.size(); ++i) {
      CHECK(chunks[i].ordinal == i);
      auto toks = tokenize(chunks[i].text);
      CHECK(toks.size() == chunks[i].token_count);
      const std::size_t skip = i == 0 ? 0 : p2.overlap;
      REQUIRE(toks.size() >= skip);
      joined.insert(joined.end(), toks.begin() + static_cast<long>(skip), toks.end());
    }
    CHECK(joined == tokenize(body));
  }
}

TEST_CASE("ingest_dir reads text files sorted by id") {
  TempDir dir;
  write_file(dir / "b.txt", "Bee body");
  write_file(dir / "a.txt", "Title A\nAy body");
  write_file(dir / "skip.bin", "ignored");
  auto docs = ingest_dir(dir.path());
  REQUIRE(docs.size() == 2);
  CHECK(docs[0].id == "a.txt");
  CHECK(docs[1].id == "b.txt");
  CHECK(docs[0].title == "Title A");
  CHECK(docs[0].provenance == Provenance::Benign);
}

TEST_CASE("ingest_dir edge cases") {
  TempDir empty;
  CHECK(ingest_dir(empty.path()).empty());
  CHECK_THROWS_CODE(ingest_dir(empty / "missing"), ErrorCode::MissingPath);

  TempDir marked;
  write_file(marked / "p.txt", "[[provenance: poisoned]]\nEvil text");
  auto docs = ingest_dir(marked.path());
  REQUIRE(docs.size() == 1);
  CHECK(docs[0].provenance == Provenance::Poisoned);
}

TEST_CASE("jsonl corpus records") {
  auto docs = parse_jsonl_corpus(
      "{\"id\":\"x\",\"title\":\"X\",\"body\":\"hello\"}\n\n"
      "{\"id\":\"y\",\"title\":\"Y\",\"body\":\"world\",\"metadata\":{\"k\":\"v\"}}\n",
      "mem.jsonl");
  REQUIRE(docs.size() == 2);
  CHECK(docs[1].metadata.at("k") == "v");
  CHECK_THROWS_CODE(parse_jsonl_corpus("{\"id\":\"x\"}\n", "m"), ErrorCode::MalformedRecord);
  CHECK_THROWS_CODE(parse_jsonl_corpus("not json\n", "m"), ErrorCode::MalformedRecord);
  try {
    parse_jsonl_corpus("{\"id\":\"a\",\"title\":\"t\",\"body\":\"b\"}\n[1]\n", "m.jsonl");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find(":2") != std::string::npos);
  }
}

TEST_CASE("fixture corpus ingests to 20 benign documents deterministically") {
  auto a = ingest_dir(testing::kFixtures / "corpus");
  auto b = ingest_dir(testing::kFixtures / "corpus");
  CHECK(a.size() == 20);
  for (const auto& d : a) CHECK(d.provenance == Provenance::Benign);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].id == b[i].id);
    CHECK(a[i].body == b[i].body);
  }
}

TEST_CASE("corpus store") {
  CorpusStore store;
  Document d{"d", "d", "d", "one two three", Provenance::Benign, {}};
  store.add(d, chunk_document(d));
  CHECK(store.contains("d"));
  CHECK(store.find_chunk("d#0") != nullptr);
  CHECK(store.chunk_ids_of("d") == std::vector<std::string>{"d#0"});

  // Re-adding an id replaces the document and drops its stale chunks.
  Document longer = doc_with_tokens(200);
  store.add(longer, chunk_document(longer));
  CHECK(store.chunk_count() == 2);
  Document shorter = doc_with_tokens(3);
  store.add(shorter, chunk_document(shorter));
  CHECK(store.chunk_count() == 1);
  CHECK(store.find_chunk("d#1") == nullptr);

  CHECK(store.remove("d"));
  CHECK_FALSE(store.remove("d"));
  CHECK(store.chunk_count() == 0);
  CHECK(store.document_count() == 0);
}

}  // TEST_SUITE
