#include <cstdlib>

#include "helpers.hpp"
#include "ragbreaker/config.hpp"

using namespace ragbreaker;

namespace {

// Sets an environment variable for the current scope.
class ScopedEnv {
 public:
  ScopedEnv(const char* name, const char* value) : name_(name) { ::setenv(name, value, 1); }
  ~ScopedEnv() { ::unsetenv(name_); }

 private:
  const char* name_;
};

}  // namespace

TEST_SUITE("config") {

TEST_CASE("defaults") {
  const AppConfig cfg = load_config(std::nullopt);
  CHECK(cfg.pipeline.k == 4);
  CHECK(cfg.pipeline.embedder.dim == 1024);
  CHECK(cfg.pipeline.chunking.size == 128);
  CHECK(cfg.pipeline.chunking.overlap == 32);
  CHECK(cfg.service.port == 8080);
  CHECK(cfg.service.admin_token_env == "RAGBREAKER_ADMIN_TOKEN");
}

TEST_CASE("file values and round trip") {
  testing::TempDir dir;
  testing::write_file(dir / "c.json", R"({
    "k": 6,
    "embedder": {"kind": "hashed_ngram", "dim": 256, "ngram_range": [1, 3], "hash_seed": 9},
    "chunking": {"size": 64, "overlap": 8},
    "generator": {"kind": "extractive", "max_sentences": 2},
    "service": {"port": 9001, "token_env": "MY_TOKEN", "cors_origins": ["http://localhost:5173"]},
    "corpus": "fixtures/corpus"
  })");
  const auto cfg = load_config(dir / "c.json");
  CHECK(cfg.pipeline.k == 6);
  CHECK(cfg.pipeline.embedder.dim == 256);
  CHECK(cfg.pipeline.embedder.ngram_max == 3);
  CHECK(cfg.pipeline.embedder.hash_seed == 9);
  CHECK(cfg.pipeline.chunking.size == 64);
  CHECK(cfg.pipeline.generator.max_sentences == 2);
  CHECK(cfg.service.port == 9001);
  CHECK(cfg.service.cors_origins.size() == 1);
  CHECK(cfg.corpus->string() == "fixtures/corpus");

  const auto again = config_from_json(config_to_json(cfg));
  CHECK(config_to_json(again) == config_to_json(cfg));
}

TEST_CASE("invalid files") {
  testing::TempDir dir;
  CHECK_THROWS_CODE(load_config(dir / "missing.json"), ErrorCode::MissingPath);
  testing::write_file(dir / "bad.json", "{ not json");
  CHECK_THROWS_CODE(load_config(dir / "bad.json"), ErrorCode::InvalidConfig);

  using nlohmann::json;
  CHECK_THROWS_CODE(config_from_json(json{{"kk", 1}}), ErrorCode::InvalidConfig);
  CHECK_THROWS_CODE(config_from_json(json{{"k", "four"}}), ErrorCode::InvalidConfig);
  CHECK_THROWS_CODE(config_from_json(json{{"k", 0}}), ErrorCode::InvalidConfig);
  CHECK_THROWS_CODE(config_from_json(json{{"chunking", {{"size", 8}, {"overlap", 8}}}}),
                    ErrorCode::InvalidChunkParams);
  CHECK_THROWS_CODE(config_from_json(json{{"service", {{"port", 70000}}}}), ErrorCode::InvalidConfig);
  CHECK_THROWS_CODE(config_from_json(json{{"generator", {{"kind", "remote"}}}}), ErrorCode::InvalidConfig);
  CHECK_THROWS_CODE(config_from_json(json{{"embedder", {{"kind", "word_vector_table"}}}}),
                    ErrorCode::VectorFileMissing);
  CHECK_THROWS_CODE(config_from_json(json::array()), ErrorCode::InvalidConfig);
}

TEST_CASE("environment overrides win over the file") {
  ScopedEnv port("RAGBREAKER_PORT", "9100");
  ScopedEnv k("RAGBREAKER_K", "7");
  ScopedEnv corpus("RAGBREAKER_CORPUS", "/data/corpus");
  ScopedEnv url("RAGBREAKER_GENERATOR_URL", "http://127.0.0.1:9/v1/chat/completions");
  const auto cfg = load_config(std::nullopt);
  CHECK(cfg.service.port == 9100);
  CHECK(cfg.pipeline.k == 7);
  CHECK(cfg.corpus->string() == "/data/corpus");
  CHECK(cfg.pipeline.generator.kind == GeneratorConfig::Kind::Remote);
}

TEST_CASE("malformed environment overrides") {
  {
    ScopedEnv port("RAGBREAKER_PORT", "80x");
    CHECK_THROWS_CODE(load_config(std::nullopt), ErrorCode::InvalidConfig);
  }
  {
    ScopedEnv k("RAGBREAKER_K", "0");
    CHECK_THROWS_CODE(load_config(std::nullopt), ErrorCode::InvalidConfig);
  }
}

}  // TEST_SUITE
