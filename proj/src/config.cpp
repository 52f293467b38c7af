#include "ragbreaker/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

#include "ragbreaker/error.hpp"

namespace ragbreaker {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                    const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    if (allowed.count(key) == 0) {
      throw Error(ErrorCode::InvalidConfig,
                  where + ": unknown key '" + key + "'");
    }
  }
}

const char* env(const char* name) {
  const char* v = std::getenv(name);
  return v != nullptr && *v != '\0' ? v : nullptr;
}

long long parse_int(const std::string& text, const char* what) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidConfig,
                std::string(what) + " must be an integer, got '" + text + "'");
  }
}

}  // namespace

AppConfig config_from_json(const json& doc) {
  if (!doc.is_object()) {
    throw Error(ErrorCode::InvalidConfig, "config must be a JSON object");
  }
  reject_unknown(doc,
                 {"k", "embedder", "chunking", "generator", "template_id",
                  "service", "corpus", "index", "poisons"},
                 "config");
  AppConfig cfg;
  auto& p = cfg.pipeline;
  try {
    if (doc.contains("k")) p.k = doc.at("k").get<std::size_t>();
    if (doc.contains("template_id")) {
      p.template_id = doc.at("template_id").get<std::string>();
    }
    if (doc.contains("embedder")) {
      const auto& e = doc.at("embedder");
      reject_unknown(e, {"kind", "dim", "ngram_range", "hash_seed",
                         "vector_file"},
                     "embedder");
      if (e.contains("kind")) {
        p.embedder.kind = parse_embedder_kind(e.at("kind").get<std::string>());
      }
      if (e.contains("dim")) p.embedder.dim = e.at("dim").get<std::size_t>();
      if (e.contains("ngram_range")) {
        const auto range = e.at("ngram_range").get<std::vector<std::size_t>>();
        if (range.size() != 2) {
          throw Error(ErrorCode::InvalidConfig,
                      "embedder.ngram_range must have two entries");
        }
        p.embedder.ngram_min = range[0];
        p.embedder.ngram_max = range[1];
      }
      if (e.contains("hash_seed")) {
        p.embedder.hash_seed = e.at("hash_seed").get<std::uint64_t>();
      }
      if (e.contains("vector_file") && !e.at("vector_file").is_null()) {
        p.embedder.vector_file = e.at("vector_file").get<std::string>();
      }
    }
    if (doc.contains("chunking")) {
      const auto& c = doc.at("chunking");
      reject_unknown(c, {"size", "overlap"}, "chunking");
      if (c.contains("size")) p.chunking.size = c.at("size").get<std::size_t>();
      if (c.contains("overlap")) {
        p.chunking.overlap = c.at("overlap").get<std::size_t>();
      }
    }
    if (doc.contains("generator")) {
      const auto& g = doc.at("generator");
      reject_unknown(g, {"kind", "max_sentences", "url", "model_id",
                         "token_env", "timeout_ms"},
                     "generator");
      const auto kind = g.value("kind", std::string("extractive"));
      if (kind == "extractive") {
        p.generator.kind = GeneratorConfig::Kind::Extractive;
      } else if (kind == "remote") {
        p.generator.kind = GeneratorConfig::Kind::Remote;
      } else {
        throw Error(ErrorCode::InvalidConfig,
                    "generator.kind must be 'extractive' or 'remote'");
      }
      if (g.contains("max_sentences")) {
        p.generator.max_sentences = g.at("max_sentences").get<std::size_t>();
      }
      auto& r = p.generator.remote;
      r.url = g.value("url", r.url);
      r.model_id = g.value("model_id", r.model_id);
      r.auth_token_env = g.value("token_env", r.auth_token_env);
      r.timeout_ms = g.value("timeout_ms", r.timeout_ms);
    }
    if (doc.contains("service")) {
      const auto& s = doc.at("service");
      reject_unknown(s, {"host", "port", "token_env", "cors_origins"},
                     "service");
      cfg.service.host = s.value("host", cfg.service.host);
      cfg.service.port = s.value("port", cfg.service.port);
      cfg.service.admin_token_env =
          s.value("token_env", cfg.service.admin_token_env);
      if (s.contains("cors_origins")) {
        cfg.service.cors_origins =
            s.at("cors_origins").get<std::vector<std::string>>();
      }
    }
    for (auto [key, slot] : {std::pair{"corpus", &cfg.corpus},
                             std::pair{"index", &cfg.index},
                             std::pair{"poisons", &cfg.poisons}}) {
      if (doc.contains(key) && !doc.at(key).is_null()) {
        *slot = doc.at(key).get<std::string>();
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("config: ") + e.what());
  }
  validate(cfg);
  return cfg;
}

json config_to_json(const AppConfig& cfg) {
  const auto& p = cfg.pipeline;
  json embedder = {{"kind", embedder_kind_name(p.embedder.kind)},
                   {"dim", p.embedder.dim},
                   {"ngram_range", {p.embedder.ngram_min, p.embedder.ngram_max}},
                   {"hash_seed", p.embedder.hash_seed},
                   {"vector_file", p.embedder.vector_file
                                       ? json(p.embedder.vector_file->string())
                                       : json(nullptr)}};
  json generator = {
      {"kind", p.generator.kind == GeneratorConfig::Kind::Remote ? "remote"
                                                                 : "extractive"},
      {"max_sentences", p.generator.max_sentences},
      {"url", p.generator.remote.url},
      {"model_id", p.generator.remote.model_id},
      {"token_env", p.generator.remote.auth_token_env},
      {"timeout_ms", p.generator.remote.timeout_ms}};
  auto path_or_null = [](const std::optional<std::filesystem::path>& v) {
    return v ? json(v->string()) : json(nullptr);
  };
  return {{"k", p.k},
          {"embedder", embedder},
          {"chunking", {{"size", p.chunking.size},
                        {"overlap", p.chunking.overlap}}},
          {"generator", generator},
          {"template_id", p.template_id},
          {"service", {{"host", cfg.service.host},
                       {"port", cfg.service.port},
                       {"token_env", cfg.service.admin_token_env},
                       {"cors_origins", cfg.service.cors_origins}}},
          {"corpus", path_or_null(cfg.corpus)},
          {"index", path_or_null(cfg.index)},
          {"poisons", path_or_null(cfg.poisons)}};
}

void apply_env_overrides(AppConfig& cfg) {
  if (const char* v = env("RAGBREAKER_PORT")) {
    cfg.service.port = static_cast<int>(parse_int(v, "RAGBREAKER_PORT"));
  }
  if (const char* v = env("RAGBREAKER_K")) {
    const auto k = parse_int(v, "RAGBREAKER_K");
    if (k < 1) throw Error(ErrorCode::InvalidConfig, "RAGBREAKER_K must be >= 1");
    cfg.pipeline.k = static_cast<std::size_t>(k);
  }
  if (const char* v = env("RAGBREAKER_CORPUS")) cfg.corpus = v;
  if (const char* v = env("RAGBREAKER_INDEX")) cfg.index = v;
  if (const char* v = env("RAGBREAKER_POISONS")) cfg.poisons = v;
  if (const char* v = env("RAGBREAKER_ADMIN_TOKEN_ENV")) {
    cfg.service.admin_token_env = v;
  }
  if (const char* v = env("RAGBREAKER_GENERATOR_URL")) {
    cfg.pipeline.generator.kind = GeneratorConfig::Kind::Remote;
    cfg.pipeline.generator.remote.url = v;
  }
  validate(cfg);
}

AppConfig load_config(const std::optional<std::filesystem::path>& path) {
  AppConfig cfg;
  if (path) {
    std::ifstream in(*path);
    if (!in) {
      throw Error(ErrorCode::MissingPath,
                  "config file not found: " + path->string());
    }
    json doc;
    try {
      doc = json::parse(in);
    } catch (const json::parse_error&) {
      throw Error(ErrorCode::InvalidConfig,
                  "config file is not valid JSON: " + path->string());
    }
    cfg = config_from_json(doc);
  }
  apply_env_overrides(cfg);
  return cfg;
}

void validate(const AppConfig& cfg) {
  const auto& p = cfg.pipeline;
  if (p.k < 1) throw Error(ErrorCode::InvalidConfig, "k must be >= 1");
  if (p.chunking.size == 0 || p.chunking.overlap >= p.chunking.size) {
    throw Error(ErrorCode::InvalidChunkParams,
                "chunking.overlap must be smaller than chunking.size");
  }
  if (p.embedder.kind == EmbedderKind::HashedNGram && p.embedder.dim < 8) {
    throw Error(ErrorCode::InvalidConfig, "embedder.dim must be >= 8");
  }
  if (p.embedder.kind == EmbedderKind::WordVectorTable &&
      !p.embedder.vector_file) {
    throw Error(ErrorCode::VectorFileMissing,
                "word_vector_table embedder requires embedder.vector_file");
  }
  if (p.generator.kind == GeneratorConfig::Kind::Remote &&
      p.generator.remote.url.empty()) {
    throw Error(ErrorCode::InvalidConfig, "remote generator requires a url");
  }
  if (p.generator.max_sentences < 1) {
    throw Error(ErrorCode::InvalidConfig, "generator.max_sentences must be >= 1");
  }
  if (cfg.service.port < 1 || cfg.service.port > 65535) {
    throw Error(ErrorCode::InvalidConfig,
                "service.port must be in [1, 65535]");
  }
}

}  // namespace ragbreaker
