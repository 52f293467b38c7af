#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "ragbreaker/pipeline.hpp"

namespace ragbreaker {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string admin_token_env = "RAGBREAKER_ADMIN_TOKEN";
  std::vector<std::string> cors_origins;
};

/// Everything a config file can set. Paths are resolved relative to the
/// current working directory.
struct AppConfig {
  PipelineConfig pipeline;
  ServiceConfig service;
  std::optional<std::filesystem::path> corpus;
  std::optional<std::filesystem::path> index;
  std::optional<std::filesystem::path> poisons;
};

// Environment overrides, applied after the config file:
//   RAGBREAKER_PORT            service.port
//   RAGBREAKER_K               k
//   RAGBREAKER_CORPUS          corpus
//   RAGBREAKER_INDEX           index
//   RAGBREAKER_POISONS         poisons
//   RAGBREAKER_ADMIN_TOKEN_ENV service.token_env
//   RAGBREAKER_GENERATOR_URL   generator.url (switches to the remote generator)

AppConfig config_from_json(const nlohmann::json& doc);
nlohmann::json config_to_json(const AppConfig& config);
void apply_env_overrides(AppConfig& config);

/// Reads `path` (if given) and applies environment overrides.
AppConfig load_config(const std::optional<std::filesystem::path>& path);

void validate(const AppConfig& config);

}  // namespace ragbreaker
