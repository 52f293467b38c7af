#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "ragbreaker/config.hpp"
#include "ragbreaker/session.hpp"

namespace ragbreaker {

/// HTTP/JSON facade over a RedTeamSession.
///
///   POST   /chat                      public
///   GET    /corpus, /corpus/{id}      public
///   POST   /redteam/poison            bearer token
///   GET    /redteam/poison
///   DELETE /redteam/poison/{spec_id}
///   POST   /redteam/trials/run
///   GET    /redteam/report?format=csv|json|text
///
/// Chat responses carry the full retrieval trace for every caller.
class Service {
 public:
  /// `admin_token` must be non-empty. When `persist_index` is set the index
  /// and manifest are written back after every inject/retract.
  Service(std::shared_ptr<RedTeamSession> session, ServiceConfig config,
          std::string admin_token,
          std::optional<std::filesystem::path> persist_index = {});
  ~Service();

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds and starts serving on a background thread. Port 0 picks a free
  /// port. Returns the bound port; throws PortInUse if binding fails.
  int start(int port);
  int start() ;
  /// Stops accepting connections and waits for in-flight requests.
  void stop();
  /// Blocks until the server stops.
  void wait();
  int port() const;

  RedTeamSession& session();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Reads the admin token from the environment variable named in `config`.
/// Throws InvalidConfig if it is unset or empty.
std::string resolve_admin_token(const ServiceConfig& config);

/// Ingests the configured corpus (or opens the configured index), then
/// starts a Service on `config.service.port`.
std::unique_ptr<Service> serve(const AppConfig& config);

}  // namespace ragbreaker
