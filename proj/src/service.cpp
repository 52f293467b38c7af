#include "ragbreaker/service.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>

#include "httplib.h"
#include "ragbreaker/error.hpp"
#include "ragbreaker/json_io.hpp"

namespace ragbreaker {

namespace {

bool same_token(const std::string& given, const std::string& expected) {
  // Compare every byte regardless of where the first mismatch is.
  unsigned char diff = given.size() == expected.size() ? 0 : 1;
  for (std::size_t i = 0; i < given.size(); ++i) {
    diff |= static_cast<unsigned char>(given[i]) ^
            static_cast<unsigned char>(expected[i % expected.size()]);
  }
  return diff == 0;
}

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, ErrorCode code,
                const std::string& message) {
  send_json(res, http_status(code),
            {{"error_code", error_code_name(code)}, {"message", message}});
}

json parse_body(const httplib::Request& req) {
  try {
    return json::parse(req.body);
  } catch (const json::parse_error&) {
    throw Error(ErrorCode::InvalidArgument, "request body is not valid JSON");
  }
}

json chat_response(const QueryOutcome& out) {
  return {{"answer",
           {{"text", out.answer.text},
            {"generator_id", out.answer.generator_id},
            {"context_chunk_ids", out.answer.context_chunk_ids}}},
          {"trace", out.trace}};
}

}  // namespace

struct Service::Impl {
  std::shared_ptr<RedTeamSession> session;
  ServiceConfig config;
  std::string token;
  std::optional<std::filesystem::path> persist_index;

  httplib::Server server;
  std::thread worker;
  int port = 0;

  std::mutex report_mutex;
  std::vector<TrialResult> last_results;

  using Handler = std::function<void(const httplib::Request&,
                                     httplib::Response&)>;

  // Wraps a handler with error mapping and, for red-team routes, bearer
  // authentication.
  httplib::Server::Handler guarded(Handler fn, bool admin) {
    return [this, fn = std::move(fn), admin](const httplib::Request& req,
                                             httplib::Response& res) {
      try {
        if (admin && !authorized(req)) {
          throw Error(ErrorCode::Unauthorized,
                      "red-team routes require a valid bearer token");
        }
        fn(req, res);
      } catch (const Error& e) {
        send_error(res, e.code(), e.what());
      } catch (const json::exception& e) {
        send_error(res, ErrorCode::InvalidArgument, e.what());
      } catch (const std::exception& e) {
        send_error(res, ErrorCode::Internal, e.what());
      }
    };
  }

  bool authorized(const httplib::Request& req) const {
    const auto header = req.get_header_value("Authorization");
    constexpr std::string_view kPrefix = "Bearer ";
    if (header.rfind(kPrefix, 0) != 0) return false;
    return same_token(header.substr(kPrefix.size()), token);
  }

  void persist() {
    if (persist_index) session->save(*persist_index);
  }

  void install_routes() {
    server.set_post_routing_handler(
        [this](const httplib::Request& req, httplib::Response& res) {
          const auto origin = req.get_header_value("Origin");
          if (origin.empty()) return;
          const auto& allowed = config.cors_origins;
          if (std::find(allowed.begin(), allowed.end(), origin) !=
                  allowed.end() ||
              std::find(allowed.begin(), allowed.end(), "*") != allowed.end()) {
            res.set_header("Access-Control-Allow-Origin", origin);
            res.set_header("Access-Control-Allow-Headers",
                           "Authorization, Content-Type");
            res.set_header("Access-Control-Allow-Methods",
                           "GET, POST, DELETE, OPTIONS");
          }
        });
    // Unmatched routes still answer in the JSON error shape.
    server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
      if (res.status == 404 && res.body.empty()) {
        send_error(res, ErrorCode::NotFound, "no route for " + req.method + " " + req.path);
      }
    });
    server.Options(R"(.*)", [](const httplib::Request&,
                               httplib::Response& res) { res.status = 204; });

    server.Post("/chat", guarded(
                             [this](const httplib::Request& req, httplib::Response& res) {
                               const auto body = parse_body(req);
                               if (!body.contains("question") ||
                                   !body["question"].is_string()) {
                                 throw Error(ErrorCode::EmptyQuestion,
                                             "body needs a 'question' string");
                               }
                               std::optional<std::size_t> k;
                               if (body.contains("k") && !body["k"].is_null()) {
                                 const auto v = body["k"].get<long long>();
                                 if (v < 1) {
                                   throw Error(ErrorCode::InvalidArgument,
                                               "k must be >= 1");
                                 }
                                 k = static_cast<std::size_t>(v);
                               }
                               send_json(res, 200,
                                         chat_response(session->chat(
                                             body["question"], k)));
                             },
                             false));

    server.Get("/corpus", guarded(
                              [this](const httplib::Request&, httplib::Response& res) {
                                const auto kb = session->snapshot();
                                json docs = json::array();
                                for (const auto* d : kb->store.documents()) {
                                  docs.push_back(document_summary(*d));
                                }
                                send_json(res, 200, docs);
                              },
                              false));

    server.Get(R"(/corpus/(.+))",
               guarded(
                   [this](const httplib::Request& req, httplib::Response& res) {
                     const std::string id = req.matches[1];
                     const auto kb = session->snapshot();
                     const Document* d = kb->store.find_document(id);
                     if (d == nullptr) {
                       throw Error(ErrorCode::NotFound,
                                   "no document with id " + id);
                     }
                     send_json(res, 200, *d);
                   },
                   false));

    server.Post("/redteam/poison",
                guarded(
                    [this](const httplib::Request& req, httplib::Response& res) {
                      const auto spec = poison_spec_from_json(parse_body(req));
                      const auto entry = session->inject(spec);
                      persist();
                      send_json(res, 201, entry);
                    },
                    true));

    server.Get("/redteam/poison", guarded(
                                      [this](const httplib::Request&, httplib::Response& res) {
                                        send_json(res, 200,
                                                  session->manifest());
                                      },
                                      true));

    server.Delete(R"(/redteam/poison/(.+))",
                  guarded(
                      [this](const httplib::Request& req, httplib::Response& res) {
                        const auto entry = session->retract(req.matches[1]);
                        persist();
                        send_json(res, 200,
                                  {{"retracted", entry},
                                   {"index_version",
                                    session->snapshot()->index.version()}});
                      },
                      true));

    server.Post("/redteam/trials/run",
                guarded(
                    [this](const httplib::Request& req, httplib::Response& res) {
                      const auto body = parse_body(req);
                      std::vector<TrialCase> cases;
                      if (body.contains("cases")) {
                        for (const auto& c : body.at("cases")) {
                          cases.push_back(trial_case_from_json(c));
                        }
                      } else if (body.contains("cases_path")) {
                        cases = load_trial_cases(
                            body.at("cases_path").get<std::string>());
                      } else {
                        throw Error(ErrorCode::InvalidArgument,
                                    "body needs 'cases' or 'cases_path'");
                      }
                      auto results = session->run_trials(std::move(cases));
                      json out = results;
                      {
                        std::lock_guard lock(report_mutex);
                        last_results = std::move(results);
                      }
                      send_json(res, 200, out);
                    },
                    true));

    server.Get("/redteam/report",
               guarded(
                   [this](const httplib::Request& req, httplib::Response& res) {
                     const auto format = parse_report_format(
                         req.has_param("format") ? req.get_param_value("format")
                                                 : "json");
                     std::string body;
                     {
                       std::lock_guard lock(report_mutex);
                       body = render_report(last_results, format);
                     }
                     const char* type =
                         format == ReportFormat::Json ? "application/json"
                         : format == ReportFormat::Csv ? "text/csv"
                                                       : "text/plain";
                     res.status = 200;
                     res.set_content(body, type);
                   },
                   true));
  }
};

Service::Service(std::shared_ptr<RedTeamSession> session, ServiceConfig config,
                 std::string admin_token,
                 std::optional<std::filesystem::path> persist_index)
    : impl_(std::make_unique<Impl>()) {
  if (admin_token.empty()) {
    throw Error(ErrorCode::InvalidConfig, "admin token must be non-empty");
  }
  impl_->session = std::move(session);
  impl_->config = std::move(config);
  impl_->token = std::move(admin_token);
  impl_->persist_index = std::move(persist_index);
  impl_->install_routes();
}

Service::~Service() { stop(); }

int Service::start(int port) {
  auto& s = impl_->server;
  const auto& host = impl_->config.host;
  // httplib's defaults add SO_REUSEPORT, which lets a second server share the
  // port silently instead of failing.
  s.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
  });
  const int bound = port == 0 ? s.bind_to_any_port(host)
                              : (s.bind_to_port(host, port) ? port : -1);
  if (bound <= 0) {
    throw Error(ErrorCode::PortInUse,
                "cannot bind " + host + ":" + std::to_string(port));
  }
  impl_->port = bound;
  impl_->worker = std::thread([this] { impl_->server.listen_after_bind(); });
  // stop() is a no-op until the accept loop is running.
  s.wait_until_ready();
  return bound;
}

int Service::start() { return start(impl_->config.port); }

void Service::stop() {
  if (!impl_) return;
  impl_->server.stop();
  wait();
}

void Service::wait() {
  if (impl_->worker.joinable()) impl_->worker.join();
}

int Service::port() const { return impl_->port; }

RedTeamSession& Service::session() { return *impl_->session; }

std::string resolve_admin_token(const ServiceConfig& config) {
  const char* v = std::getenv(config.admin_token_env.c_str());
  if (v == nullptr || *v == '\0') {
    throw Error(ErrorCode::InvalidConfig,
                "admin token environment variable " + config.admin_token_env +
                    " is unset; red-team routes need a token");
  }
  return v;
}

std::unique_ptr<Service> serve(const AppConfig& config) {
  if (!config.corpus) {
    throw Error(ErrorCode::InvalidConfig, "no corpus directory configured");
  }
  auto token = resolve_admin_token(config.service);
  const auto docs = ingest_dir(*config.corpus);
  std::shared_ptr<RedTeamSession> session;
  if (config.index && std::filesystem::exists(*config.index)) {
    session = RedTeamSession::open(config.pipeline, docs, *config.index);
  } else {
    session = std::make_shared<RedTeamSession>(config.pipeline, docs);
  }
  auto service = std::make_unique<Service>(std::move(session), config.service,
                                           std::move(token), config.index);
  service->start();
  return service;
}

}  // namespace ragbreaker
