#include <random>
#include <thread>

#include "helpers.hpp"
#include "httplib.h"
#include "json.hpp"
#include "ragbreaker/json_io.hpp"
#include "ragbreaker/service.hpp"

using namespace ragbreaker;
using nlohmann::json;

namespace {

const std::string kToken = "test-token-1234";

struct Running {
  std::shared_ptr<RedTeamSession> session;
  std::unique_ptr<Service> service;
  std::unique_ptr<httplib::Client> client;

  explicit Running(std::optional<std::filesystem::path> persist = {}) {
    session = std::make_shared<RedTeamSession>(PipelineConfig{},
                                               ingest_dir(testing::kFixtures / "corpus"));
    ServiceConfig cfg;
    cfg.cors_origins = {"http://console.test"};
    service = std::make_unique<Service>(session, cfg, kToken, persist);
    const int port = service->start(0);
    client = std::make_unique<httplib::Client>("127.0.0.1", port);
    client->set_read_timeout(std::chrono::seconds(10));
  }
  ~Running() { service->stop(); }

  httplib::Headers auth(const std::string& token = kToken) const {
    return {{"Authorization", "Bearer " + token}};
  }
};

json graph_spec_json() {
  return json::parse(testing::read_file(testing::kFixtures / "poisons" / "graph-theory-varga.json"));
}

}  // namespace

TEST_SUITE("service") {

TEST_CASE("chat is public and carries the trace") {
  Running s;
  auto res = s.client->Post("/chat", R"({"question":"What are Dr. Varga's research interests?"})",
                            "application/json");
  REQUIRE(res);
  CHECK(res->status == 200);
  const auto body = json::parse(res->body);
  CHECK(body["answer"]["text"].get<std::string>().find("Computational Intelligence") != std::string::npos);
  CHECK(body["answer"]["generator_id"] == "extractive");
  CHECK(body["trace"]["poison_hit"] == false);
  CHECK(body["trace"]["poison_rank"].is_null());
  CHECK(body["trace"]["index_version"] == 1);
  REQUIRE(body["trace"]["results"].size() == 4);
  const auto& first = body["trace"]["results"][0];
  CHECK(first["rank"] == 1);
  CHECK(first["provenance"] == "benign");
  CHECK(first.contains("score"));
  CHECK(first.contains("chunk_id"));

  auto k2 = s.client->Post("/chat", R"({"question":"library hours","k":2})", "application/json");
  REQUIRE(k2);
  CHECK(json::parse(k2->body)["trace"]["results"].size() == 2);
}

TEST_CASE("validation errors use the JSON error shape") {
  Running s;
  auto bad = s.client->Post("/chat", "{", "application/json");
  REQUIRE(bad);
  CHECK(bad->status == 400);
  CHECK(json::parse(bad->body)["error_code"] == "InvalidArgument");

  auto empty = s.client->Post("/chat", R"({"question":"  "})", "application/json");
  CHECK(empty->status == 400);
  CHECK(json::parse(empty->body)["error_code"] == "EmptyQuestion");

  auto k0 = s.client->Post("/chat", R"({"question":"x","k":0})", "application/json");
  CHECK(k0->status == 400);

  auto missing = s.client->Get("/corpus/nope.txt");
  CHECK(missing->status == 404);
  CHECK(json::parse(missing->body)["error_code"] == "NotFound");

  auto route = s.client->Get("/nowhere");
  CHECK(route->status == 404);
  CHECK(json::parse(route->body)["error_code"] == "NotFound");
}

TEST_CASE("corpus listing and lookup") {
  Running s;
  auto list = s.client->Get("/corpus");
  REQUIRE(list);
  const auto docs = json::parse(list->body);
  CHECK(docs.size() == 20);
  CHECK(docs[0].contains("id"));
  CHECK(docs[0].contains("title"));
  CHECK(docs[0]["provenance"] == "benign");
  auto one = s.client->Get("/corpus/faculty/varga.txt");
  REQUIRE(one);
  CHECK(one->status == 200);
  CHECK(json::parse(one->body)["body"].get<std::string>().find("Varga") != std::string::npos);
}

TEST_CASE("red-team routes require the exact token") {
  Running s;
  const std::string spec = graph_spec_json().dump();
  CHECK(s.client->Post("/redteam/poison", spec, "application/json")->status == 401);
  CHECK(s.client->Get("/redteam/poison")->status == 401);
  CHECK(s.client->Delete("/redteam/poison/graph-theory-varga")->status == 401);
  CHECK(s.client->Post("/redteam/trials/run", "{}", "application/json")->status == 401);
  CHECK(s.client->Get("/redteam/report?format=csv")->status == 401);
  auto body = json::parse(s.client->Get("/redteam/poison")->body);
  CHECK(body["error_code"] == "Unauthorized");

  httplib::Headers basic{{"Authorization", "Basic " + kToken}};
  CHECK(s.client->Get("/redteam/poison", basic)->status == 401);

  // Mutated tokens: flipped bytes, truncations, extensions, case changes.
  std::mt19937 rng(42);
  for (int i = 0; i < 200; ++i) {
    std::string t = kToken;
    switch (i % 4) {
      case 0: t[rng() % t.size()] ^= static_cast<char>(1 + rng() % 127); break;
      case 1: t.resize(rng() % t.size()); break;
      case 2: t += static_cast<char>('a' + rng() % 26); break;
      case 3: t[rng() % t.size()] = static_cast<char>(std::toupper(t[rng() % t.size()])); break;
    }
    if (t == kToken) continue;
    auto r = s.client->Post("/redteam/poison", s.auth(t), spec, "application/json");
    REQUIRE(r);
    CHECK_MESSAGE(r->status == 401, t);
  }
  CHECK(s.session->manifest().entries().empty());
  CHECK(s.client->Get("/redteam/poison", s.auth())->status == 200);
}

TEST_CASE("inject, attack, list, retract over HTTP") {
  Running s;
  auto created = s.client->Post("/redteam/poison", s.auth(), graph_spec_json().dump(), "application/json");
  REQUIRE(created);
  CHECK(created->status == 201);
  CHECK(json::parse(created->body)["active"] == true);

  auto dup = s.client->Post("/redteam/poison", s.auth(), graph_spec_json().dump(), "application/json");
  CHECK(dup->status == 409);
  CHECK(json::parse(dup->body)["error_code"] == "DuplicateSpecId");

  auto attacked = s.client->Post(
      "/chat", R"({"question":"Graph Theory. What are Dr. Varga's research interests?"})",
      "application/json");
  const auto body = json::parse(attacked->body);
  CHECK(body["trace"]["poison_hit"] == true);
  CHECK(body["trace"]["poison_rank"] == 1);
  CHECK(body["trace"]["results"][0]["provenance"] == "poisoned");
  CHECK(body["answer"]["text"].get<std::string>().find("Hadwiger") != std::string::npos);

  auto manifest = json::parse(s.client->Get("/redteam/poison", s.auth())->body);
  CHECK(manifest["entries"].size() == 1);

  auto gone = s.client->Delete("/redteam/poison/graph-theory-varga", s.auth());
  CHECK(gone->status == 200);
  CHECK(json::parse(gone->body)["retracted"]["active"] == false);
  CHECK(s.client->Delete("/redteam/poison/graph-theory-varga", s.auth())->status == 409);
  CHECK(s.client->Delete("/redteam/poison/unknown", s.auth())->status == 404);

  auto invalid = s.client->Post("/redteam/poison", s.auth(), R"({"spec_id":"x","trigger":"","payload":"p"})",
                                "application/json");
  CHECK(invalid->status == 400);
}

TEST_CASE("trials and reports over HTTP") {
  Running s;
  for (const auto& spec : load_poison_specs(testing::kFixtures / "poisons")) {
    CHECK(s.client->Post("/redteam/poison", s.auth(), json(spec).dump(), "application/json")->status == 201);
  }
  auto empty_report = s.client->Get("/redteam/report?format=csv", s.auth());
  CHECK(empty_report->body.rfind("question,", 0) == 0);

  const json req = {{"cases_path", (testing::kFixtures / "cases.jsonl").string()}};
  auto run = s.client->Post("/redteam/trials/run", s.auth(), req.dump(), "application/json");
  REQUIRE(run);
  REQUIRE(run->status == 200);
  CHECK(json::parse(run->body).size() == 10);

  auto csv = s.client->Get("/redteam/report?format=csv", s.auth());
  CHECK(csv->get_header_value("Content-Type") == "text/csv");
  CHECK(std::count(csv->body.begin(), csv->body.end(), '\n') == 11);
  auto text = s.client->Get("/redteam/report?format=text", s.auth());
  CHECK(text->status == 200);
  CHECK(s.client->Get("/redteam/report?format=xml", s.auth())->status == 400);

  const json inline_req = {{"cases", json::array({{{"case_id", "x"}, {"question", "q"}, {"trigger", "t"},
                                                   {"ground_truth", "g"}, {"spec_id", "missing"}}})}};
  auto orphan = s.client->Post("/redteam/trials/run", s.auth(), inline_req.dump(), "application/json");
  CHECK(orphan->status == 404);
  CHECK(s.client->Post("/redteam/trials/run", s.auth(), "{}", "application/json")->status == 400);
}

TEST_CASE("CORS for configured origins") {
  Running s;
  httplib::Headers origin{{"Origin", "http://console.test"}};
  auto pre = s.client->Options("/redteam/poison", origin);
  REQUIRE(pre);
  CHECK(pre->status == 204);
  CHECK(pre->get_header_value("Access-Control-Allow-Origin") == "http://console.test");
  auto other = s.client->Get("/corpus", httplib::Headers{{"Origin", "http://evil.test"}});
  CHECK_FALSE(other->has_header("Access-Control-Allow-Origin"));
}

TEST_CASE("mutations persist when an index path is configured") {
  testing::TempDir dir;
  const auto index_file = dir / "kb.json";
  {
    Running s(index_file);
    CHECK(s.client->Post("/redteam/poison", s.auth(), graph_spec_json().dump(), "application/json")->status == 201);
  }
  auto reopened = RedTeamSession::open(PipelineConfig{}, ingest_dir(testing::kFixtures / "corpus"), index_file);
  CHECK(reopened->manifest().find_active("graph-theory-varga") != nullptr);
}

TEST_CASE("startup errors") {
  auto session = std::make_shared<RedTeamSession>(PipelineConfig{}, std::vector<Document>{});
  CHECK_THROWS_CODE(Service(session, ServiceConfig{}, ""), ErrorCode::InvalidConfig);

  Service first(session, ServiceConfig{}, kToken);
  const int port = first.start(0);
  Service second(session, ServiceConfig{}, kToken);
  CHECK_THROWS_CODE(second.start(port), ErrorCode::PortInUse);
  first.stop();

  ServiceConfig cfg;
  cfg.admin_token_env = "RAGBREAKER_TEST_UNSET_TOKEN";
  ::unsetenv("RAGBREAKER_TEST_UNSET_TOKEN");
  CHECK_THROWS_CODE(resolve_admin_token(cfg), ErrorCode::InvalidConfig);
}

}  // TEST_SUITE
