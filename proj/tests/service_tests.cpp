#include <doctest.h>

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <httplib.h>
#include <sys/wait.h>

#include <fstream>

#include "meco/core/error.hpp"
#include "meco/repository/event_log.hpp"
#include "meco/service/admin.hpp"
#include "meco/service/api.hpp"
#include "meco/service/config.hpp"
#include "meco/service/server.hpp"
#include "support.hpp"

using namespace meco;
using namespace meco::service;
using nlohmann::json;
using meco::test::error_of;

namespace {

struct ApiHarness {
  meco::test::RepoFixture f;
  meco::test::CannedSource source;
  std::unique_ptr<session::SessionEngine> sessions;
  std::unique_ptr<Api> api;

  ApiHarness() { build(); }
  void build() {
    sessions = std::make_unique<session::SessionEngine>(*f, source);
    api = std::make_unique<Api>(*f, *sessions);
  }
  void restart() {
    api.reset();
    sessions.reset();
    f.reopen();
    build();
  }

  HttpResponse call(std::string method, std::string target, std::optional<json> body = std::nullopt,
                    std::optional<std::string> user = "u1") {
    HttpRequest r;
    r.method = std::move(method);
    r.target = std::move(target);
    if (body) r.body = body->dump();
    if (user) r.headers["x-user-id"] = *user;
    return api->handle(r);
  }

  std::uint64_t total_events() {
    std::uint64_t n = 0;
    for (const auto& ws : f->workspace_ids()) n += f->workspace(ws).high_water();
    return n;
  }
};

json cassava_body() {
  return {{"statement", "cassava plantation in West Africa"},
          {"objective", "import"},
          {"domains", {"agriculture", "trade"}},
          {"keywords", {"cassava", "export"}},
          {"sources", {{{"name", "Google"}, {"locator", "https://www.google.com"}}}},
          {"indicators", {{{"attribute", "crop"}, {"value", "cassava"}}, {{"attribute", "trade"}, {"value", "exporters"}}}}};
}

int run_cli(const std::string& args, std::string* out = nullptr) {
  std::string cmd = std::string(MECOCIR_BIN) + " " + args + " 2>&1";
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p);
  std::string text;
  char buf[512];
  while (auto n = fread(buf, 1, sizeof buf, p)) text.append(buf, n);
  int status = pclose(p);
  if (out) *out = text;
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config defaults, file values and environment overrides") {
  auto def = parse_config("", nullptr);
  CHECK(def.listen_address == "127.0.0.1:8080");
  CHECK(def.threshold == 0.2);
  CHECK(def.weights.keywords == 0.4);
  CHECK(def.heartbeat_timeout == std::chrono::seconds(30));
  CHECK(def.fetch.timeout == std::chrono::seconds(15));
  CHECK(def.fetch.max_bytes == 5u * 1024 * 1024);
  CHECK(def.query_capacity == 50);

  auto text =
      "# comment\n"
      "listen_address = 0.0.0.0:9000\n"
      "data_dir = /tmp/meco\n"
      "similarity.threshold = 0.35\n"
      "fetch.timeout = 2500ms\n"
      "fetch.max_bytes = 2M\n"
      "session.heartbeat_timeout = 1m\n"
      "storage.sync = flush\n";
  std::map<std::string, std::string> env = {{"MECO_SIMILARITY_THRESHOLD", "0.5"}, {"MECO_FETCH_MAX_INFLIGHT", "3"}};
  auto lookup = [&](const std::string& name) -> std::optional<std::string> {
    auto it = env.find(name);
    return it == env.end() ? std::nullopt : std::optional(it->second);
  };
  auto c = parse_config(text, lookup);
  CHECK(c.listen_address == "0.0.0.0:9000");
  CHECK(c.data_dir == "/tmp/meco");
  CHECK(c.threshold == 0.5);
  CHECK(c.fetch.timeout == std::chrono::milliseconds(2500));
  CHECK(c.fetch.max_bytes == 2u * 1024 * 1024);
  CHECK(c.fetch.max_inflight == 3);
  CHECK(c.heartbeat_timeout == std::chrono::minutes(1));
  CHECK(c.sync == repository::SyncMode::flush);
  CHECK(env_name("fetch.timeout") == "MECO_FETCH_TIMEOUT");
  for (const auto& key : config_keys()) CHECK(env_name(key).starts_with("MECO_"));

  for (const char* bad : {"nonsense", "unknown.key = 1", "similarity.threshold = 2", "fetch.timeout = soon",
                          "similarity.weight.keywords = 0.9", "storage.sync = sometimes", "listen_address = nohost"}) {
    CAPTURE(bad);
    CHECK(error_of([&] { parse_config(bad, nullptr); }) == ErrorCode::invalid_argument);
  }
  CHECK(split_listen_address("[::1]:80") == std::pair<std::string, unsigned short>{"::1", 80});
}

TEST_CASE("url decoding and targets") {
  CHECK(url_decode("cassava+exporters%21", true) == std::optional<std::string>("cassava exporters!"));
  CHECK(url_decode("a+b", false) == std::optional<std::string>("a+b"));
  CHECK_FALSE(url_decode("%4", true));
  CHECK_FALSE(url_decode("%zz", true));
  auto t = parse_target("/search?q=cassava%20exporters&limit=3");
  REQUIRE(t);
  CHECK(t->segments == std::vector<std::string>{"search"});
  CHECK(t->query.at("q") == "cassava exporters");
  CHECK(t->query.at("limit") == "3");
}

TEST_CASE("problem lifecycle over the API") {
  ApiHarness h;
  auto ws = h.call("POST", "/workspaces", json{{"id", "w1"}}, std::nullopt);
  CHECK(ws.status == 201);
  CHECK(h.call("POST", "/workspaces", json{{"id", "w1"}}).status == 409);

  auto created = h.call("POST", "/workspaces/w1/problems", cassava_body());
  REQUIRE(created.status == 201);
  auto pid = created.body["id"].get<std::string>();
  CHECK(created.body["statement"] == "cassava plantation in West Africa");
  CHECK(created.body["objective"] == "import");
  CHECK(created.body["indicators"].size() == 2);
  CHECK(created.body["sources"][0]["name"] == "Google");

  auto sub = h.call("POST", "/problems/" + pid + "/subproblems", json{{"statement", "Nigeria exporters"}}, "u2");
  CHECK(sub.status == 201);
  auto got = h.call("GET", "/problems/" + pid);
  CHECK(got.status == 200);
  CHECK(got.body["sub_problems"].size() == 1);
  CHECK(got.body["annotations"].size() == 1);

  auto note = h.call("POST", "/annotations",
                     json{{"target", {{"type", "problem"}, {"id", pid}}}, {"body", "which countries?"}});
  CHECK(note.status == 201);
  CHECK(note.body["kind"] == "clarification");

  auto revised = h.call("PATCH", "/problems/" + pid, json{{"keywords", {"cassava", "Nigeria"}}});
  CHECK(revised.status == 200);
  CHECK(revised.body["keywords"] == json({"cassava", "Nigeria"}));

  auto view = h.call("GET", "/workspaces/w1");
  CHECK(view.status == 200);
  CHECK(view.body["problems"].size() == 2);
  CHECK(view.body["participants"] == json({"u1", "u2"}));
  CHECK(view.body["process_tally"]["externalization"] == 4);

  auto hits = h.call("GET", "/search?q=cassava");
  CHECK(hits.status == 200);
  REQUIRE(hits.body["results"].size() == 1);
  CHECK(hits.body["results"][0]["problem"]["id"] == pid);
}

TEST_CASE("API error mapping") {
  ApiHarness h;
  h.call("POST", "/workspaces", json{{"id", "w1"}});
  auto pid = h.call("POST", "/workspaces/w1/problems", cassava_body()).body["id"].get<std::string>();
  auto before = h.total_events();

  auto empty = h.call("POST", "/workspaces/w1/problems", json{{"statement", "   "}});
  CHECK(empty.status == 400);
  CHECK(empty.body["error"]["code"] == "empty_statement");
  CHECK(h.call("POST", "/workspaces/w1/problems", cassava_body(), std::nullopt).status == 401);
  CHECK(h.call("POST", "/workspaces/nope/problems", cassava_body()).status == 404);
  CHECK(h.call("GET", "/problems/nope/collaborators").status == 404);
  CHECK(h.call("GET", "/problems/nope/collaborators").body["error"]["code"] == "unknown_problem");
  CHECK(h.call("POST", "/problems/nope/subproblems", json{{"statement", "x"}}).body["error"]["code"] ==
        "unknown_parent");
  CHECK(h.call("POST", "/annotations", json{{"target", {{"type", "problem"}, {"id", pid}}}, {"body", ""}}).status ==
        400);
  CHECK(h.call("POST", "/annotations",
               json{{"target", {{"type", "problem"}, {"id", pid}}}, {"body", "x"}, {"kind", "opinion"}})
            .body["error"]["code"] == "unknown_kind");
  CHECK(h.call("POST", "/annotations", json{{"target", {{"type", "problem"}, {"id", "zzz"}}}, {"body", "x"}})
            .status == 404);
  HttpRequest raw{"POST", "/workspaces/w1/problems", {{"X-User-Id", "u1"}}, "{not json"};
  CHECK(h.api->handle(raw).status == 400);
  CHECK(h.call("GET", "/nowhere").status == 404);
  CHECK(h.call("DELETE", "/search").status == 405);
  CHECK(h.call("GET", "/ws/w1").status == 426);
  CHECK(h.call("GET", "/search?q=x&limit=0").status == 400);
  CHECK(h.call("GET", "/search?q=x&limit=abc").status == 400);
  CHECK(h.call("GET", "/documents/nope").status == 404);
  CHECK(h.total_events() == before);

  auto nothing = h.call("GET", "/search?q=");
  CHECK(nothing.status == 200);
  CHECK(nothing.body["results"] == json::array());
  CHECK(h.call("GET", "/healthz").body["status"] == "ok");
}

TEST_CASE("each mutating endpoint appends exactly one event") {
  ApiHarness h;
  h.call("POST", "/workspaces", json{{"id", "w1"}});
  CHECK(h.total_events() == 0);
  auto pid = h.call("POST", "/workspaces/w1/problems", cassava_body()).body["id"].get<std::string>();
  h.source.page("http://a.org/", "A", "Nigeria exporters of cassava");
  h.sessions->join(WorkspaceId("w1"), UserId("u1"), std::make_shared<meco::test::Recorder>());
  auto doc = h.sessions->open_document(WorkspaceId("w1"), UserId("u1"), "http://a.org/", "").document.id.str();

  struct Step {
    std::string method, target;
    json body;
    int status;
  };
  std::vector<Step> steps = {
      {"POST", "/workspaces/w1/problems", cassava_body(), 201},
      {"PATCH", "/problems/" + pid, json{{"objective", "export"}}, 200},
      {"POST", "/problems/" + pid + "/subproblems", json{{"statement", "s"}}, 201},
      {"POST", "/annotations", json{{"target", {{"type", "document"}, {"id", doc}}}, {"body", "useful"}, {"kind", "evaluation"}}, 201},
      {"POST", "/documents/" + doc + "/tags", json{{"tag", "export"}}, 201},
      {"POST", "/documents/" + doc + "/metadata", json{{"name", "year"}, {"value", "2009"}}, 201},
      {"POST", "/documents/" + doc + "/classifications", json{{"category", "statistics"}}, 201},
      {"GET", "/workspaces/w1/history", json(), 200},
  };
  for (const auto& s : steps) {
    CAPTURE(s.target);
    auto before = h.total_events();
    auto r = h.call(s.method, s.target, s.body.is_null() ? std::nullopt : std::optional(s.body));
    CHECK(r.status == s.status);
    CHECK(h.total_events() == before + 1);
  }
  auto hist = h.call("GET", "/workspaces/w1/history");
  CHECK(hist.body["entries"].size() == 1);
  CHECK(hist.body["logged"]["kind"] == "history_viewed");
  CHECK_FALSE(hist.body["entries"][0]["payload"]["document"].contains("fetched_text"));

  auto d = h.call("GET", "/documents/" + doc);
  CHECK(d.body["tags"] == json({"export"}));
  CHECK(d.body["metadata"]["year"] == "2009");
  CHECK(d.body["classifications"] == json({"statistics"}));
  CHECK(d.body["annotations"].size() == 1);
  auto reports = h.call("GET", "/problems/" + pid + "/reports");
  REQUIRE(reports.body["reports"].size() == 1);
  CHECK(reports.body["reports"][0]["coverage"] == 1.0);
}

TEST_CASE("collaborators endpoint") {
  ApiHarness h;
  h.call("POST", "/workspaces", json{{"id", "w1"}});
  h.call("POST", "/workspaces", json{{"id", "w2"}});
  h.call("POST", "/workspaces/w1/problems", cassava_body(), "alice");
  auto second = cassava_body();
  second["statement"] = "cassava exporters";
  auto pid = h.call("POST", "/workspaces/w2/problems", second, "bob").body["id"].get<std::string>();
  auto r = h.call("GET", "/problems/" + pid + "/collaborators?k=3");
  CHECK(r.status == 200);
  REQUIRE(r.body["collaborators"].size() == 1);
  CHECK(r.body["collaborators"][0]["user"] == "alice");
  CHECK(r.body["collaborators"][0]["online"] == false);
  CHECK(r.body["collaborators"][0]["affinity"].get<double>() > 0.2);
  CHECK(h.call("GET", "/problems/" + pid + "/collaborators?k=-1").status == 400);
}

TEST_CASE("GET responses are identical after a restart") {
  ApiHarness h;
  h.call("POST", "/workspaces", json{{"id", "w1"}});
  auto pid = h.call("POST", "/workspaces/w1/problems", cassava_body()).body["id"].get<std::string>();
  h.call("POST", "/problems/" + pid + "/subproblems", json{{"statement", "who exports"}}, "u2");
  h.source.page("http://a.org/", "A", "cassava exporters");
  h.sessions->join(WorkspaceId("w1"), UserId("u1"), std::make_shared<meco::test::Recorder>());
  h.sessions->submit_query(WorkspaceId("w1"), UserId("u1"), "cassava", "Google");
  auto doc = h.sessions->open_document(WorkspaceId("w1"), UserId("u1"), "http://a.org/", "").document.id.str();
  h.sessions->leave(WorkspaceId("w1"), UserId("u1"));

  std::vector<std::string> targets = {"/workspaces/w1", "/problems/" + pid, "/problems/" + pid + "/reports",
                                      "/search?q=cassava", "/problems/" + pid + "/collaborators",
                                      "/documents/" + doc, "/healthz"};
  std::vector<json> before;
  for (const auto& t : targets) before.push_back(h.call("GET", t).body);
  h.restart();
  for (std::size_t i = 0; i < targets.size(); ++i) {
    CAPTURE(targets[i]);
    CHECK(h.call("GET", targets[i]).body == before[i]);
  }
}

TEST_CASE("server speaks HTTP and the real-time protocol") {
  meco::test::TempDir dir;
  ServiceConfig config;
  config.listen_address = "127.0.0.1:0";
  config.data_dir = dir.path();
  config.sync = repository::SyncMode::flush;
  config.io_threads = 1;
  config.worker_threads = 2;
  auto source = std::make_unique<meco::test::CannedSource>();
  source->page("http://a.org/", "A", "cassava exporters");
  Server server(config, std::move(source));
  auto port = server.start();
  REQUIRE(port != 0);

  httplib::Client http("127.0.0.1", port);
  auto health = http.Get("/healthz");
  REQUIRE(health);
  CHECK(health->status == 200);
  CHECK(json::parse(health->body)["status"] == "ok");
  auto created = http.Post("/workspaces", R"({"id":"w1"})", "application/json");
  REQUIRE(created);
  CHECK(created->status == 201);
  auto problem = http.Post("/workspaces/w1/problems", httplib::Headers{{"X-User-Id", "u1"}},
                           cassava_body().dump(), "application/json");
  REQUIRE(problem);
  CHECK(problem->status == 201);
  auto missing = http.Get("/problems/nope");
  REQUIRE(missing);
  CHECK(missing->status == 404);
  CHECK(json::parse(missing->body)["error"]["code"] == "unknown_problem");

  namespace beast = boost::beast;
  namespace net = boost::asio;
  net::io_context ioc;
  auto connect = [&](const std::string& user) {
    auto ws = std::make_unique<beast::websocket::stream<net::ip::tcp::socket>>(ioc);
    net::ip::tcp::resolver resolver(ioc);
    net::connect(ws->next_layer(), resolver.resolve("127.0.0.1", std::to_string(port)));
    ws->handshake("127.0.0.1", "/ws/w1?user=" + user);
    return ws;
  };
  auto send = [](auto& ws, const session::ClientMessage& m) { ws->write(net::buffer(session::encode(m))); };
  auto receive = [](auto& ws) {
    beast::flat_buffer buf;
    ws->read(buf);
    return session::decode_server(beast::buffers_to_string(buf.data()));
  };

  auto a = connect("u1");
  send(a, {session::JoinRequest{}, std::nullopt});
  auto st = receive(a);
  REQUIRE(std::holds_alternative<session::StateMessage>(st));
  CHECK(std::get<session::StateMessage>(st).seq == 1);

  auto b = connect("u2");
  send(b, {session::JoinRequest{}, std::nullopt});
  CHECK(std::holds_alternative<session::StateMessage>(receive(b)));
  auto joined = receive(a);
  REQUIRE(std::holds_alternative<session::UpdateMessage>(joined));
  CHECK(std::get<session::UpdateMessage>(joined).update.actor == UserId("u2"));

  send(b, {session::QueryRequest{"cassava exporters", "Google"}, std::nullopt});
  for (auto* ws : {&a, &b}) {
    auto m = receive(*ws);
    REQUIRE(std::holds_alternative<session::UpdateMessage>(m));
    auto& u = std::get<session::UpdateMessage>(m).update;
    CHECK(u.seq == 2);
    CHECK(u.kind == session::UpdateKind(knowledge::ActivityKind::query_submitted));
  }

  send(a, {session::OpenRequest{"http://a.org/", "", std::nullopt}, std::nullopt});
  auto opened = receive(b);
  REQUIRE(std::holds_alternative<session::UpdateMessage>(opened));
  CHECK(std::get<session::UpdateMessage>(opened).update.payload["report"]["counts"].size() == 2);

  a->write(net::buffer(std::string("{\"type\":\"bogus\"}\n")));
  // b's copy of the open arrived; a sees its own open first.
  auto own = receive(a);
  CHECK(std::holds_alternative<session::UpdateMessage>(own));
  auto err = receive(a);
  REQUIRE(std::holds_alternative<session::ErrorMessage>(err));
  CHECK(std::get<session::ErrorMessage>(err).code == "protocol_error");

  send(b, {session::LeaveRequest{}, std::nullopt});
  auto left = receive(a);
  REQUIRE(std::holds_alternative<session::UpdateMessage>(left));
  CHECK(std::get<session::UpdateMessage>(left).update.kind == session::UpdateKind(session::PresenceChange::left));

  a->close(beast::websocket::close_code::normal);
  server.stop();
  CHECK(verify_data_dir(dir.path()).ok());
}

TEST_CASE("operator CLI exit codes") {
  meco::test::TempDir dir;
  {
    meco::test::RepoFixture f;
    f.options.data_dir = dir.path();
    f.reopen();
    f->create_workspace(WorkspaceId("w1"));
    for (int i = 0; i < 5; ++i) f->append_event(WorkspaceId("w1"), UserId("u1"), knowledge::ChatMessage{"hi"});
  }
  std::string out;
  CHECK(run_cli("verify " + dir.path().string(), &out) == 0);
  CHECK(out.find("ok: 1 workspaces, 5 events") != std::string::npos);
  CHECK(run_cli("inspect " + dir.path().string() + " w1", &out) == 0);
  CHECK(out.find("events 5") != std::string::npos);
  CHECK(out.find("process socialization 5") != std::string::npos);
  CHECK(run_cli("inspect " + dir.path().string() + " nope") == 1);
  CHECK(run_cli("bogus-command") == 1);

  auto log = dir.path() / "w1" / repository::kEventLogFile;
  std::filesystem::resize_file(log, std::filesystem::file_size(log) - 3);
  CHECK(run_cli("verify " + dir.path().string(), &out) == 2);
  CHECK(out.find("at offset") != std::string::npos);
  CHECK(run_cli("inspect " + dir.path().string() + " w1") == 2);
}
