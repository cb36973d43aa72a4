#include <gtest/gtest.h>

#include <thread>

#include "support.hpp"

using namespace gim;
using namespace gt;

namespace {

std::string walkthrough_path() { return (tasks_dir() / "scripts" / "freqbigram.walkthrough.jsonl").string(); }

ServiceConfig service_config() {
  ServiceConfig c;
  c.tasks_dir = data_dir();
  c.clock_factory = [] { return logical_clock(); };
  return c;
}

json post_session(SessionService& svc, json body, int want = 201) {
  auto r = svc.handle("POST", "/sessions", body.dump());
  EXPECT_EQ(r.status, want) << r.body.dump();
  return r.body;
}

}  // namespace

TEST(Script, WalkthroughReachesTarget) {
  auto task = corpus_task("freqbigram");
  auto script = parse_records(read_file(walkthrough_path()));
  auto out = run_script(task, script, {});
  EXPECT_TRUE(out.complete()) << out.message;
  EXPECT_EQ(out.final_program, task.target);
  ASSERT_GE(out.space_sizes.size(), 4u);
  for (std::size_t i = 1; i < 4; ++i) EXPECT_LT(out.space_sizes[i].matching_all, out.space_sizes[i - 1].matching_all);
}

TEST(Script, TranscriptsAreByteIdentical) {
  auto task = corpus_task("freqbigram");
  auto script = parse_records(read_file(walkthrough_path()));
  auto a = run_script(task, script, {});
  auto b = run_script(task, script, {});
  EXPECT_EQ(records_text(a.transcript), records_text(b.transcript));
  SessionConfig other;
  other.salt = 1;
  auto c = run_script(task, script, other);
  EXPECT_NE(records_text(a.transcript), records_text(c.transcript));
}

TEST(Script, ReplayReproducesLog) {
  auto task = corpus_task("freqbigram");
  auto out = run_script(task, parse_records(read_file(walkthrough_path())), {});
  auto r = replay_log(out.transcript, tasks_dir());
  EXPECT_TRUE(r.byte_identical);
  EXPECT_FALSE(r.first_difference);
  auto tampered = out.transcript;
  tampered[1].payload["program"] = "input";
  auto t = replay_log(tampered, tasks_dir());
  EXPECT_FALSE(t.same_events);
  EXPECT_EQ(t.first_difference, 1u);
  EXPECT_THROW(replay_log({}, tasks_dir()), SchemaError);
}

TEST(Script, IncompleteAndFailingScripts) {
  auto task = data_task("small");
  auto empty = run_script(task, {}, {});
  EXPECT_FALSE(empty.complete());
  EXPECT_EQ(empty.message, "incomplete");
  EXPECT_EQ(empty.iterations, 1u);

  auto bad = parse_records(R"({"event_kind":"feedback","payload":{"predicates":[{"kind":"remove","tokens":["zzz"]}]}}
{"event_kind":"accept","payload":{}})");
  auto b = run_script(task, bad, {});
  EXPECT_EQ(b.failed_step, 0u);
  EXPECT_FALSE(b.complete());

  auto wrong = parse_records(R"({"event_kind":"accept","payload":{"program":"input.reverse"}})");
  auto w = run_script(task, wrong, {});
  EXPECT_EQ(w.status, SessionStatus::Accepted);
  EXPECT_FALSE(w.expected_ok);
  EXPECT_FALSE(w.complete());

  EXPECT_THROW(parse_records("{\n"), SchemaError);
}

TEST(Service, ListsTasks) {
  SessionService svc(service_config());
  auto r = svc.handle("GET", "/tasks", "");
  EXPECT_EQ(r.status, 200);
  EXPECT_EQ(r.body["schema_version"], kSchemaVersion);
  std::set<std::string> ids;
  for (const auto& t : r.body["tasks"]) ids.insert(t["task_id"]);
  EXPECT_TRUE(ids.count("small"));
  EXPECT_TRUE(ids.count("toy"));
}

TEST(Service, SessionLifecycle) {
  SessionService svc(service_config());
  json s = post_session(svc, {{"task_id", "small"}, {"config", {{"salt", 0}}}});
  EXPECT_EQ(s["status"], "active");
  EXPECT_EQ(s["iteration_index"], 0);
  std::string id = s["session_id"];
  ASSERT_FALSE(s["traces"].empty());
  const json& tr = s["traces"][0];
  EXPECT_EQ(tr["expected_rendered"], "3");
  EXPECT_EQ(tr["steps"][0]["prefix_len"], 0);
  EXPECT_EQ(tr["steps"][0]["rendered"], "\"abcd\"");
  for (std::size_t i = 0; i < s["tokens"].size(); ++i) EXPECT_EQ(s["tokens"][i]["span_id"], i);

  auto got = svc.handle("GET", "/sessions/" + id, "");
  EXPECT_EQ(got.status, 200);
  EXPECT_EQ(got.body, s);

  json fb = {{"predicates", {{{"kind", "remove"}, {"tokens", {"tail"}}}}}};
  auto next = svc.handle("POST", "/sessions/" + id + "/feedback", fb.dump());
  EXPECT_EQ(next.status, 200);
  EXPECT_EQ(next.body["iteration_index"], 1);
  for (const auto& t : next.body["tokens"]) EXPECT_NE(t["token_id"], "tail");
  EXPECT_LT(next.body["space_counts"]["matching_all"].get<int>(), s["space_counts"]["matching_all"].get<int>());

  auto acc = svc.handle("POST", "/sessions/" + id + "/accept", "");
  EXPECT_EQ(acc.status, 200);
  EXPECT_EQ(acc.body["status"], "accepted");
  EXPECT_EQ(acc.body["program_text"], next.body["program_text"]);

  EXPECT_EQ(svc.handle("POST", "/sessions/" + id + "/accept", "").status, 410);
  EXPECT_EQ(svc.handle("POST", "/sessions/" + id + "/feedback", fb.dump()).status, 410);
  auto fin = svc.handle("GET", "/sessions/" + id, "");
  EXPECT_EQ(fin.body["status"], "accepted");

  auto log = svc.handle("GET", "/sessions/" + id + "/log", "");
  EXPECT_EQ(log.content_type, "application/x-ndjson");
  auto recs = parse_records(log.text);
  ASSERT_EQ(recs.size(), 5u);
  EXPECT_EQ(recs[0].event_kind, "session_started");
  EXPECT_EQ(recs[2].event_kind, "feedback");
  EXPECT_EQ(recs[4].event_kind, "accepted");
}

TEST(Service, ErrorMapping) {
  SessionService svc(service_config());
  EXPECT_EQ(svc.handle("GET", "/nowhere", "").status, 404);
  EXPECT_EQ(svc.handle("GET", "/sessions/nope", "").body["error"], "unknown_session");
  EXPECT_EQ(post_session(svc, {{"task_id", "missing"}}, 404)["error"], "unknown_task");
  EXPECT_EQ(post_session(svc, {{"task_id", "impossible"}}, 409)["error"], "empty_space");
  EXPECT_EQ(post_session(svc, json::object(), 400)["error"], "schema_error");
  EXPECT_EQ(svc.handle("POST", "/sessions", "{oops").status, 400);
  json lim = {{"task_id", "small"}, {"config", {{"limits", {{"steps", 0}}}}}};
  EXPECT_EQ(post_session(svc, lim, 400)["error"], "schema_error");

  json s = post_session(svc, {{"task_id", "small"}, {"config", {{"salt", 0}}}});
  std::string base = "/sessions/" + s["session_id"].get<std::string>();
  json unknown = {{"predicates", {{{"kind", "remove"}, {"tokens", {"zzz"}}}}}};
  EXPECT_EQ(svc.handle("POST", base + "/feedback", unknown.dump()).body["error"], "unknown_token");
  EXPECT_EQ(svc.handle("POST", base + "/feedback", "{}").status, 400);
  EXPECT_EQ(svc.handle("POST", base + "/reject", "").body["error"], "bad_request");
  EXPECT_EQ(svc.handle("POST", base + "/frobnicate", "").status, 404);

  svc.handle("POST", base + "/feedback", json{{"predicates", {{{"kind", "remove"}, {"tokens", {"tail"}}}}}}.dump());
  json clash = {{"predicates", {{{"kind", "affix"}, {"tokens", {"tail", "length"}}}}}};
  auto c = svc.handle("POST", base + "/feedback", clash.dump());
  EXPECT_EQ(c.status, 409);
  EXPECT_EQ(c.body["error"], "inconsistent_feedback");
  EXPECT_EQ(c.body["conflict"]["first"]["kind"], "affix");
  EXPECT_EQ(c.body["conflict"]["second"]["kind"], "remove");
}

TEST(Service, ResourceExceededIs503) {
  ServiceConfig cfg = service_config();
  cfg.node_cap = 10;
  SessionService svc(cfg);
  EXPECT_EQ(post_session(svc, {{"task_id", "small"}}, 503)["error"], "resource_exceeded");
}

TEST(Service, ExhaustionRestartAndAbandon) {
  SessionService svc(service_config());
  json s = post_session(svc, {{"task_id", "ident"}, {"config", {{"salt", 0}, {"allow_reject", true}}}});
  std::string base = "/sessions/" + s["session_id"].get<std::string>();
  auto r = svc.handle("POST", base + "/reject", "");
  EXPECT_EQ(r.status, 200);
  EXPECT_EQ(r.body["status"], "exhausted");
  EXPECT_EQ(r.body["offer"], json({"restart", "abandon"}));
  auto again = svc.handle("POST", base + "/restart", "");
  EXPECT_EQ(again.body["status"], "active");
  EXPECT_EQ(again.body["program_text"], "input");
  auto ab = svc.handle("POST", base + "/abandon", "");
  EXPECT_EQ(ab.body["status"], "abandoned");
  EXPECT_EQ(svc.handle("POST", base + "/restart", "").status, 410);
}

TEST(Service, IdempotentFeedback) {
  SessionService svc(service_config());
  json s = post_session(svc, {{"task_id", "small"}, {"config", {{"salt", 0}}}});
  std::string base = "/sessions/" + s["session_id"].get<std::string>();
  json fb = {{"predicates", {{{"kind", "remove"}, {"tokens", {"take(2)"}}}}}};
  std::map<std::string, std::string> h{{"Idempotency-Key", "k1"}};
  auto a = svc.handle("POST", base + "/feedback", fb.dump(), h);
  auto b = svc.handle("POST", base + "/feedback", fb.dump(), h);
  EXPECT_EQ(a.body, b.body);
  EXPECT_EQ(b.body["iteration_index"], 1);
  auto log = parse_records(svc.handle("GET", base + "/log", "").text);
  EXPECT_EQ(std::count_if(log.begin(), log.end(), [](const LogRecord& r) { return r.event_kind == "feedback"; }), 1);
}

TEST(Service, CustomExamples) {
  SessionService svc(service_config());
  json body = {{"task_id", "small"}, {"config", {{"salt", 0}, {"examples", {{{"input", "ab"}, {"output", 2}}}}}}};
  json s = post_session(svc, body);
  ASSERT_EQ(s["traces"].size(), 1u);
  EXPECT_EQ(s["traces"][0]["input"], "ab");
  EXPECT_EQ(s["traces"][0]["expected"], 2);
}

TEST(Service, LogMatchesInProcessSession) {
  SessionService svc(service_config());
  json s = post_session(svc, {{"task_id", "small"}, {"config", {{"salt", 7}}}});
  std::string id = s["session_id"];
  std::string base = "/sessions/" + id;
  json fb = {{"predicates", {{{"kind", "retain"}, {"tokens", {"reverse"}}}}}};
  svc.handle("POST", base + "/feedback", fb.dump());
  svc.handle("POST", base + "/accept", "");
  auto served = svc.handle("GET", base + "/log", "").text;

  SessionConfig cfg;
  cfg.salt = 7;
  Session local(data_task("small"), cfg, id, logical_clock());
  local.submit_feedback({Predicate::retain({"reverse"})});
  local.accept();
  EXPECT_EQ(served, local.log_text());
  // The service log also replays.
  EXPECT_TRUE(replay_log(parse_records(served), data_dir()).byte_identical);
}

TEST(Service, WritesLogFiles) {
  auto dir = std::filesystem::temp_directory_path() / "gim-service-logs";
  std::filesystem::remove_all(dir);
  ServiceConfig cfg = service_config();
  cfg.log_dir = dir;
  SessionService svc(cfg);
  json s = post_session(svc, {{"task_id", "small"}, {"config", {{"salt", 0}}}});
  std::string id = s["session_id"];
  svc.handle("POST", "/sessions/" + id + "/abandon", "");
  auto text = read_file(dir / (id + ".jsonl"));
  EXPECT_EQ(text, svc.handle("GET", "/sessions/" + id + "/log", "").text);
  std::filesystem::remove_all(dir);
}

TEST(Service, BearerToken) {
  ServiceConfig cfg = service_config();
  cfg.token = "secret";
  SessionService svc(cfg);
  EXPECT_EQ(svc.handle("GET", "/tasks", "").status, 401);
  EXPECT_EQ(svc.handle("GET", "/tasks", "", {{"Authorization", "Bearer nope"}}).status, 401);
  EXPECT_EQ(svc.handle("GET", "/tasks", "", {{"Authorization", "Bearer secret"}}).status, 200);
}

TEST(Service, OverHttp) {
  SessionService svc(service_config());
  httplib::Server server;
  svc.bind(server);
  int port = server.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  httplib::Client client("127.0.0.1", port);
  auto tasks = client.Get("/tasks");
  ASSERT_TRUE(tasks);
  EXPECT_EQ(tasks->status, 200);
  auto created = client.Post("/sessions", R"({"task_id":"small","config":{"salt":0}})", "application/json");
  ASSERT_TRUE(created);
  EXPECT_EQ(created->status, 201);
  std::string id = json::parse(created->body)["session_id"];
  httplib::Headers h{{"Idempotency-Key", "x"}};
  std::string fb = R"J({"predicates":[{"kind":"remove","tokens":["take(2)"]}]})J";
  auto a = client.Post("/sessions/" + id + "/feedback", h, fb, "application/json");
  auto b = client.Post("/sessions/" + id + "/feedback", h, fb, "application/json");
  ASSERT_TRUE(a && b);
  EXPECT_EQ(a->body, b->body);
  auto missing = client.Get("/sessions/none");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);
  server.stop();
  th.join();
}
