#pragma once

// HTTP API over sessions. `SessionService::handle` is transport-free; `bind`
// mounts it on an httplib server.

#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <regex>
#include <string>
#include <unordered_map>

#include <httplib.h>

#include "gim/script.hpp"

namespace gim {

inline constexpr int kSchemaVersion = 1;

struct ServiceConfig {
  std::filesystem::path tasks_dir;
  std::optional<std::filesystem::path> cache_dir;
  std::optional<std::filesystem::path> log_dir;  // append-only session logs
  std::optional<std::string> token;              // static bearer token
  EvalLimits limits{};
  std::size_t node_cap = 2'000'000;
  std::size_t trace_width = 60;
  std::function<SessionClock()> clock_factory = [] { return wall_clock(); };
};

struct ApiResponse {
  int status = 200;
  json body;
  std::string text;  // used instead of body when non-empty (log streams)
  std::string content_type = "application/json";
};

inline json candidate_to_json(const std::string& session_id, const CandidateView& c, const Vocabulary& v) {
  json tokens = json::array();
  for (std::size_t i = 0; i < c.program.tokens.size(); ++i) {
    const auto& tok = c.program.tokens[i];
    tokens.push_back({{"span_id", i}, {"token_id", tok}, {"display", v.letter(v.require(tok)).display_text}});
  }
  json traces = json::array();
  for (const auto& t : c.traces) {
    json steps = json::array();
    for (const auto& s : t.trace.steps) {
      steps.push_back({{"prefix_len", s.prefix_len}, {"rendered", s.rendered}, {"truncated", s.truncated}});
    }
    traces.push_back({{"input", value_to_json(t.input)},
                      {"expected", value_to_json(t.expected)},
                      {"expected_rendered", render_full(t.expected)},
                      {"steps", steps}});
  }
  return {{"schema_version", kSchemaVersion},
          {"session_id", session_id},
          {"status", "active"},
          {"iteration_index", c.iteration_index},
          {"program_text", c.program_text},
          {"tokens", tokens},
          {"traces", traces},
          {"space_counts", stats_to_json(c.space_counts)}};
}

class SessionService {
 public:
  explicit SessionService(ServiceConfig cfg) : cfg_(std::move(cfg)) {}

  const ServiceConfig& config() const { return cfg_; }

  ApiResponse handle(const std::string& method, const std::string& path, const std::string& body,
                     const std::map<std::string, std::string>& headers = {}) {
    try {
      if (cfg_.token) {
        auto it = headers.find("Authorization");
        if (it == headers.end() || it->second != "Bearer " + *cfg_.token) return error(401, "unauthorized", "");
      }
      static const std::regex session_re(R"(^/sessions/([A-Za-z0-9_.-]+)(?:/([a-z]+))?$)");
      std::smatch m;
      if (path == "/tasks" && method == "GET") return list_tasks();
      if (path == "/sessions" && method == "POST") return create(parse_body(body));
      if (!std::regex_match(path, m, session_re)) return error(404, "not_found", path);
      std::string id = m[1];
      std::string action = m[2];
      auto entry = lookup(id);
      if (!entry) return error(404, "unknown_session", id);
      std::lock_guard lock(entry->mu);
      ApiResponse r;
      if (method == "GET" && action.empty()) {
        r = state(*entry);
      } else if (method == "GET" && action == "log") {
        r.text = entry->session->log_text();
        r.content_type = "application/x-ndjson";
      } else if (method == "POST" && action == "feedback") {
        std::optional<std::string> key;
        if (auto it = headers.find("Idempotency-Key"); it != headers.end()) key = it->second;
        if (key) {
          if (auto hit = entry->idempotent.find(*key); hit != entry->idempotent.end()) return hit->second;
        }
        r = feedback(*entry, parse_body(body));
        if (key) entry->idempotent.emplace(*key, r);
      } else if (method == "POST" && action == "reject") {
        entry->session->reject();
        r = state(*entry);
      } else if (method == "POST" && action == "accept") {
        entry->session->accept();
        const Program& p = *entry->session->accepted_program();
        r.body = {{"schema_version", kSchemaVersion},
                  {"session_id", id},
                  {"status", "accepted"},
                  {"program_text", render_program(p, entry->session->vocab())},
                  {"tokens", p.tokens}};
      } else if (method == "POST" && action == "restart") {
        entry->session->restart();
        r = state(*entry);
      } else if (method == "POST" && action == "abandon") {
        entry->session->abandon();
        r.body = {{"schema_version", kSchemaVersion}, {"session_id", id}, {"status", "abandoned"}};
      } else {
        return error(404, "not_found", path);
      }
      flush_log(*entry);
      return r;
    } catch (const InconsistentFeedback& e) {
      return error(409, "inconsistent_feedback", e.what());
    } catch (const EmptySpace& e) {
      return error(409, "empty_space", e.what());
    } catch (const SessionClosed& e) {
      return error(410, "session_closed", e.what());
    } catch (const UnknownTask& e) {
      return error(404, "unknown_task", e.what());
    } catch (const UnknownToken& e) {
      return error(400, "unknown_token", e.what());
    } catch (const SchemaError& e) {
      return error(400, "schema_error", e.what());
    } catch (const ResourceExceeded& e) {
      return error(503, "resource_exceeded", e.what());
    } catch (const Error& e) {
      return error(400, "bad_request", e.what());
    } catch (const json::exception& e) {
      return error(400, "bad_request", e.what());
    }
  }

  /// Mounts every route on `server`.
  void bind(httplib::Server& server) {
    auto forward = [this](const httplib::Request& req, httplib::Response& res) {
      std::map<std::string, std::string> headers;
      for (const char* h : {"Authorization", "Idempotency-Key"}) {
        if (req.has_header(h)) headers[h] = req.get_header_value(h);
      }
      ApiResponse r = handle(req.method, req.path, req.body, headers);
      res.status = r.status;
      res.set_content(r.text.empty() ? r.body.dump() : r.text, r.content_type);
    };
    server.Get(R"(/.*)", forward);
    server.Post(R"(/.*)", forward);
  }

 private:
  struct Entry {
    std::mutex mu;
    std::unique_ptr<Session> session;
    std::unordered_map<std::string, ApiResponse> idempotent;
    std::size_t flushed = 0;
  };

  static json parse_body(const std::string& body) {
    if (body.empty()) return json::object();
    try {
      return json::parse(body);
    } catch (const json::parse_error& e) {
      throw SchemaError("body", e.what());
    }
  }

  static ApiResponse error(int status, const std::string& code, const std::string& detail) {
    ApiResponse r;
    r.status = status;
    r.body = {{"schema_version", kSchemaVersion}, {"error", code}, {"detail", detail}};
    return r;
  }

  std::shared_ptr<Entry> lookup(const std::string& id) {
    std::lock_guard lock(mu_);
    auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : it->second;
  }

  std::string fresh_id() {
    std::lock_guard lock(mu_);
    char buf[24];
    std::snprintf(buf, sizeof buf, "s%llx-%zu", static_cast<unsigned long long>(rng_() & 0xFFFFFFFFFFull),
                  ++counter_);
    return buf;
  }

  ApiResponse list_tasks() {
    json tasks = json::array();
    for (const auto& t : load_corpus(cfg_.tasks_dir)) {
      json row{{"task_id", t.task_id},
               {"description", t.description},
               {"domain", t.domain},
               {"study_task", t.study_task},
               {"vocabulary_size", t.vocabulary->size()},
               {"max_length", t.max_length},
               {"input_type", to_string(t.vocabulary->input_type())},
               {"output_type", to_string(t.output_type)}};
      if (t.target) row["target_length"] = t.target->length();
      tasks.push_back(row);
    }
    ApiResponse r;
    r.body = {{"schema_version", kSchemaVersion}, {"tasks", tasks}};
    return r;
  }

  ApiResponse create(const json& req) {
    if (!req.contains("task_id") || !req["task_id"].is_string()) throw SchemaError("task_id", "missing");
    TaskDefinition task = find_task(cfg_.tasks_dir, req["task_id"].get<std::string>());
    json c = req.value("config", json::object());
    SessionConfig sc;
    if (c.contains("salt")) sc.salt = c["salt"].get<std::uint64_t>();
    if (c.contains("max_length")) sc.max_length = c["max_length"].get<std::size_t>();
    sc.oe = c.value("oe", false);
    sc.allow_reject = c.value("allow_reject", false);
    sc.show_folded = c.value("show_folded", false);
    sc.limits = c.contains("limits") ? limits_from_json(c["limits"]) : cfg_.limits;
    sc.trace_width = c.value("trace_width", cfg_.trace_width);
    sc.node_cap = cfg_.node_cap;
    sc.cache_dir = cfg_.cache_dir;
    if (c.contains("examples")) {
      task.initial_examples.clear();
      for (const auto& e : c["examples"]) {
        json j = e;
        j["kind"] = "example";
        Predicate q = predicate_from_json(j, *task.vocabulary, task.output_type);
        task.initial_examples.push_back({q.input, q.output});
      }
    }
    auto entry = std::make_shared<Entry>();
    std::string id = fresh_id();
    entry->session = std::make_unique<Session>(std::move(task), sc, id, cfg_.clock_factory());
    {
      std::lock_guard lock(mu_);
      sessions_.emplace(id, entry);
    }
    std::lock_guard lock(entry->mu);
    flush_log(*entry);
    ApiResponse r = state(*entry);
    r.status = 201;
    return r;
  }

  ApiResponse state(Entry& e) {
    Session& s = *e.session;
    ApiResponse r;
    if (s.current()) {
      r.body = candidate_to_json(s.id(), s.view(), s.vocab());
      return r;
    }
    r.body = {{"schema_version", kSchemaVersion}, {"session_id", s.id()}, {"status", to_string(s.status())}};
    if (s.status() == SessionStatus::Exhausted) {
      r.body["offer"] = {"restart", "abandon"};
      r.body["space_counts"] = stats_to_json(s.space_counts());
    }
    if (s.accepted_program()) r.body["program_text"] = render_program(*s.accepted_program(), s.vocab());
    return r;
  }

  ApiResponse feedback(Entry& e, const json& req) {
    if (!req.contains("predicates") || !req["predicates"].is_array()) {
      throw SchemaError("predicates", "expected an array");
    }
    std::vector<Predicate> fb;
    const auto& task = e.session->task();
    for (const auto& j : req["predicates"]) fb.push_back(predicate_from_json(j, *task.vocabulary, task.output_type));
    auto all = e.session->predicates().items();
    all.insert(all.end(), fb.begin(), fb.end());
    auto c = check_consistency(all);
    if (!c.ok) {
      ApiResponse r = error(409, "inconsistent_feedback", c.conflict);
      r.body["conflict"] = {{"description", c.conflict},
                            {"first", predicate_to_json(all[c.first])},
                            {"second", predicate_to_json(all[c.second])}};
      return r;
    }
    e.session->submit_feedback(fb);
    return state(e);
  }

  void flush_log(Entry& e) {
    if (!cfg_.log_dir) return;
    const auto& recs = e.session->log_records();
    if (e.flushed == recs.size()) return;
    std::filesystem::create_directories(*cfg_.log_dir);
    std::ofstream out(*cfg_.log_dir / (e.session->id() + ".jsonl"), std::ios::app);
    for (; e.flushed < recs.size(); ++e.flushed) out << log_record_to_json(recs[e.flushed]).dump() << "\n";
  }

  ServiceConfig cfg_;
  std::mutex mu_;
  std::unordered_map<std::string, std::shared_ptr<Entry>> sessions_;
  std::mt19937_64 rng_{std::random_device{}()};
  std::size_t counter_ = 0;
};

}  // namespace gim
