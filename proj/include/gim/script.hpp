#pragma once

// Scripted sessions and log replay. Scripts use the session log record
// format; only event_kind and payload are read.

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gim/session.hpp"

namespace gim {

/// Parses line-delimited JSON records, skipping blank lines.
inline std::vector<LogRecord> parse_records(std::string_view text) {
  std::vector<LogRecord> out;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(log_record_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw SchemaError("line " + std::to_string(line_no), e.what());
    }
  }
  return out;
}

inline std::string records_text(const std::vector<LogRecord>& records) {
  std::string out;
  for (const auto& r : records) out += log_record_to_json(r).dump() + "\n";
  return out;
}

inline std::string default_session_id(const std::string& task_id, std::uint64_t salt) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(salt));
  return task_id + "-" + buf;
}

struct ScriptOutcome {
  std::vector<LogRecord> transcript;
  SessionStatus status = SessionStatus::Active;
  std::optional<Program> final_program;
  std::size_t iterations = 0;           // candidates shown
  std::vector<SpaceStats> space_sizes;  // one per shown candidate
  std::optional<std::size_t> failed_step;
  std::string message;
  bool expected_ok = true;

  bool complete() const { return status == SessionStatus::Accepted && !failed_step && expected_ok; }
};

namespace script_detail {

inline bool script_uses(const std::vector<LogRecord>& script, std::string_view kind) {
  return std::any_of(script.begin(), script.end(), [&](const LogRecord& r) { return r.event_kind == kind; });
}

inline void collect(Session& s, ScriptOutcome& out) {
  out.transcript = s.log_records();
  out.status = s.status();
  out.final_program = s.accepted_program();
  out.iterations = 0;
  out.space_sizes.clear();
  for (const auto& r : out.transcript) {
    if (r.event_kind != "candidate_shown") continue;
    ++out.iterations;
    const json& c = r.payload.at("space_counts");
    out.space_sizes.push_back({c.at("total_wellformed").get<std::uint64_t>(),
                               c.at("matching_examples").get<std::uint64_t>(),
                               c.at("matching_all").get<std::uint64_t>()});
  }
}

}  // namespace script_detail

/// Drives a session through `script`. Step kinds: feedback {predicates},
/// reject, accept {program?}, accept_on_target, restart, abandon. A config
/// record {salt?, max_length?, oe?} fills settings `cfg` leaves unset. Records
/// of other kinds (such as a leading session_started) are ignored.
///
/// accept_on_target asks for further candidates until the task target is
/// shown, then accepts it; scripts using it run with reject enabled.
inline ScriptOutcome run_script(const TaskDefinition& task, const std::vector<LogRecord>& script, SessionConfig cfg,
                                std::optional<std::string> session_id = std::nullopt,
                                SessionClock clock = logical_clock()) {
  for (const auto& r : script) {
    if (r.event_kind != "config") continue;
    if (!cfg.salt && r.payload.contains("salt")) cfg.salt = r.payload["salt"].get<std::uint64_t>();
    if (!cfg.max_length && r.payload.contains("max_length")) cfg.max_length = r.payload["max_length"].get<std::size_t>();
    if (r.payload.value("oe", false)) cfg.oe = true;
  }
  if (!cfg.salt) cfg.salt = 0;
  if (script_detail::script_uses(script, "accept_on_target")) cfg.allow_reject = true;
  Session s(task, cfg, session_id.value_or(default_session_id(task.task_id, *cfg.salt)), std::move(clock));
  ScriptOutcome out;
  auto fail = [&](std::size_t step, std::string msg) {
    out.failed_step = step;
    out.message = std::move(msg);
  };
  for (std::size_t i = 0; i < script.size() && !out.failed_step; ++i) {
    const LogRecord& r = script[i];
    try {
      if (r.event_kind == "feedback") {
        std::vector<Predicate> fb;
        for (const auto& j : r.payload.at("predicates")) fb.push_back(predicate_from_json(j, s.vocab(), task.output_type));
        s.submit_feedback(fb);
      } else if (r.event_kind == "reject") {
        s.reject();
      } else if (r.event_kind == "accept") {
        if (r.payload.contains("program")) {
          Program want = parse_program(r.payload["program"].get<std::string>(), s.vocab());
          out.expected_ok = s.current() && *s.current() == want;
        }
        s.accept();
      } else if (r.event_kind == "accept_on_target") {
        if (!task.target) throw Error("task has no target");
        while (s.status() == SessionStatus::Active && !(*s.current() == *task.target)) s.reject();
        if (s.status() != SessionStatus::Active) {
          fail(i, "target never shown");
          out.expected_ok = false;
          break;
        }
        s.accept();
      } else if (r.event_kind == "restart") {
        s.restart();
      } else if (r.event_kind == "abandon") {
        s.abandon();
      }
    } catch (const Error& e) {
      fail(i, e.what());
    } catch (const json::exception& e) {
      fail(i, e.what());
    }
  }
  script_detail::collect(s, out);
  if (!out.failed_step && out.status != SessionStatus::Accepted) out.message = "incomplete";
  return out;
}

/// Session config recorded in a session_started payload.
inline SessionConfig config_from_started(const json& p) {
  SessionConfig cfg;
  cfg.salt = p.at("salt").get<std::uint64_t>();
  cfg.max_length = p.at("max_length").get<std::size_t>();
  cfg.oe = p.value("oe", false);
  cfg.allow_reject = p.value("allow_reject", false);
  cfg.show_folded = p.value("show_folded", false);
  if (p.contains("limits")) cfg.limits = limits_from_json(p["limits"]);
  return cfg;
}

struct ReplayResult {
  ScriptOutcome outcome;
  bool same_events = false;  // equal ignoring timestamps
  bool byte_identical = false;
  std::optional<std::size_t> first_difference;
};

/// Re-runs a recorded session from its log and compares the logs.
/// `tasks_dir` locates the task named in session_started.
inline ReplayResult replay_log(const std::vector<LogRecord>& log, const std::filesystem::path& tasks_dir,
                               SessionClock clock = logical_clock(), const SessionConfig& base = {}) {
  if (log.empty() || log.front().event_kind != "session_started") {
    throw SchemaError("log", "must begin with a session_started record");
  }
  const json& p = log.front().payload;
  TaskDefinition task = find_task(tasks_dir, p.at("task_id").get<std::string>());
  SessionConfig cfg = config_from_started(p);
  cfg.node_cap = base.node_cap;
  cfg.cache_dir = base.cache_dir;
  cfg.trace_width = base.trace_width;
  if (p.contains("initial_predicates")) {
    task.initial_examples.clear();
    for (const auto& j : p["initial_predicates"]) {
      Predicate q = predicate_from_json(j, *task.vocabulary, task.output_type);
      task.initial_examples.push_back({q.input, q.output});
    }
  }
  std::vector<LogRecord> script;
  for (const auto& r : log) {
    if (r.event_kind == "feedback" || r.event_kind == "reject" || r.event_kind == "restart") {
      script.push_back(r);
    } else if (r.event_kind == "accepted") {
      script.push_back({0, "", "accept", json::object()});
    } else if (r.event_kind == "abandoned") {
      script.push_back({0, "", "abandon", json::object()});
    }
  }
  ReplayResult res;
  res.outcome = run_script(task, script, cfg, log.front().session_id, std::move(clock));
  const auto& mine = res.outcome.transcript;
  res.same_events = mine.size() == log.size();
  for (std::size_t i = 0; i < std::max(mine.size(), log.size()); ++i) {
    if (i >= mine.size() || i >= log.size() || mine[i].event_kind != log[i].event_kind ||
        mine[i].session_id != log[i].session_id || mine[i].payload != log[i].payload) {
      res.same_events = false;
      res.first_difference = i;
      break;
    }
  }
  res.byte_identical = res.same_events && records_text(mine) == records_text(log);
  return res;
}

}  // namespace gim
