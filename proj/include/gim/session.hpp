#pragma once

// Interactive synthesis session: shows a candidate, takes feedback, repeats.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "gim/enumerator.hpp"

namespace gim {

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ull;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ull;

inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = kFnvOffset) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

/// FNV-1a over the rendered program followed by the salt (8 bytes, little endian).
inline std::uint64_t candidate_hash(std::string_view rendered, std::uint64_t salt) {
  std::uint64_t h = fnv1a64(rendered);
  for (int i = 0; i < 8; ++i) {
    h ^= (salt >> (8 * i)) & 0xFF;
    h *= kFnvPrime;
  }
  return h;
}

/// Argmin of candidate_hash; ties go to the shorter program, then token order.
inline const Program& select_candidate(std::span<const Program> set, const Vocabulary& v, std::uint64_t salt) {
  if (set.empty()) throw EmptySpace("no candidate to select");
  std::size_t best = 0;
  std::uint64_t best_h = candidate_hash(render_program(set[0], v), salt);
  for (std::size_t i = 1; i < set.size(); ++i) {
    std::uint64_t h = candidate_hash(render_program(set[i], v), salt);
    bool better = h < best_h ||
                  (h == best_h && (set[i].length() < set[best].length() ||
                                   (set[i].length() == set[best].length() && set[i].tokens < set[best].tokens)));
    if (better) {
      best = i;
      best_h = h;
    }
  }
  return set[best];
}

struct SessionConfig {
  std::optional<std::size_t> max_length;  // defaults to the task's
  bool oe = false;
  std::optional<std::uint64_t> salt;      // random per session when unset
  bool allow_reject = false;
  bool show_folded = false;
  EvalLimits limits{};
  std::size_t node_cap = 2'000'000;
  std::size_t trace_width = 60;
  std::optional<std::filesystem::path> cache_dir;  // persisted spaces
};

enum class SessionStatus : unsigned char { Active, Accepted, Exhausted, Abandoned };

inline const char* to_string(SessionStatus s) {
  switch (s) {
    case SessionStatus::Active: return "active";
    case SessionStatus::Accepted: return "accepted";
    case SessionStatus::Exhausted: return "exhausted";
    case SessionStatus::Abandoned: return "abandoned";
  }
  return "?";
}

/// Milliseconds; injectable so tests and transcripts can be deterministic.
using SessionClock = std::function<std::int64_t()>;

inline SessionClock wall_clock() {
  return [] {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
        .count();
  };
}

/// A clock that returns 0, 1, 2, ... on successive calls.
inline SessionClock logical_clock() {
  auto n = std::make_shared<std::int64_t>(0);
  return [n] { return (*n)++; };
}

struct HistoryEntry {
  Program candidate;
  std::int64_t shown_at = 0;
  std::string response;  // "feedback", "reject", "accept", "restart", "abandon"; empty while open
  std::vector<Predicate> feedback;
  std::optional<std::int64_t> answered_at;
};

struct ExampleTrace {
  Value input;
  Value expected;
  DebugTrace trace;
};

struct CandidateView {
  std::size_t iteration_index = 0;
  Program program;
  std::string program_text;
  std::vector<ExampleTrace> traces;
  SpaceStats space_counts;
};

struct LogRecord {
  std::int64_t ts = 0;
  std::string session_id;
  std::string event_kind;
  json payload;
};

inline json log_record_to_json(const LogRecord& r) {
  return json{{"ts", r.ts}, {"session_id", r.session_id}, {"event_kind", r.event_kind}, {"payload", r.payload}};
}

inline LogRecord log_record_from_json(const json& j) {
  LogRecord r;
  r.ts = j.value("ts", std::int64_t{0});
  r.session_id = j.value("session_id", "");
  if (!j.contains("event_kind") || !j["event_kind"].is_string()) throw SchemaError("record.event_kind", "missing");
  r.event_kind = j["event_kind"].get<std::string>();
  r.payload = j.value("payload", json::object());
  return r;
}

inline json limits_to_json(const EvalLimits& l) {
  return json{{"steps", l.max_steps}, {"cells", l.max_value_cells}, {"timeout_ms", l.timeout.count()}};
}

inline EvalLimits limits_from_json(const json& j) {
  EvalLimits l;
  l.max_steps = j.value("steps", l.max_steps);
  l.max_value_cells = j.value("cells", l.max_value_cells);
  l.timeout = std::chrono::milliseconds(j.value("timeout_ms", static_cast<std::int64_t>(l.timeout.count())));
  if (l.max_steps == 0 || l.max_value_cells == 0 || l.timeout.count() <= 0) {
    throw SchemaError("limits", "all limits must be positive");
  }
  return l;
}

inline json stats_to_json(const SpaceStats& s) {
  return json{{"total_wellformed", s.total_wellformed},
              {"matching_examples", s.matching_examples},
              {"matching_all", s.matching_all}};
}

class Session {
 public:
  /// Builds (or loads) the space, applies the task's initial examples and
  /// shows the first candidate. Throws EmptySpace if nothing matches.
  Session(TaskDefinition task, SessionConfig cfg, std::string session_id, SessionClock clock = wall_clock())
      : task_(std::move(task)), cfg_(std::move(cfg)), id_(std::move(session_id)), clock_(std::move(clock)) {
    if (!cfg_.salt) cfg_.salt = std::random_device{}() * 0x100000000ull ^ std::random_device{}();
    max_length_ = cfg_.max_length.value_or(task_.max_length);
    for (const auto& e : task_.initial_examples) {
      Predicate q = Predicate::example(e.input, e.output);
      validate_predicate(q, vocab());
      initial_.insert(std::move(q));
    }
    auto c = check_consistency(initial_.items());
    if (!c.ok) throw InconsistentFeedback(c.conflict);
    pristine_ = std::make_unique<EnumTree>(make_tree());
    for (const auto& q : initial_) pristine_->example_mask(q);

    json init = json::array();
    for (const auto& q : initial_) init.push_back(predicate_to_json(q));
    log("session_started", json{{"task_id", task_.task_id},
                                {"salt", *cfg_.salt},
                                {"max_length", max_length_},
                                {"oe", cfg_.oe},
                                {"allow_reject", cfg_.allow_reject},
                                {"show_folded", cfg_.show_folded},
                                {"limits", limits_to_json(cfg_.limits)},
                                {"initial_predicates", init}});
    begin_run();
    if (status_ == SessionStatus::Exhausted) {
      throw EmptySpace("no program up to length " + std::to_string(max_length_) + " satisfies the initial examples");
    }
  }

  const std::string& id() const { return id_; }
  const TaskDefinition& task() const { return task_; }
  const Vocabulary& vocab() const { return *task_.vocabulary; }
  const SessionConfig& config() const { return cfg_; }
  std::uint64_t salt() const { return *cfg_.salt; }
  std::size_t max_length() const { return max_length_; }
  SessionStatus status() const { return status_; }
  std::size_t iteration_index() const { return iteration_; }
  const std::optional<Program>& current() const { return current_; }
  const std::optional<Program>& accepted_program() const { return accepted_; }
  const PredicateSet& predicates() const { return preds_; }
  const std::vector<HistoryEntry>& history() const { return history_; }
  const std::vector<LogRecord>& log_records() const { return log_; }
  std::size_t candidate_count() const { return satisfying_.size(); }

  SpaceStats space_counts() { return count_space(*tree_, preds_.items(), cfg_.show_folded); }

  /// Current candidate with its trace on every Example input.
  CandidateView view() {
    if (!current_) throw SessionClosed("no current candidate");
    CandidateView v;
    v.iteration_index = iteration_;
    v.program = *current_;
    v.program_text = render_program(*current_, vocab());
    for (const auto& q : preds_) {
      if (q.kind != PredicateKind::Example) continue;
      v.traces.push_back({q.input, q.output, trace(*current_, q.input, vocab(), cfg_.limits, cfg_.trace_width)});
    }
    v.space_counts = space_counts();
    return v;
  }

  /// Adds predicates and moves to the next candidate (or Exhausted).
  SessionStatus submit_feedback(const std::vector<Predicate>& fb) {
    require_active();
    if (fb.empty()) throw Error("feedback must contain at least one predicate");
    for (const auto& q : fb) validate_predicate(q, vocab());
    std::vector<Predicate> all = preds_.items();
    for (const auto& q : fb) all.push_back(q);
    auto c = check_consistency(all);
    if (!c.ok) throw InconsistentFeedback(c.conflict);

    bool changed = false;
    for (const auto& q : fb) {
      if (!preds_.insert(q)) continue;
      changed = true;
      tree_->prune_with(q);
    }
    close_entry("feedback", fb);
    json arr = json::array();
    for (const auto& q : fb) arr.push_back(predicate_to_json(q));
    log("feedback", json{{"predicates", arr}});
    if (changed) refresh_candidates();
    advance(changed);
    return status_;
  }

  /// Asks for another candidate without adding predicates.
  SessionStatus reject() {
    require_active();
    if (!cfg_.allow_reject) throw Error("reject is disabled for this session");
    close_entry("reject", {});
    log("reject", json::object());
    advance(false);
    return status_;
  }

  void accept() {
    require_active();
    accepted_ = current_;
    close_entry("accept", {});
    status_ = SessionStatus::Accepted;
    log("accepted", json{{"program", render_program(*accepted_, vocab())}, {"tokens", accepted_->tokens}});
    current_.reset();
  }

  /// Back to the initial examples; history is kept.
  void restart() {
    if (status_ != SessionStatus::Active && status_ != SessionStatus::Exhausted) {
      throw SessionClosed("session " + id_ + " is " + to_string(status_));
    }
    if (current_) close_entry("restart", {});
    log("restarted", json::object());
    begin_run();
  }

  void abandon() {
    if (status_ != SessionStatus::Active && status_ != SessionStatus::Exhausted) {
      throw SessionClosed("session " + id_ + " is " + to_string(status_));
    }
    if (current_) close_entry("abandon", {});
    status_ = SessionStatus::Abandoned;
    current_.reset();
    log("abandoned", json::object());
  }

  /// The log as line-delimited JSON.
  std::string log_text() const {
    std::string out;
    for (const auto& r : log_) out += log_record_to_json(r).dump() + "\n";
    return out;
  }

 private:
  EnumTree make_tree() const {
    EnumConfig ec;
    ec.max_length = max_length_;
    ec.oe = cfg_.oe;
    ec.limits = cfg_.limits;
    ec.node_cap = cfg_.node_cap;
    if (cfg_.oe) {
      for (const auto& e : task_.initial_examples) ec.example_inputs.push_back(e.input);
    }
    if (!cfg_.cache_dir) return EnumTree::build(task_.vocabulary, std::move(ec));
    auto file = *cfg_.cache_dir / (vocab().name() + "-L" + std::to_string(max_length_) + (cfg_.oe ? "-oe" : "") +
                                   ".space");
    if (auto t = load_space(task_.vocabulary, file, ec)) return std::move(*t);
    EnumTree t = EnumTree::build(task_.vocabulary, std::move(ec));
    std::filesystem::create_directories(*cfg_.cache_dir);
    save_space(t, file);
    return t;
  }

  void require_active() const {
    if (status_ != SessionStatus::Active) throw SessionClosed("session " + id_ + " is " + to_string(status_));
  }

  std::int64_t now() {
    last_ts_ = std::max(last_ts_, clock_());
    return last_ts_;
  }

  void log(std::string kind, json payload) { log_.push_back({now(), id_, std::move(kind), std::move(payload)}); }

  void begin_run() {
    tree_ = std::make_unique<EnumTree>(*pristine_);
    preds_ = initial_;
    shown_.clear();
    iteration_ = 0;
    current_.reset();
    status_ = SessionStatus::Active;
    refresh_candidates();
    pick(false);
  }

  void refresh_candidates() { satisfying_ = candidate_ids(*tree_, preds_.items(), cfg_.show_folded); }

  void close_entry(const char* response, const std::vector<Predicate>& fb) {
    if (history_.empty() || history_.back().answered_at) return;
    history_.back().response = response;
    history_.back().feedback = fb;
    history_.back().answered_at = now();
  }

  void advance(bool changed) {
    ++iteration_;
    pick(changed);
  }

  /// Chooses among satisfying programs not yet shown in this run. A program
  /// already shown may reappear only as the sole survivor of a changed
  /// predicate set.
  void pick(bool changed) {
    std::vector<NodeId> pool;
    for (NodeId i : satisfying_) {
      if (!shown_.contains(i)) pool.push_back(i);
    }
    if (pool.empty() && changed && satisfying_.size() == 1) pool = satisfying_;
    if (pool.empty()) {
      status_ = SessionStatus::Exhausted;
      current_.reset();
      log("exhausted", json{{"space_counts", stats_to_json(space_counts())}, {"offer", {"restart", "abandon"}}});
      return;
    }
    std::vector<Program> progs;
    progs.reserve(pool.size());
    for (NodeId i : pool) progs.push_back(tree_->program(i));
    const Program& chosen = select_candidate(progs, vocab(), *cfg_.salt);
    NodeId node = pool[static_cast<std::size_t>(&chosen - progs.data())];
    shown_.insert(node);
    current_ = chosen;
    history_.push_back({chosen, now(), "", {}, std::nullopt});
    log("candidate_shown", json{{"iteration_index", iteration_},
                                {"program", render_program(chosen, vocab())},
                                {"tokens", chosen.tokens},
                                {"space_counts", stats_to_json(space_counts())}});
  }

  TaskDefinition task_;
  SessionConfig cfg_;
  std::string id_;
  SessionClock clock_;
  std::size_t max_length_ = 0;
  std::unique_ptr<EnumTree> pristine_;
  std::unique_ptr<EnumTree> tree_;
  PredicateSet initial_;
  PredicateSet preds_;
  std::vector<NodeId> satisfying_;
  std::unordered_set<NodeId> shown_;
  std::size_t iteration_ = 0;
  std::optional<Program> current_;
  std::optional<Program> accepted_;
  SessionStatus status_ = SessionStatus::Active;
  std::vector<HistoryEntry> history_;
  std::vector<LogRecord> log_;
  std::int64_t last_ts_ = INT64_MIN;
};

}  // namespace gim
