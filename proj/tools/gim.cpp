// gim: validate tasks, regenerate space statistics, run and replay scripted
// sessions, run the examples-insufficiency demonstrator, serve the HTTP API.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "gim/gim.hpp"

#ifndef GIM_TASKS_DIR
#define GIM_TASKS_DIR "tasks"
#endif

namespace {

using namespace gim;

struct Common {
  std::string tasks_dir = GIM_TASKS_DIR;
  std::optional<std::size_t> max_length;
  bool oe = false;
  std::optional<std::uint64_t> salt;
  std::string limits;
  std::string out;
};

/// "steps=N,cells=N,timeout_ms=N"; omitted keys keep their defaults.
EvalLimits parse_limits(const std::string& text) {
  EvalLimits l;
  if (text.empty()) return l;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    auto eq = part.find('=');
    if (eq == std::string::npos) throw Error("bad --limits entry '" + part + "'");
    std::string key = part.substr(0, eq);
    std::uint64_t val = std::stoull(part.substr(eq + 1));
    if (val == 0) throw Error("--limits values must be positive");
    if (key == "steps") {
      l.max_steps = val;
    } else if (key == "cells") {
      l.max_value_cells = val;
    } else if (key == "timeout_ms") {
      l.timeout = std::chrono::milliseconds(val);
    } else {
      throw Error("unknown --limits key '" + key + "'");
    }
  }
  return l;
}

void write_out(const std::string& path, const std::string& text) {
  if (path.empty()) return;
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path);
  f << text;
}

std::string join_tokens(const Program& p, const Vocabulary& v) { return render_program(p, v); }

int cmd_validate(const Common& c, const std::vector<std::string>& ids) {
  int bad = 0;
  auto files = task_files(c.tasks_dir);
  for (const auto& f : files) {
    try {
      TaskDefinition t = load_task_file(f);
      if (!ids.empty() && std::find(ids.begin(), ids.end(), t.task_id) == ids.end()) continue;
      std::printf("ok    %-14s |V|=%-3zu |E|=%zu |m*|=%s\n", t.task_id.c_str(), t.vocabulary->size(),
                  t.initial_examples.size(), t.target ? std::to_string(t.target->length()).c_str() : "-");
    } catch (const Error& e) {
      ++bad;
      std::printf("FAIL  %s: %s\n", f.filename().string().c_str(), e.what());
    }
  }
  auto reg = std::filesystem::path(c.tasks_dir) / "registry.json";
  if (std::filesystem::exists(reg)) {
    try {
      EquivRegistry r = load_registry(reg);
      for (const auto& e : r.entries) {
        bool ok = verify_entry(e, *r.vocabulary);
        std::string seq;
        for (const auto& t : e.tokens) seq += (seq.empty() ? "" : ".") + t;
        std::printf("%s registry %s on %s\n", ok ? "ok   " : "FAIL ", seq.c_str(), to_string(e.context).c_str());
        if (!ok) ++bad;
      }
    } catch (const Error& e) {
      ++bad;
      std::printf("FAIL  registry.json: %s\n", e.what());
    }
  }
  return bad ? 1 : 0;
}

int cmd_stats(const Common& c, const std::vector<std::string>& ids) {
  json rows = json::array();
  std::printf("%-14s %4s %4s %5s %12s %12s %9s\n", "task", "|V|", "|E|", "|m*|", "space", "reject-only", "seconds");
  for (const auto& f : task_files(c.tasks_dir)) {
    TaskDefinition t = load_task_file(f);
    if (!ids.empty() && std::find(ids.begin(), ids.end(), t.task_id) == ids.end()) continue;
    std::size_t len = c.max_length.value_or(t.max_length);
    json row{{"task_id", t.task_id},
             {"vocabulary_size", t.vocabulary->size()},
             {"examples", t.initial_examples.size()},
             {"max_length", len}};
    if (t.target) row["target_length"] = t.target->length();
    auto t0 = std::chrono::steady_clock::now();
    try {
      std::vector<Value> inputs;
      std::vector<Predicate> preds;
      for (const auto& e : t.initial_examples) {
        inputs.push_back(e.input);
        preds.push_back(Predicate::example(e.input, e.output));
      }
      EnumTree tree = build_tree(t.vocabulary, len, c.oe, c.oe ? inputs : std::vector<Value>{}, parse_limits(c.limits));
      SpaceStats s = count_space(tree, preds);
      double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      row["total_wellformed"] = s.total_wellformed;
      row["reject_only"] = s.matching_examples;
      row["seconds"] = secs;
      std::printf("%-14s %4zu %4zu %5s %12llu %12llu %9.2f\n", t.task_id.c_str(), t.vocabulary->size(),
                  t.initial_examples.size(), t.target ? std::to_string(t.target->length()).c_str() : "-",
                  static_cast<unsigned long long>(s.total_wellformed),
                  static_cast<unsigned long long>(s.matching_examples), secs);
    } catch (const ResourceExceeded& e) {
      row["error"] = e.what();
      std::printf("%-14s %4zu %4zu %5s  resource exceeded: %s\n", t.task_id.c_str(), t.vocabulary->size(),
                  t.initial_examples.size(), t.target ? std::to_string(t.target->length()).c_str() : "-", e.what());
    }
    std::fflush(stdout);
    rows.push_back(row);
  }
  write_out(c.out, rows.dump(2) + "\n");
  return 0;
}

SessionConfig session_config(const Common& c) {
  SessionConfig cfg;
  cfg.max_length = c.max_length;
  cfg.oe = c.oe;
  cfg.salt = c.salt;
  cfg.limits = parse_limits(c.limits);
  return cfg;
}

void print_outcome(const ScriptOutcome& o, const Vocabulary& v) {
  std::size_t i = 0;
  for (const auto& r : o.transcript) {
    if (r.event_kind != "candidate_shown") continue;
    const auto& s = o.space_sizes[i++];
    std::printf("q%-3zu %-60s matching_all=%llu matching_examples=%llu\n", i, r.payload["program"].get<std::string>().c_str(),
                static_cast<unsigned long long>(s.matching_all), static_cast<unsigned long long>(s.matching_examples));
  }
  std::printf("iterations: %zu\n", o.iterations);
  std::printf("status: %s\n", to_string(o.status));
  if (o.final_program) std::printf("final: %s\n", join_tokens(*o.final_program, v).c_str());
  if (o.failed_step) std::printf("failed at step %zu: %s\n", *o.failed_step, o.message.c_str());
  if (!o.failed_step && o.status != SessionStatus::Accepted) std::printf("incomplete\n");
  if (!o.expected_ok) std::printf("accepted program differs from the expected one\n");
}

int cmd_run_script(const Common& c, const std::string& task_id, const std::string& script_path) {
  TaskDefinition task = find_task(c.tasks_dir, task_id);
  auto script = script_path.empty() ? std::vector<LogRecord>{} : parse_records(read_file(script_path));
  ScriptOutcome o = run_script(task, script, session_config(c));
  write_out(c.out, records_text(o.transcript));
  print_outcome(o, *task.vocabulary);
  if (o.failed_step) return 2;
  return o.complete() ? 0 : 1;
}

int cmd_replay(const Common& c, const std::string& log_path) {
  auto log = parse_records(read_file(log_path));
  ReplayResult r = replay_log(log, c.tasks_dir);
  write_out(c.out, records_text(r.outcome.transcript));
  if (r.byte_identical) {
    std::printf("replay: byte-identical (%zu records)\n", log.size());
  } else if (r.same_events) {
    std::printf("replay: identical events, timestamps differ (%zu records)\n", log.size());
  } else {
    std::printf("replay: differs at record %zu\n", r.first_difference.value_or(0));
  }
  return r.same_events ? 0 : 1;
}

int cmd_witness(const Common& c, const std::string& task_id, std::string banned, std::size_t sets,
               std::size_t per_set, std::uint64_t seed, bool enumerate, std::string registry) {
  TaskDefinition task = find_task(c.tasks_dir, task_id);
  if (banned.empty()) {
    if (!task.banned_token) throw Error("task has no banned_token; pass one");
    banned = *task.banned_token;
  }
  if (registry.empty()) registry = (std::filesystem::path(c.tasks_dir) / "registry.json").string();
  EquivRegistry reg = load_registry(registry);
  WitnessConfig cfg;
  cfg.example_sets = sets;
  cfg.examples_per_set = per_set;
  cfg.seed = seed;
  cfg.enumerate = enumerate;
  cfg.verify.limits = parse_limits(c.limits);
  const Vocabulary& v = *task.vocabulary;
  WitnessReport rep;
  try {
    rep = ban_witness(task, banned, reg, cfg);
  } catch (const NoConstruction& e) {
    std::printf("NoConstruction: %s\n", e.what());
    return 1;
  }
  std::printf("target:  %s\nbanned:  %s\nwitness: %s\nlength bound: %zu\n", render_program(rep.target, v).c_str(),
              banned.c_str(), render_program(rep.witness, v).c_str(), rep.length_bound);
  for (std::size_t i = 0; i < rep.rounds.size(); ++i) {
    const auto& r = rep.rounds[i];
    std::string ex;
    for (const auto& e : r.examples) ex += (ex.empty() ? "" : ", ") + render_full(e.input) + "->" + render_full(e.output);
    std::printf("set %2zu: %s  %s", i, r.witness_satisfies ? "witness survives" : "WITNESS FILTERED", ex.c_str());
    if (r.banned_programs) std::printf("  [%zu surviving programs use %s]", *r.banned_programs, banned.c_str());
    std::printf("\n");
  }
  std::printf("failures: %zu/%zu\n", rep.failures, rep.rounds.size());
  return rep.failures ? 1 : 0;
}

std::string env_or(const char* name, std::string fallback) {
  const char* v = std::getenv(name);
  return v && *v ? v : fallback;
}

int cmd_serve(const Common& c, std::string host, int port, std::string cache_dir, std::string log_dir,
              std::string token) {
  ServiceConfig cfg;
  cfg.tasks_dir = c.tasks_dir;
  cfg.limits = parse_limits(c.limits);
  if (!cache_dir.empty()) cfg.cache_dir = cache_dir;
  if (!log_dir.empty()) cfg.log_dir = log_dir;
  if (!token.empty()) cfg.token = token;
  SessionService svc(cfg);
  httplib::Server server;
  svc.bind(server);
  std::printf("listening on %s:%d (tasks: %s)\n", host.c_str(), port, c.tasks_dir.c_str());
  std::fflush(stdout);
  return server.listen(host, port) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interactive synthesis of pipeline programs from examples and syntactic feedback"};
  app.require_subcommand(1);
  Common c;
  c.tasks_dir = env_or("GIM_TASKS_DIR", c.tasks_dir);

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--tasks-dir", c.tasks_dir, "Directory holding *.task.json files");
    sub->add_option("--max-length", c.max_length, "Override the task's length bound");
    sub->add_flag("--oe", c.oe, "Fold observationally equivalent programs");
    sub->add_option("--salt", c.salt, "Selection salt (batch default: script config, else 0)");
    sub->add_option("--limits", c.limits, "steps=N,cells=N,timeout_ms=N");
    sub->add_option("--out", c.out, "Write the transcript or table here");
  };

  std::vector<std::string> ids;
  auto* validate = app.add_subcommand("validate", "Load and check task files and the identity registry");
  add_common(validate);
  validate->add_option("tasks", ids, "Task ids (default: all)");

  auto* stats = app.add_subcommand("stats", "Regenerate space sizes per task");
  add_common(stats);
  stats->add_option("tasks", ids, "Task ids (default: all)");

  std::string task_id, script_path;
  auto* run = app.add_subcommand("run-script", "Drive a session with a scripted feedback sequence");
  add_common(run);
  run->add_option("task", task_id, "Task id")->required();
  run->add_option("script", script_path, "Script file (line-delimited records)");

  std::string log_path;
  auto* replay = app.add_subcommand("replay", "Re-run a recorded session log and compare");
  add_common(replay);
  replay->add_option("log", log_path, "Session log")->required();

  std::string banned, registry;
  std::size_t sets = 50, per_set = 5;
  std::uint64_t seed = 2024;
  bool enumerate = false;
  auto* witness_cmd = app.add_subcommand("witness", "Show that examples cannot rule out a letter");
  add_common(witness_cmd);
  witness_cmd->add_option("task", task_id, "Task id")->required();
  witness_cmd->add_option("banned", banned, "Letter to ban (default: the task's banned_token)");
  witness_cmd->add_option("--sets", sets, "Number of sampled example sets");
  witness_cmd->add_option("--examples", per_set, "Examples per set");
  witness_cmd->add_option("--seed", seed, "Sampling seed");
  witness_cmd->add_option("--registry", registry, "Identity registry file");
  witness_cmd->add_flag("--enumerate", enumerate, "Also enumerate the raised-bound space (small vocabularies)");

  std::string host = "127.0.0.1", cache_dir = env_or("GIM_CACHE_DIR", ""), log_dir = env_or("GIM_LOG_DIR", "");
  std::string token = env_or("GIM_TOKEN", "");
  int port = std::atoi(env_or("GIM_PORT", "8080").c_str());
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  add_common(serve);
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port");
  serve->add_option("--cache-dir", cache_dir, "Directory for precomputed spaces");
  serve->add_option("--log-dir", log_dir, "Directory for session logs");
  serve->add_option("--token", token, "Require this bearer token");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*validate) return cmd_validate(c, ids);
    if (*stats) return cmd_stats(c, ids);
    if (*run) return cmd_run_script(c, task_id, script_path);
    if (*replay) return cmd_replay(c, log_path);
    if (*witness_cmd) return cmd_witness(c, task_id, banned, sets, per_set, seed, enumerate, registry);
    if (*serve) return cmd_serve(c, host, port, cache_dir, log_dir, token);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
