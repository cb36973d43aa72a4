// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>

#include "listing.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace gim;
using namespace gt;

namespace {

struct Result {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void check(const char* name, double limit_s, const std::function<Result()>& fn) {
  auto t0 = std::chrono::steady_clock::now();
  Result r;
  try {
    r = fn();
  } catch (const std::exception& e) {
    r = {false, std::string("exception: ") + e.what()};
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (secs >= limit_s) {
    r.pass = false;
    r.detail += " (over the " + std::to_string(static_cast<int>(limit_s)) + " s limit)";
  }
  if (!r.pass) ++failures;
  std::printf("%s %-26s %7.2fs  %s\n", r.pass ? "PASS" : "FAIL", name, secs, r.detail.c_str());
  std::fflush(stdout);
}

std::vector<LogRecord> walkthrough_script() {
  return parse_records(read_file(tasks_dir() / "scripts" / "freqbigram.walkthrough.jsonl"));
}

Result walkthrough() {
  auto task = corpus_task("freqbigram");
  auto out = run_script(task, walkthrough_script(), {});
  if (!out.complete()) return {false, "script incomplete: " + out.message};
  if (out.final_program != task.target) return {false, "accepted a program other than the target"};
  // Replay the transcript, checking each candidate against the predicates
  // accumulated so far and each feedback step against the previous count.
  std::vector<Predicate> acc;
  for (const auto& e : task.initial_examples) acc.push_back(Predicate::example(e.input, e.output));
  std::uint64_t last = 0;
  bool after_feedback = false;
  std::size_t feedback_steps = 0;
  for (const auto& r : out.transcript) {
    if (r.event_kind == "feedback") {
      for (const auto& j : r.payload["predicates"]) acc.push_back(predicate_from_json(j, *task.vocabulary));
      after_feedback = true;
      ++feedback_steps;
    } else if (r.event_kind == "candidate_shown") {
      Program p = parse_program(r.payload["program"].get<std::string>(), *task.vocabulary);
      if (!satisfies_all(p, acc, *task.vocabulary)) return {false, "candidate violates predicates: " + render_program(p, *task.vocabulary)};
      std::uint64_t n = r.payload["space_counts"]["matching_all"];
      if (after_feedback && n >= last) return {false, "feedback did not shrink matching_all"};
      last = n;
      after_feedback = false;
    }
  }
  std::string sizes;
  for (const auto& s : out.space_sizes) sizes += (sizes.empty() ? "" : ">") + std::to_string(s.matching_all);
  return {feedback_steps == 3, std::to_string(out.iterations) + " candidates, matching_all " + sizes};
}

Result trace_fidelity() {
  auto task = corpus_task("freqbigram");
  auto l = freqbigram_listing();
  if (!(Program{l.tokens} == *task.target)) return {false, "listing program differs from the task target"};
  auto c = check_listing(l, *task.vocabulary, S("abdfibfcfdebdfdebdihgfkjfdebd"));
  auto t = trace(*task.target, S("abdfibfcfdebdfdebdihgfkjfdebd"), *task.vocabulary);
  std::string pair = render_full(t.steps.at(5).value);
  return {c.ok && pair == "(\"bd\",4)", c.ok ? std::to_string(c.steps) + " steps, pair " + pair : c.detail};
}

Result predicate_semantics() {
  auto task = data_task("small");
  auto n = all_wellformed(*task.vocabulary, 5).size();
  auto r = predicate_oracle(task.vocabulary, 5, 8, 20240);
  return {n <= 5000 && r.mismatches == 0 && r.combinations == 16,
          std::to_string(n) + " programs, " + std::to_string(r.trials) + " trials over " +
              std::to_string(r.combinations) + " combinations, " + std::to_string(r.mismatches) + " mismatches " +
              r.first_mismatch};
}

Result monotone_pruning() {
  auto task = data_task("small");
  auto r = monotone_scripts(task.vocabulary, 5, 100, 5, 31337);
  return {r.combinations == 100 && r.mismatches == 0,
          std::to_string(r.combinations) + " scripts, " + std::to_string(r.trials) + " rounds, " +
              std::to_string(r.mismatches) + " mismatches " + r.first_mismatch};
}

Result ban_witness_check() {
  auto task = corpus_task("freqbigram");
  auto reg = load_registry(tasks_dir() / "registry.json");
  auto rep = ban_witness(task, "min", reg);
  Program want = *task.target;
  want.tokens.push_back("sliding(2)");
  want.tokens.push_back("min");
  VerifyConfig cfg;
  cfg.samples = 100;
  cfg.seed = 77;
  bool agree = agree_on_samples(rep.witness, *task.target, *task.vocabulary, cfg);
  bool ok = rep.rounds.size() == 50 && rep.failures == 0 && rep.witness == want && agree;
  return {ok, std::to_string(rep.rounds.size()) + " example sets, " + std::to_string(rep.failures) +
                  " failures, witness " + render_program(rep.witness, *task.vocabulary) +
                  (agree ? ", agrees on 100 inputs" : ", disagrees")};
}

Result nullipotent() {
  auto reg = load_registry(tasks_dir() / "registry.json");
  VerifyConfig cfg;
  cfg.samples = 100;
  std::size_t found = 0;
  for (const auto* e : reg.nullipotent_entries()) {
    bool to_map = e->tokens == std::vector<std::string>{"toMap"} && to_string(e->context) == "Map[K,V]";
    bool filter = e->tokens == std::vector<std::string>{"filterNot(c => c == '\\r' || c == '\\n')"} &&
                  to_string(e->context) == "List[Str]";
    if (!to_map && !filter) continue;
    if (!verify_entry(*e, *reg.vocabulary, cfg)) return {false, e->tokens[0] + " is not an identity"};
    ++found;
  }
  return {found == 2, std::to_string(found) + " of 2 entries verified on 100 inputs each"};
}

Result determinism() {
  auto task = corpus_task("freqbigram");
  auto a = run_script(task, walkthrough_script(), {});
  auto b = run_script(task, walkthrough_script(), {});
  std::string ta = records_text(a.transcript), tb = records_text(b.transcript);
  auto replay = replay_log(a.transcript, tasks_dir());
  return {ta == tb && replay.byte_identical,
          std::to_string(ta.size()) + " bytes" + (replay.byte_identical ? ", replay identical" : ", replay differs")};
}

Result scale() {
  auto task = corpus_task("freqbigram");
  auto tree = build_tree(task.vocabulary, 6);
  std::vector<Predicate> preds;
  for (const auto& e : task.initial_examples) preds.push_back(Predicate::example(e.input, e.output));
  auto s = count_space(tree, preds);
  bool ok = task.vocabulary->size() == 19 && s.total_wellformed >= 10'000 && s.total_wellformed <= 1'000'000;
  return {ok, "|V|=" + std::to_string(task.vocabulary->size()) + ", total_wellformed " +
                  std::to_string(s.total_wellformed) + ", matching_examples " + std::to_string(s.matching_examples)};
}

}  // namespace

int main() {
  check("walkthrough-replay", 60, walkthrough);
  check("debug-trace-fidelity", 1e9, trace_fidelity);
  check("predicate-oracle", 30, predicate_semantics);
  check("monotone-pruning", 1e9, monotone_pruning);
  check("ban-witness", 1e9, ban_witness_check);
  check("nullipotent-detection", 1e9, nullipotent);
  check("determinism", 1e9, determinism);
  check("scale-check", 600, scale);
  std::printf("%d failed\n", failures);
  return failures == 0 ? 0 : 1;
}
