#include <gtest/gtest.h>

#include "oracles.hpp"
#include "support.hpp"

using namespace gim;
using namespace gt;

namespace {

SessionConfig with_salt(std::uint64_t salt, bool allow_reject = false) {
  SessionConfig c;
  c.salt = salt;
  c.allow_reject = allow_reject;
  return c;
}

Session open(const std::string& task, SessionConfig cfg) {
  return Session(data_task(task), std::move(cfg), "t", logical_clock());
}

}  // namespace

TEST(Selection, HashOracleValues) {
  EXPECT_EQ(fnv1a64(""), kFnvOffset);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cull);
  EXPECT_EQ(candidate_hash("input", 0), 0x9d1ff4dbfbd2cfbbull);
  EXPECT_EQ(candidate_hash("input.tail", 0), 0x3ebf600ff4762c65ull);
  EXPECT_EQ(candidate_hash("input.length", 0), 0x3b1539364640b4dfull);
}

TEST(Selection, ArgminOverSaltedHashes) {
  auto task = data_task("toy");
  const Vocabulary& v = *task.vocabulary;
  std::vector<Program> three{P({}), P({"tail"}), P({"length"})};
  for (std::uint64_t salt : {0ull, 1ull, 42ull}) EXPECT_EQ(select_candidate(three, v, salt), P({"length"}));
  std::vector<Program> five{P({}), P({"tail"}), P({"length"}), P({"tail", "tail"}), P({"tail", "length"})};
  EXPECT_EQ(select_candidate(five, v, 0), P({"tail", "tail"}));
  EXPECT_EQ(select_candidate(five, v, 1), P({"length"}));
  EXPECT_EQ(select_candidate(five, v, 42), P({"length"}));
  // Order of the candidate list does not matter.
  std::vector<Program> rev(five.rbegin(), five.rend());
  for (std::uint64_t salt = 0; salt < 50; ++salt) EXPECT_EQ(select_candidate(rev, v, salt), select_candidate(five, v, salt));
  EXPECT_THROW(select_candidate(std::vector<Program>{}, v, 0), EmptySpace);
}

TEST(Selection, TiesPreferShorterThenTokenOrder) {
  // Identical renderings hash identically; only the tie-break separates them.
  Vocabulary v = load_vocabulary(R"({"format_version":1,"name":"tie","input_type":"Str","letters":[
    {"token_id":"a.b","receiver":"Str","returns":"Str","builtin":"tail"},
    {"token_id":"a","receiver":"Str","returns":"Str","builtin":"tail"},
    {"token_id":"b","receiver":"Str","returns":"Str","builtin":"tail"}]})");
  std::vector<Program> set{P({"a", "b"}), P({"a.b"})};
  ASSERT_EQ(render_program(set[0], v), render_program(set[1], v));
  EXPECT_EQ(select_candidate(set, v, 3), P({"a.b"}));
  std::vector<Program> same_len{P({"b"}), P({"a"})};
  EXPECT_EQ(select_candidate(same_len, v, 3), select_candidate(std::vector<Program>{P({"a"}), P({"b"})}, v, 3));
}

TEST(Session, ImpossibleTaskHasEmptySpace) {
  EXPECT_THROW(open("impossible", with_salt(0)), EmptySpace);
}

TEST(Session, FirstCandidateAndTraces) {
  Session s = open("ident", with_salt(0, true));
  ASSERT_TRUE(s.current());
  EXPECT_EQ(*s.current(), P({}));
  auto view = s.view();
  ASSERT_EQ(view.traces.size(), 2u);
  for (const auto& t : view.traces) {
    ASSERT_EQ(t.trace.steps.size(), 1u);
    EXPECT_EQ(t.trace.final_value(), t.expected);
  }
  EXPECT_EQ(view.program_text, "input");
  EXPECT_EQ(view.space_counts.matching_all, 1u);
}

TEST(Session, RejectExhaustsThenSoleSurvivorReturnsOnChange) {
  Session s = open("ident", with_salt(0, true));
  EXPECT_EQ(s.reject(), SessionStatus::Exhausted);
  EXPECT_FALSE(s.current());
  EXPECT_THROW(s.reject(), SessionClosed);
  s.restart();
  EXPECT_EQ(s.status(), SessionStatus::Active);
  // The only survivor is shown again once the predicate set changes.
  EXPECT_EQ(s.submit_feedback({Predicate::remove({"tail"})}), SessionStatus::Active);
  EXPECT_EQ(*s.current(), P({}));
  // Repeating the same predicate changes nothing.
  EXPECT_EQ(s.submit_feedback({Predicate::remove({"tail"})}), SessionStatus::Exhausted);
}

TEST(Session, RejectNeedsPermission) {
  Session s = open("ident", with_salt(0));
  EXPECT_THROW(s.reject(), Error);
  EXPECT_EQ(s.status(), SessionStatus::Active);
}

TEST(Session, InconsistentFeedbackLeavesStateUnchanged) {
  Session s = open("small", with_salt(0));
  s.submit_feedback({Predicate::remove({"take(2)"})});
  auto before = s.space_counts();
  auto cur = s.current();
  EXPECT_THROW(s.submit_feedback({Predicate::retain({"tail", "take(2)"})}), InconsistentFeedback);
  EXPECT_THROW(s.submit_feedback({Predicate::example(S("abcd"), I(4))}), InconsistentFeedback);
  EXPECT_THROW(s.submit_feedback({Predicate::remove({"nope"})}), UnknownToken);
  EXPECT_THROW(s.submit_feedback({}), Error);
  EXPECT_EQ(s.space_counts(), before);
  EXPECT_EQ(s.current(), cur);
}

TEST(Session, FinalizationIsOnce) {
  Session s = open("small", with_salt(0));
  s.accept();
  EXPECT_EQ(s.status(), SessionStatus::Accepted);
  EXPECT_THROW(s.accept(), SessionClosed);
  EXPECT_THROW(s.abandon(), SessionClosed);
  EXPECT_THROW(s.restart(), SessionClosed);
  EXPECT_THROW(s.submit_feedback({Predicate::remove({"tail"})}), SessionClosed);
  Session t = open("small", with_salt(0));
  t.abandon();
  EXPECT_THROW(t.abandon(), SessionClosed);
  EXPECT_THROW(t.accept(), SessionClosed);
}

TEST(Session, CandidatesSatisfyPredicatesAndNeverRepeat) {
  auto task = data_task("small");
  for (std::uint64_t salt = 0; salt < 5; ++salt) {
    Session s(task, with_salt(salt, true), "t", logical_clock());
    std::set<Program> seen;
    std::vector<Predicate> fb{Predicate::remove({"reverse", "reverse"}), Predicate::affix({"tail"})};
    std::size_t step = 0;
    while (s.status() == SessionStatus::Active) {
      ASSERT_TRUE(seen.insert(*s.current()).second);
      ASSERT_TRUE(satisfies_all(*s.current(), s.predicates().items(), s.vocab()));
      if (step < fb.size()) s.submit_feedback({fb[step]});
      else s.reject();
      ++step;
    }
    EXPECT_EQ(s.status(), SessionStatus::Exhausted);
    auto all = all_wellformed(s.vocab(), 5);
    std::vector<Predicate> preds{Predicate::example(S("abcd"), I(3))};
    preds.insert(preds.end(), fb.begin(), fb.end());
    auto expected = oracle_filter(all, preds, s.vocab());
    for (const auto& p : expected) EXPECT_TRUE(seen.count(p));
  }
}

TEST(Session, RestartMatchesFreshSession) {
  auto task = data_task("small");
  Session a(task, with_salt(9), "t", logical_clock());
  Session b(task, with_salt(9), "t", logical_clock());
  a.submit_feedback({Predicate::remove({"tail"})});
  a.submit_feedback({Predicate::retain({"reverse"})});
  a.restart();
  EXPECT_EQ(a.current(), b.current());
  EXPECT_EQ(a.space_counts(), b.space_counts());
  EXPECT_EQ(a.predicates().items(), b.predicates().items());
  EXPECT_EQ(a.iteration_index(), 0u);
  EXPECT_GE(a.history().size(), 3u);
  EXPECT_EQ(a.history().back().candidate, *b.current());
}

TEST(Session, LogIsMonotoneAndComplete) {
  auto task = data_task("small");
  std::int64_t t = 100;
  SessionClock jittery = [&t]() mutable {
    t += (t % 3 == 0) ? -5 : 7;
    return t;
  };
  Session s(task, with_salt(1), "sid", jittery);
  s.submit_feedback({Predicate::remove({"tail"})});
  s.accept();
  const auto& log = s.log_records();
  ASSERT_GE(log.size(), 5u);
  EXPECT_EQ(log.front().event_kind, "session_started");
  EXPECT_EQ(log.back().event_kind, "accepted");
  for (std::size_t i = 1; i < log.size(); ++i) EXPECT_LE(log[i - 1].ts, log[i].ts);
  for (const auto& r : log) EXPECT_EQ(r.session_id, "sid");
  auto parsed = parse_records(s.log_text());
  ASSERT_EQ(parsed.size(), log.size());
  for (std::size_t i = 0; i < log.size(); ++i) EXPECT_EQ(parsed[i].payload, log[i].payload);
  for (const auto& h : s.history()) {
    ASSERT_TRUE(h.answered_at);
    EXPECT_LE(h.shown_at, *h.answered_at);
  }
}

TEST(Session, CachedSpaceGivesSameSession) {
  auto dir = std::filesystem::temp_directory_path() / "gim-session-cache";
  std::filesystem::remove_all(dir);
  auto task = data_task("small");
  SessionConfig cached = with_salt(4);
  cached.cache_dir = dir;
  Session a(task, cached, "t", logical_clock());
  EXPECT_TRUE(std::filesystem::exists(dir / "small-L5.space"));
  Session b(task, cached, "t", logical_clock());
  Session c(task, with_salt(4), "t", logical_clock());
  EXPECT_EQ(a.log_text(), b.log_text());
  EXPECT_EQ(a.log_text(), c.log_text());
  std::filesystem::remove_all(dir);
}

TEST(Session, ObservationalEquivalenceModeFoldsTarget) {
  auto task = corpus_task("freqbigram");
  SessionConfig cfg = with_salt(0);
  cfg.oe = true;
  Session s(task, cfg, "t", logical_clock());
  EXPECT_LT(s.space_counts().matching_all, 11447u);
  EXPECT_TRUE(satisfies_all(*s.current(), s.predicates().items(), s.vocab()));
  // With one example the target behaves like input.takeRight(2), which
  // represents it, so it is never shown.
  auto st = s.submit_feedback({Predicate::affix({"zip(input.tail)", "map(p => p._1.toString + p._2)", "groupBy(x => x)"}),
                               Predicate::retain({"maxBy(_._2)", "_1"})});
  EXPECT_EQ(st, SessionStatus::Exhausted);
  // Folded programs are not expanded, so the target is not even reachable.
  auto tree = build_tree(task.vocabulary, 6, true, {task.initial_examples[0].input});
  auto node = tree.find(*task.target);
  EXPECT_TRUE(!node || !tree.selectable(*node));
}
