#include <gtest/gtest.h>

#include "oracles.hpp"
#include "support.hpp"

using namespace gim;
using namespace gt;

namespace {

bool holds(std::vector<std::string> prog, const Predicate& q) { return satisfies_syntax(prog, q); }

}  // namespace

TEST(Predicates, Remove) {
  auto q = Predicate::remove({"drop(1)", "take(2)"});
  EXPECT_FALSE(holds({"drop(1)", "take(2)"}, q));
  EXPECT_FALSE(holds({"tail", "drop(1)", "take(2)", "length"}, q));
  EXPECT_TRUE(holds({"drop(1)", "tail", "take(2)"}, q));
  EXPECT_TRUE(holds({"take(2)", "drop(1)"}, q));
  EXPECT_TRUE(holds({}, q));
}

TEST(Predicates, Retain) {
  auto q = Predicate::retain({"map(p => p._1.toString + p._2)"});
  EXPECT_TRUE(holds({"zip(input.tail)", "map(p => p._1.toString + p._2)"}, q));
  EXPECT_FALSE(holds({"zip(input.tail)"}, q));
  EXPECT_FALSE(holds({}, q));
}

TEST(Predicates, Affix) {
  auto q = Predicate::affix({"zip(input.tail)"});
  EXPECT_TRUE(holds({"zip(input.tail)"}, q));
  EXPECT_TRUE(holds({"zip(input.tail)", "length"}, q));
  EXPECT_FALSE(holds({"tail", "zip(input.tail)"}, q));
  EXPECT_FALSE(holds({}, q));
  EXPECT_TRUE(holds({}, Predicate::affix({})));
}

TEST(Predicates, AffixImpliesRetain) {
  auto task = data_task("small");
  auto all = all_wellformed(*task.vocabulary, 4);
  PredicateSampler sampler(*task.vocabulary, all, 7);
  for (int i = 0; i < 200; ++i) {
    auto seq = sampler.seq(1, 3);
    for (const auto& p : all) {
      if (holds(p.tokens, Predicate::affix(seq))) {
        ASSERT_TRUE(holds(p.tokens, Predicate::retain(seq)));
      }
    }
  }
}

TEST(Predicates, SyntaxMatchesStringSearch) {
  // Independent check: join tokens with a separator that cannot occur in a
  // token and search the joined text.
  auto task = data_task("small");
  auto all = all_wellformed(*task.vocabulary, 5);
  PredicateSampler sampler(*task.vocabulary, all, 11);
  auto join = [](const std::vector<std::string>& ts) {
    std::string s = "\x1f";
    for (const auto& t : ts) s += t + "\x1f";
    return s;
  };
  for (int i = 0; i < 300; ++i) {
    auto seq = sampler.seq(1, 3);
    const auto& p = all[sampler.pick(all.size())];
    bool found = join(p.tokens).find(join(seq)) != std::string::npos;
    bool prefix = join(p.tokens).starts_with(join(seq));
    EXPECT_EQ(holds(p.tokens, Predicate::remove(seq)), !found);
    EXPECT_EQ(holds(p.tokens, Predicate::retain(seq)), found);
    EXPECT_EQ(holds(p.tokens, Predicate::affix(seq)), prefix);
  }
}

TEST(Predicates, ExampleSatisfaction) {
  auto task = corpus_task("freqbigram");
  const Vocabulary& v = *task.vocabulary;
  auto q = Predicate::example(S("abdfibfcfdebdfdebdihgfkjfdebd"), S("bd"));
  EXPECT_TRUE(satisfies(P({"takeRight(2)"}), q, v));
  EXPECT_TRUE(satisfies(*task.target, q, v));
  EXPECT_FALSE(satisfies(P({"take(2)"}), q, v));
  EXPECT_FALSE(satisfies(P({"length"}), q, v));
  EXPECT_TRUE(satisfies(*task.target, Predicate::example(S("cababc"), S("ab")), v));
  EXPECT_FALSE(satisfies(P({"takeRight(2)"}), Predicate::example(S("cababc"), S("ab")), v));
}

TEST(Predicates, EmptySequencesRejected) {
  EXPECT_THROW(Predicate::remove({}), Error);
  EXPECT_THROW(Predicate::retain({}), Error);
  EXPECT_NO_THROW(Predicate::affix({}));
}

TEST(Predicates, Consistency) {
  std::vector<Predicate> ok{Predicate::remove({"take(2)"}), Predicate::retain({"tail"}), Predicate::affix({"tail"})};
  EXPECT_TRUE(check_consistency(ok).ok);

  std::vector<Predicate> retain_removed{Predicate::retain({"tail", "take(2)"}), Predicate::remove({"take(2)"})};
  auto c = check_consistency(retain_removed);
  EXPECT_FALSE(c.ok);
  EXPECT_EQ(c.first, 0u);
  EXPECT_EQ(c.second, 1u);
  EXPECT_FALSE(c.conflict.empty());

  std::vector<Predicate> affix_removed{Predicate::remove({"tail"}), Predicate::affix({"tail", "length"})};
  EXPECT_FALSE(check_consistency(affix_removed).ok);

  std::vector<Predicate> prefixes{Predicate::affix({"tail"}), Predicate::affix({"tail", "length"})};
  EXPECT_TRUE(check_consistency(prefixes).ok);
  prefixes.push_back(Predicate::affix({"length"}));
  EXPECT_FALSE(check_consistency(prefixes).ok);

  std::vector<Predicate> examples{Predicate::example(S("ab"), I(2)), Predicate::example(S("ab"), I(3))};
  EXPECT_FALSE(check_consistency(examples).ok);
  examples.back() = Predicate::example(S("abc"), I(3));
  EXPECT_TRUE(check_consistency(examples).ok);
}

TEST(Predicates, SetSemantics) {
  PredicateSet s;
  EXPECT_TRUE(s.insert(Predicate::remove({"tail"})));
  EXPECT_FALSE(s.insert(Predicate::remove({"tail"})));
  EXPECT_TRUE(s.insert(Predicate::retain({"tail"})));
  EXPECT_TRUE(s.insert(Predicate::example(S("a"), I(1))));
  EXPECT_FALSE(s.insert(Predicate::example(S("a"), I(1))));
  EXPECT_EQ(s.size(), 3u);
  EXPECT_EQ(s.examples().size(), 1u);
}

TEST(Predicates, Validation) {
  auto task = data_task("small");
  const Vocabulary& v = *task.vocabulary;
  EXPECT_THROW(validate_predicate(Predicate::remove({"nope"}), v), UnknownToken);
  EXPECT_THROW(validate_predicate(Predicate::example(I(1), I(1)), v), SchemaError);
  EXPECT_NO_THROW(validate_predicate(Predicate::example(S("ab"), I(1)), v));
  EXPECT_NO_THROW(validate_predicate(Predicate::affix({}), v));
}

TEST(Predicates, JsonRoundTrip) {
  auto task = corpus_task("freqbigram");
  const Vocabulary& v = *task.vocabulary;
  std::vector<Predicate> qs{Predicate::remove({"drop(1)", "take(2)"}), Predicate::retain({"min"}),
                            Predicate::affix({"zip(input.tail)"}), Predicate::example(S("cababc"), S("ab")),
                            Predicate::example(S("ab"), Value::pair(S("ab"), I(1)))};
  for (const auto& q : qs) EXPECT_EQ(predicate_from_json(predicate_to_json(q), v), q);
  json untyped = {{"kind", "example"}, {"input", "ab"}, {"output", "a"}};
  EXPECT_THROW(predicate_from_json(untyped, v), SchemaError);
  EXPECT_EQ(predicate_from_json(untyped, v, SemType::str()), Predicate::example(S("ab"), S("a")));
  EXPECT_THROW(predicate_from_json(json{{"kind", "remove"}, {"tokens", {"zzz"}}}, v), UnknownToken);
  EXPECT_THROW(predicate_from_json(json{{"kind", "bogus"}, {"tokens", json::array()}}, v), SchemaError);
}
