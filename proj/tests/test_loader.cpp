#include <gtest/gtest.h>

#include "support.hpp"

using namespace gim;
using namespace gt;

namespace {

std::string vocab_with(const std::string& lambdas, const std::string& letters) {
  return R"({"format_version":1,"name":"x","input_type":"Str","lambdas":[)" + lambdas + R"(],"letters":[)" + letters +
         "]}";
}

const std::string kTail = R"({"token_id":"tail","receiver":"Seq[A]","returns":"Self","builtin":"tail"})";

}  // namespace

TEST(Loader, FrequentBigramVocabulary) {
  auto task = corpus_task("freqbigram");
  EXPECT_EQ(task.vocabulary->size(), 19u);
  EXPECT_EQ(task.max_length, 6u);
  EXPECT_EQ(task.target->length(), 6u);
  EXPECT_EQ(task.banned_token, "min");
  ASSERT_EQ(task.initial_examples.size(), 1u);
  EXPECT_EQ(task.initial_examples[0].output, S("bd"));
}

TEST(Loader, RejectsDuplicateTokens) {
  EXPECT_THROW(load_vocabulary(vocab_with("", kTail + "," + kTail)), DuplicateToken);
}

TEST(Loader, RejectsMissingLambda) {
  std::string letter =
      R"J({"token_id":"map(f)","receiver":"List[Int]","returns":"List[Int]","builtin":"map","args":[{"lambda":"f"}]})J";
  EXPECT_THROW(load_vocabulary(vocab_with("", letter)), SchemaError);
}

TEST(Loader, RejectsUnknownBuiltin) {
  std::string letter = R"J({"token_id":"frob","receiver":"Str","returns":"Str","builtin":"frobnicate"})J";
  EXPECT_THROW(load_vocabulary(vocab_with("", letter)), UnknownBuiltin);
}

TEST(Loader, RejectsMalformedDocuments) {
  EXPECT_THROW(load_vocabulary("{"), SchemaError);
  EXPECT_THROW(load_vocabulary(R"({"format_version":2,"name":"x","input_type":"Str","letters":[]})"), SchemaError);
  EXPECT_THROW(load_vocabulary(R"({"format_version":1,"name":"x","input_type":"List[A]","letters":[]})"), SchemaError);
  std::string bad_args = R"({"token_id":"take","receiver":"Str","returns":"Self","builtin":"take","args":["x"]})";
  EXPECT_THROW(load_vocabulary(vocab_with("", bad_args)), SchemaError);
}

TEST(Loader, RejectsBadTasks) {
  auto vocab = std::make_shared<const Vocabulary>(load_vocabulary(vocab_with("", kTail)));
  json ok = json::parse(R"({"format_version":1,"task_id":"t","vocabulary":"v","output_type":"Str",
    "initial_examples":[{"input":"abc","output":"bc"}],"target":"input.tail","max_length":2})");
  EXPECT_NO_THROW(load_task_json(ok, vocab));
  auto wrong_output = ok;
  wrong_output["initial_examples"][0]["output"] = "c";
  EXPECT_THROW(load_task_json(wrong_output, vocab), SchemaError);
  auto wrong_type = ok;
  wrong_type["output_type"] = "Int";
  wrong_type["initial_examples"][0]["output"] = 1;
  EXPECT_THROW(load_task_json(wrong_type, vocab), SchemaError);
  auto too_short = ok;
  too_short["max_length"] = 0;
  EXPECT_THROW(load_task_json(too_short, vocab), SchemaError);
  auto unknown = ok;
  unknown["target"] = "input.head";
  EXPECT_THROW(load_task_json(unknown, vocab), SchemaError);
  auto banned = ok;
  banned["banned_token"] = "nope";
  EXPECT_THROW(load_task_json(banned, vocab), UnknownToken);
}

TEST(Loader, UnknownTaskIsDistinct) {
  EXPECT_THROW(find_task(data_dir(), "no-such-task"), UnknownTask);
}

TEST(Loader, CorpusTargetsSatisfyTheirTasks) {
  auto corpus = load_corpus(tasks_dir());
  EXPECT_GE(corpus.size(), 14u);
  for (const auto& t : corpus) {
    SCOPED_TRACE(t.task_id);
    EXPECT_FALSE(t.initial_examples.empty());
    ASSERT_TRUE(t.target.has_value());
    EXPECT_LE(t.target->length(), t.max_length);
    auto ty = type_of(*t.target, *t.vocabulary);
    ASSERT_TRUE(ty.ok());
    EXPECT_EQ(*ty.type, t.output_type);
    for (const auto& e : t.initial_examples) EXPECT_EQ(evaluate(*t.target, e.input, *t.vocabulary), e.output);
    if (t.banned_token) {
      EXPECT_TRUE(t.vocabulary->find(*t.banned_token).has_value());
    }
    // Text round trip.
    EXPECT_EQ(parse_program(render_program(*t.target, *t.vocabulary), *t.vocabulary), *t.target);
  }
}

TEST(Loader, ValueJsonRoundTrip) {
  std::vector<std::pair<Value, std::string>> cases = {
      {S("a\"b"), "Str"},
      {I(-3), "Int"},
      {C(U'x'), "Char"},
      {B(true), "Bool"},
      {strs({"a", ""}), "List[Str]"},
      {Value::pair(S("bd"), I(4)), "(Str,Int)"},
      {Value::map({{C(U'a'), ints({1})}}, SemType::character(), parse_type("List[Int]")), "Map[Char,List[Int]]"},
  };
  for (const auto& [v, t] : cases) {
    EXPECT_EQ(value_from_json(value_to_json(v), parse_type(t)), v) << t;
  }
  EXPECT_THROW(value_from_json(json("ab"), SemType::character()), SchemaError);
  EXPECT_THROW(value_from_json(json(1), SemType::str()), SchemaError);
}
