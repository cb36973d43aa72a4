#pragma once

// Vocabulary and task files. The schema is documented in docs/formats.md.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gim/builtins.hpp"
#include "gim/interpreter.hpp"
#include "gim/program.hpp"
#include "gim/vocabulary.hpp"

namespace gim {

using json = nlohmann::json;

inline constexpr int kFormatVersion = 1;

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// Values <-> JSON. Str and Char are JSON strings, lists arrays, pairs
// two-element arrays, maps arrays of [key, value] arrays. Decoding is guided
// by the expected type.

inline json value_to_json(const Value& v) {
  using K = Value::Kind;
  switch (v.kind()) {
    case K::Str: return v.str_utf8();
    case K::Int: return v.as_int();
    case K::Char: return to_utf8(std::u32string(1, v.as_char()));
    case K::Bool: return v.as_bool();
    case K::List: {
      json a = json::array();
      for (const auto& e : v.items()) a.push_back(value_to_json(e));
      return a;
    }
    case K::Pair: return json::array({value_to_json(v.first()), value_to_json(v.second())});
    case K::Map: {
      json a = json::array();
      for (const auto& [k, val] : v.entries()) a.push_back(json::array({value_to_json(k), value_to_json(val)}));
      return a;
    }
    case K::Error: return json{{"error", to_string(v.error_kind())}};
  }
  return nullptr;
}

inline Value value_from_json(const json& j, const SemType& t, const std::string& path = "value") {
  using TK = SemType::Kind;
  auto fail = [&](const std::string& msg) -> Value { throw SchemaError(path, msg + " (expected " + to_string(t) + ")"); };
  switch (t.kind) {
    case TK::Str:
      if (!j.is_string()) return fail("not a string");
      return Value::str(j.get<std::string>());
    case TK::Int:
      if (!j.is_number_integer()) return fail("not an integer");
      return Value::integer(j.get<std::int64_t>());
    case TK::Char: {
      if (!j.is_string()) return fail("not a character string");
      auto s = from_utf8(j.get<std::string>());
      if (s.size() != 1) return fail("character must be exactly one code point");
      return Value::character(s[0]);
    }
    case TK::Bool:
      if (!j.is_boolean()) return fail("not a boolean");
      return Value::boolean(j.get<bool>());
    case TK::List: {
      if (!j.is_array()) return fail("not an array");
      std::vector<Value> items;
      for (std::size_t i = 0; i < j.size(); ++i) {
        items.push_back(value_from_json(j[i], t.args[0], path + "[" + std::to_string(i) + "]"));
      }
      return Value::list(std::move(items), t.args[0]);
    }
    case TK::Pair:
      if (!j.is_array() || j.size() != 2) return fail("not a two-element array");
      return Value::pair(value_from_json(j[0], t.args[0], path + "[0]"), value_from_json(j[1], t.args[1], path + "[1]"));
    case TK::Map: {
      if (!j.is_array()) return fail("not an array of entries");
      std::vector<std::pair<Value, Value>> entries;
      for (std::size_t i = 0; i < j.size(); ++i) {
        const auto& e = j[i];
        std::string p = path + "[" + std::to_string(i) + "]";
        if (!e.is_array() || e.size() != 2) throw SchemaError(p, "map entry must be [key, value]");
        entries.emplace_back(value_from_json(e[0], t.args[0], p + "[0]"), value_from_json(e[1], t.args[1], p + "[1]"));
      }
      return Value::map(std::move(entries), t.args[0], t.args[1]);
    }
    default:
      return fail("type is not concrete");
  }
}

// ---------------------------------------------------------------------------
// Vocabulary files

namespace loader_detail {

inline const json& field(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) throw SchemaError(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(path + "." + key, "missing field");
  return *it;
}

inline std::string string_field(const json& obj, const char* key, const std::string& path) {
  const json& f = field(obj, key, path);
  if (!f.is_string()) throw SchemaError(path + "." + key, "expected a string");
  return f.get<std::string>();
}

inline SemType type_field(const json& obj, const char* key, const std::string& path) {
  try {
    return parse_type(string_field(obj, key, path));
  } catch (const TypeSyntaxError& e) {
    throw SchemaError(path + "." + key, e.what());
  }
}

inline Arg parse_arg(const json& j, const std::vector<std::string>& lambda_ids, const std::string& path) {
  if (j.is_number_integer()) return Value::integer(j.get<std::int64_t>());
  if (j.is_string()) return Value::str(j.get<std::string>());
  if (j.is_boolean()) return Value::boolean(j.get<bool>());
  if (j.is_object() && j.size() == 1) {
    if (j.contains("lambda")) {
      std::string id = string_field(j, "lambda", path);
      auto it = std::find(lambda_ids.begin(), lambda_ids.end(), id);
      if (it == lambda_ids.end()) throw SchemaError(path + ".lambda", "unknown lambda_id '" + id + "'");
      return LambdaRef{static_cast<std::size_t>(it - lambda_ids.begin())};
    }
    if (j.contains("char")) {
      auto s = from_utf8(string_field(j, "char", path));
      if (s.size() != 1) throw SchemaError(path + ".char", "expected exactly one character");
      return Value::character(s[0]);
    }
    if (j.contains("str")) return Value::str(string_field(j, "str", path));
  }
  throw SchemaError(path, "unsupported argument form");
}

inline std::vector<Arg> parse_args(const json& obj, const std::vector<std::string>& lambda_ids,
                                   const std::string& path) {
  std::vector<Arg> out;
  auto it = obj.find("args");
  if (it == obj.end()) return out;
  if (!it->is_array()) throw SchemaError(path + ".args", "expected an array");
  for (std::size_t i = 0; i < it->size(); ++i) {
    out.push_back(parse_arg((*it)[i], lambda_ids, path + ".args[" + std::to_string(i) + "]"));
  }
  return out;
}

template <typename Fn>
void check_signature(const BuiltinSpec<Fn>& spec, const std::vector<Arg>& args, const std::string& path) {
  for (auto sig : spec.signatures) {
    if (args_fit(sig, args)) return;
  }
  throw SchemaError(path + ".args", "arguments do not fit builtin '" + std::string(spec.name) + "'");
}

inline bool contains_kind(const SemType& t, SemType::Kind k) {
  if (t.kind == k) return true;
  return std::any_of(t.args.begin(), t.args.end(), [&](const SemType& a) { return contains_kind(a, k); });
}

}  // namespace loader_detail

inline Vocabulary load_vocabulary_json(const json& doc) {
  using namespace loader_detail;
  const std::string root = "vocabulary";
  if (!doc.is_object()) throw SchemaError(root, "expected an object");
  const json& ver = field(doc, "format_version", root);
  if (!ver.is_number_integer() || ver.get<int>() != kFormatVersion) {
    throw SchemaError(root + ".format_version", "unsupported format version");
  }
  std::string name = string_field(doc, "name", root);
  SemType input_type = type_field(doc, "input_type", root);
  if (!is_concrete(input_type)) throw SchemaError(root + ".input_type", "must be a concrete type");

  std::vector<std::string> lambda_ids;
  const json* lambdas_json = doc.contains("lambdas") ? &doc["lambdas"] : nullptr;
  if (lambdas_json && !lambdas_json->is_array()) throw SchemaError(root + ".lambdas", "expected an array");
  if (lambdas_json) {
    for (std::size_t i = 0; i < lambdas_json->size(); ++i) {
      std::string p = root + ".lambdas[" + std::to_string(i) + "]";
      std::string id = string_field((*lambdas_json)[i], "id", p);
      if (std::find(lambda_ids.begin(), lambda_ids.end(), id) != lambda_ids.end()) {
        throw SchemaError(p + ".id", "duplicate lambda id '" + id + "'");
      }
      lambda_ids.push_back(id);
    }
  }

  std::vector<LambdaDef> lambdas;
  for (std::size_t i = 0; i < lambda_ids.size(); ++i) {
    const json& lj = (*lambdas_json)[i];
    std::string p = root + ".lambdas[" + std::to_string(i) + "]";
    LambdaDef def;
    def.id = lambda_ids[i];
    def.builtin = string_field(lj, "builtin", p);
    auto idx = find_builtin(lambda_catalog(), def.builtin);
    if (!idx) throw UnknownBuiltin(def.builtin);
    def.builtin_index = *idx;
    def.args = parse_args(lj, lambda_ids, p);
    check_signature(lambda_catalog()[*idx], def.args, p);
    lambdas.push_back(std::move(def));
  }

  // Lambdas may reference each other; reject cycles.
  std::vector<int> state(lambdas.size(), 0);
  auto visit = [&](auto&& self, std::size_t i) -> void {
    if (state[i] == 2) return;
    if (state[i] == 1) throw SchemaError(root + ".lambdas", "cyclic lambda reference through '" + lambdas[i].id + "'");
    state[i] = 1;
    for (const auto& a : lambdas[i].args) {
      if (const auto* r = std::get_if<LambdaRef>(&a)) self(self, r->index);
    }
    state[i] = 2;
  };
  for (std::size_t i = 0; i < lambdas.size(); ++i) visit(visit, i);

  const json& letters_json = field(doc, "letters", root);
  if (!letters_json.is_array() || letters_json.empty()) {
    throw SchemaError(root + ".letters", "expected a non-empty array");
  }
  std::vector<MethodDescriptor> letters;
  for (std::size_t i = 0; i < letters_json.size(); ++i) {
    const json& lj = letters_json[i];
    std::string p = root + ".letters[" + std::to_string(i) + "]";
    MethodDescriptor m;
    m.token_id = string_field(lj, "token_id", p);
    for (const auto& prev : letters) {
      if (prev.token_id == m.token_id) throw DuplicateToken(m.token_id);
    }
    m.display_text = lj.contains("display") ? string_field(lj, "display", p) : m.token_id;
    if (m.display_text.empty()) throw SchemaError(p + ".display", "must not be empty");
    m.receiver_pattern = type_field(lj, "receiver", p);
    m.return_rule = type_field(lj, "returns", p);
    if (contains_kind(m.receiver_pattern, SemType::Kind::Self)) {
      throw SchemaError(p + ".receiver", "Self is only allowed in return types");
    }
    if (contains_kind(m.return_rule, SemType::Kind::Seq)) {
      throw SchemaError(p + ".returns", "Seq[...] is only allowed in receiver patterns");
    }
    std::array<bool, 26> recv_vars{}, ret_vars{};
    collect_vars(m.receiver_pattern, recv_vars);
    collect_vars(m.return_rule, ret_vars);
    for (std::size_t k = 0; k < 26; ++k) {
      if (ret_vars[k] && !recv_vars[k]) {
        throw SchemaError(p + ".returns", std::string("type variable ") + static_cast<char>('A' + k) +
                                              " is not bound by the receiver pattern");
      }
    }
    m.builtin_op = string_field(lj, "builtin", p);
    auto idx = find_builtin(letter_catalog(), m.builtin_op);
    if (!idx) throw UnknownBuiltin(m.builtin_op);
    m.builtin_index = *idx;
    m.bound_args = parse_args(lj, lambda_ids, p);
    check_signature(letter_catalog()[*idx], m.bound_args, p);
    letters.push_back(std::move(m));
  }
  return Vocabulary(std::move(name), std::move(input_type), std::move(letters), std::move(lambdas));
}

/// Parses and validates a vocabulary document.
inline Vocabulary load_vocabulary(std::string_view doc) {
  json j;
  try {
    j = json::parse(doc);
  } catch (const json::parse_error& e) {
    throw SchemaError("vocabulary", e.what());
  }
  return load_vocabulary_json(j);
}

// ---------------------------------------------------------------------------
// Tasks

struct Example {
  Value input;
  Value output;
};

struct TaskDefinition {
  std::string task_id;
  std::string description;
  std::string domain;
  bool study_task = false;
  std::shared_ptr<const Vocabulary> vocabulary;
  SemType output_type;
  std::vector<Example> initial_examples;
  std::optional<Program> target;
  std::size_t max_length = 0;
  std::optional<std::string> banned_token;  // letter used for examples-insufficiency demos
};

inline TaskDefinition load_task_json(const json& doc, std::shared_ptr<const Vocabulary> vocab) {
  using namespace loader_detail;
  const std::string root = "task";
  const json& ver = field(doc, "format_version", root);
  if (!ver.is_number_integer() || ver.get<int>() != kFormatVersion) {
    throw SchemaError(root + ".format_version", "unsupported format version");
  }
  TaskDefinition t;
  t.task_id = string_field(doc, "task_id", root);
  t.description = doc.value("description", "");
  t.domain = doc.value("domain", "");
  t.study_task = doc.value("study_task", false);
  t.vocabulary = std::move(vocab);
  t.output_type = type_field(doc, "output_type", root);
  if (!is_concrete(t.output_type)) throw SchemaError(root + ".output_type", "must be a concrete type");

  const json& ex = field(doc, "initial_examples", root);
  if (!ex.is_array()) throw SchemaError(root + ".initial_examples", "expected an array");
  for (std::size_t i = 0; i < ex.size(); ++i) {
    std::string p = root + ".initial_examples[" + std::to_string(i) + "]";
    t.initial_examples.push_back({value_from_json(field(ex[i], "input", p), t.vocabulary->input_type(), p + ".input"),
                                  value_from_json(field(ex[i], "output", p), t.output_type, p + ".output")});
  }

  if (doc.contains("target") && !doc["target"].is_null()) {
    std::string text = string_field(doc, "target", root);
    try {
      t.target = parse_program(text, *t.vocabulary);
    } catch (const ParseError& e) {
      throw SchemaError(root + ".target", e.what());
    }
  }
  const json& ml = field(doc, "max_length", root);
  if (!ml.is_number_unsigned()) throw SchemaError(root + ".max_length", "expected a non-negative integer");
  t.max_length = ml.get<std::size_t>();
  if (doc.contains("banned_token")) t.banned_token = string_field(doc, "banned_token", root);

  if (t.target) {
    auto ty = type_of(*t.target, *t.vocabulary);
    if (!ty.ok()) {
      throw SchemaError(root + ".target", "ill-typed at token " + std::to_string(ty.error_index));
    }
    if (!(*ty.type == t.output_type)) {
      throw SchemaError(root + ".target", "target type " + to_string(*ty.type) + " differs from output_type");
    }
    if (t.max_length < t.target->length()) throw SchemaError(root + ".max_length", "shorter than the target");
    for (std::size_t i = 0; i < t.initial_examples.size(); ++i) {
      const auto& e = t.initial_examples[i];
      if (!(evaluate(*t.target, e.input, *t.vocabulary) == e.output)) {
        throw SchemaError(root + ".initial_examples[" + std::to_string(i) + "]", "not satisfied by the target");
      }
    }
  }
  if (t.banned_token) t.vocabulary->require(*t.banned_token);
  return t;
}

/// Loads a task file; its "vocabulary" field names a vocabulary file relative
/// to the task file.
inline TaskDefinition load_task_file(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw SchemaError(path.string(), e.what());
  }
  std::string vocab_file = loader_detail::string_field(doc, "vocabulary", "task");
  auto vocab = std::make_shared<const Vocabulary>(load_vocabulary(read_file(path.parent_path() / vocab_file)));
  return load_task_json(doc, std::move(vocab));
}

/// All `*.task.json` files in a directory, ordered by file name.
inline std::vector<std::filesystem::path> task_files(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    auto name = entry.path().filename().string();
    if (entry.is_regular_file() && name.size() > 10 && name.ends_with(".task.json")) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline std::vector<TaskDefinition> load_corpus(const std::filesystem::path& dir) {
  std::vector<TaskDefinition> out;
  for (const auto& f : task_files(dir)) out.push_back(load_task_file(f));
  return out;
}

inline TaskDefinition find_task(const std::filesystem::path& dir, const std::string& task_id) {
  auto direct = dir / (task_id + ".task.json");
  if (std::filesystem::exists(direct)) return load_task_file(direct);
  for (const auto& f : task_files(dir)) {
    auto t = load_task_file(f);
    if (t.task_id == task_id) return t;
  }
  throw UnknownTask(task_id);
}

}  // namespace gim
