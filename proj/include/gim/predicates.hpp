#pragma once

// Feedback predicates: Example, Remove, Retain, Affix.

#include <algorithm>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "gim/interpreter.hpp"
#include "gim/loader.hpp"
#include "gim/program.hpp"

namespace gim {

enum class PredicateKind : unsigned char { Example, Remove, Retain, Affix };

inline const char* to_string(PredicateKind k) {
  switch (k) {
    case PredicateKind::Example: return "example";
    case PredicateKind::Remove: return "remove";
    case PredicateKind::Retain: return "retain";
    case PredicateKind::Affix: return "affix";
  }
  return "?";
}

struct Predicate {
  PredicateKind kind = PredicateKind::Affix;
  std::vector<std::string> tokens;  // Remove, Retain, Affix
  Value input;                      // Example
  Value output;                     // Example

  static Predicate example(Value in, Value out) {
    return {PredicateKind::Example, {}, std::move(in), std::move(out)};
  }
  static Predicate remove(std::vector<std::string> seq) {
    if (seq.empty()) throw Error("Remove needs a non-empty token sequence");
    return {PredicateKind::Remove, std::move(seq), {}, {}};
  }
  static Predicate retain(std::vector<std::string> seq) {
    if (seq.empty()) throw Error("Retain needs a non-empty token sequence");
    return {PredicateKind::Retain, std::move(seq), {}, {}};
  }
  static Predicate affix(std::vector<std::string> prefix) {
    return {PredicateKind::Affix, std::move(prefix), {}, {}};
  }

  bool is_syntactic() const { return kind != PredicateKind::Example; }
  /// Remove and Affix can be applied to the enumeration tree directly.
  bool is_prunable() const { return kind == PredicateKind::Remove || kind == PredicateKind::Affix; }

  friend bool operator==(const Predicate& a, const Predicate& b) {
    if (a.kind != b.kind) return false;
    if (a.kind == PredicateKind::Example) return a.input == b.input && a.output == b.output;
    return a.tokens == b.tokens;
  }
};

/// True if `needle` occurs in `hay` as a contiguous run.
template <typename T>
bool occurs_contiguously(std::span<const T> hay, std::span<const T> needle) {
  if (needle.empty()) return true;
  if (needle.size() > hay.size()) return false;
  return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
}

template <typename T>
bool starts_with(std::span<const T> seq, std::span<const T> prefix) {
  return prefix.size() <= seq.size() && std::equal(prefix.begin(), prefix.end(), seq.begin());
}

/// Syntactic satisfaction only; Example predicates need an evaluator.
inline bool satisfies_syntax(std::span<const std::string> tokens, const Predicate& q) {
  std::span<const std::string> seq(q.tokens);
  switch (q.kind) {
    case PredicateKind::Remove: return !occurs_contiguously(tokens, seq);
    case PredicateKind::Retain: return occurs_contiguously(tokens, seq);
    case PredicateKind::Affix: return starts_with(tokens, seq);
    case PredicateKind::Example: break;
  }
  throw Error("satisfies_syntax called on an Example predicate");
}

inline bool satisfies(const Program& p, const Predicate& q, const Vocabulary& v, const EvalLimits& lim = {}) {
  if (q.kind == PredicateKind::Example) {
    Value out = evaluate(p, q.input, v, lim);
    return !out.is_error() && out == q.output;
  }
  return satisfies_syntax(p.tokens, q);
}

inline bool satisfies_all(const Program& p, std::span<const Predicate> qs, const Vocabulary& v,
                          const EvalLimits& lim = {}) {
  return std::all_of(qs.begin(), qs.end(), [&](const Predicate& q) { return satisfies(p, q, v, lim); });
}

/// Checks that tokens exist and Example inputs have the vocabulary's input type.
inline void validate_predicate(const Predicate& q, const Vocabulary& v) {
  if (q.kind == PredicateKind::Example) {
    if (q.input.is_error() || q.output.is_error()) throw SchemaError("predicate", "examples cannot hold error values");
    if (!type_check(q.input, v.input_type())) {
      throw SchemaError("predicate.input", "does not have type " + to_string(v.input_type()));
    }
    return;
  }
  if (q.kind != PredicateKind::Affix && q.tokens.empty()) throw SchemaError("predicate.tokens", "must not be empty");
  for (const auto& t : q.tokens) v.require(t);
}

struct Consistency {
  bool ok = true;
  std::string conflict;  // empty when ok
  std::size_t first = 0, second = 0;  // indexes of the clashing predicates
};

namespace predicate_detail {

inline std::string describe(const Predicate& q) {
  std::string s = to_string(q.kind);
  s += "(";
  if (q.kind == PredicateKind::Example) {
    s += render_full(q.input) + " -> " + render_full(q.output);
  } else {
    for (std::size_t i = 0; i < q.tokens.size(); ++i) s += (i ? "," : "") + q.tokens[i];
  }
  return s + ")";
}

inline std::optional<std::string> clash(const Predicate& a, const Predicate& b) {
  using K = PredicateKind;
  auto seq = [](const Predicate& q) { return std::span<const std::string>(q.tokens); };
  if (a.kind == K::Retain && b.kind == K::Remove && occurs_contiguously(seq(a), seq(b))) {
    return describe(a) + " contains " + describe(b);
  }
  if (a.kind == K::Affix && b.kind == K::Remove && occurs_contiguously(seq(a), seq(b))) {
    return describe(a) + " contains " + describe(b);
  }
  if (a.kind == K::Affix && b.kind == K::Affix && !starts_with(seq(a), seq(b)) && !starts_with(seq(b), seq(a))) {
    return describe(a) + " and " + describe(b) + " are incompatible prefixes";
  }
  if (a.kind == K::Example && b.kind == K::Example && a.input == b.input && !(a.output == b.output)) {
    return "examples give different outputs for input " + render_full(a.input);
  }
  return std::nullopt;
}

}  // namespace predicate_detail

/// Flags contradictions that are decidable without search. A consistent set
/// may still leave no program.
inline Consistency check_consistency(std::span<const Predicate> preds) {
  for (std::size_t i = 0; i < preds.size(); ++i) {
    for (std::size_t j = 0; j < preds.size(); ++j) {
      if (i == j) continue;
      if (auto msg = predicate_detail::clash(preds[i], preds[j])) return {false, *msg, i, j};
    }
  }
  return {};
}

/// Predicates with set semantics: inserting a duplicate is a no-op.
class PredicateSet {
 public:
  bool insert(Predicate q) {
    if (contains(q)) return false;
    items_.push_back(std::move(q));
    return true;
  }
  bool contains(const Predicate& q) const { return std::find(items_.begin(), items_.end(), q) != items_.end(); }
  const std::vector<Predicate>& items() const { return items_; }
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

  std::vector<Predicate> examples() const {
    std::vector<Predicate> out;
    for (const auto& q : items_) {
      if (q.kind == PredicateKind::Example) out.push_back(q);
    }
    return out;
  }

 private:
  std::vector<Predicate> items_;
};

// ---------------------------------------------------------------------------
// Wire format: {"kind": "remove"|"retain"|"affix", "tokens": [...]} or
// {"kind": "example", "input": v, "output": v, "output_type": "T"}.

inline json predicate_to_json(const Predicate& q) {
  json j{{"kind", to_string(q.kind)}};
  if (q.kind == PredicateKind::Example) {
    j["input"] = value_to_json(q.input);
    j["output"] = value_to_json(q.output);
    j["output_type"] = to_string(principal_type(q.output));
  } else {
    j["tokens"] = q.tokens;
  }
  return j;
}

/// `default_output` types example outputs that carry no "output_type".
inline Predicate predicate_from_json(const json& j, const Vocabulary& v,
                                     const std::optional<SemType>& default_output = std::nullopt) {
  const std::string path = "predicate";
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) throw SchemaError(path + ".kind", "missing");
  std::string kind = j["kind"].get<std::string>();
  Predicate q;
  if (kind == "example") {
    if (!j.contains("input") || !j.contains("output")) throw SchemaError(path, "example needs input and output");
    SemType out_t;
    if (j.contains("output_type")) {
      if (!j["output_type"].is_string()) throw SchemaError(path + ".output_type", "expected a string");
      try {
        out_t = parse_type(j["output_type"].get<std::string>());
      } catch (const TypeSyntaxError& e) {
        throw SchemaError(path + ".output_type", e.what());
      }
      if (!is_concrete(out_t)) throw SchemaError(path + ".output_type", "must be concrete");
    } else if (default_output) {
      out_t = *default_output;
    } else {
      throw SchemaError(path + ".output_type", "missing");
    }
    q = Predicate::example(value_from_json(j["input"], v.input_type(), path + ".input"),
                           value_from_json(j["output"], out_t, path + ".output"));
  } else {
    if (!j.contains("tokens") || !j["tokens"].is_array()) throw SchemaError(path + ".tokens", "expected an array");
    std::vector<std::string> toks;
    for (const auto& t : j["tokens"]) {
      if (!t.is_string()) throw SchemaError(path + ".tokens", "expected strings");
      toks.push_back(t.get<std::string>());
    }
    if (kind == "remove" || kind == "retain") {
      if (toks.empty()) throw SchemaError(path + ".tokens", "must not be empty");
      q = kind == "remove" ? Predicate::remove(std::move(toks)) : Predicate::retain(std::move(toks));
    } else if (kind == "affix") {
      q = Predicate::affix(std::move(toks));
    } else {
      throw SchemaError(path + ".kind", "unknown predicate kind '" + kind + "'");
    }
  }
  validate_predicate(q, v);
  return q;
}

}  // namespace gim
