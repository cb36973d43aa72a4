#pragma once

// Semantic types of the pipeline DSL and the receiver-pattern language used by
// vocabulary letters.
//
// Concrete types:   Str | Int | Char | Bool | List[T] | (A,B) | Map[K,V]
// Pattern-only:     single upper-case letter (type variable), Seq[T]
// Return-only:      Self (the matched receiver type)
//
// Seq[T] matches any iterable receiver: Str (T := Char), List[T], and
// Map[K,V] (T := (K,V)).

#include <array>
#include <cctype>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gim/errors.hpp"

namespace gim {

struct SemType {
  enum class Kind : unsigned char { Str, Int, Char, Bool, List, Pair, Map, Var, Seq, Self };

  Kind kind = Kind::Str;
  std::vector<SemType> args;
  char var = 0;

  static SemType str() { return {Kind::Str, {}, 0}; }
  static SemType integer() { return {Kind::Int, {}, 0}; }
  static SemType character() { return {Kind::Char, {}, 0}; }
  static SemType boolean() { return {Kind::Bool, {}, 0}; }
  static SemType list(SemType elem) { return {Kind::List, {std::move(elem)}, 0}; }
  static SemType pair(SemType a, SemType b) { return {Kind::Pair, {std::move(a), std::move(b)}, 0}; }
  static SemType map(SemType k, SemType v) { return {Kind::Map, {std::move(k), std::move(v)}, 0}; }
  static SemType variable(char name) { return {Kind::Var, {}, name}; }
  static SemType seq(SemType elem) { return {Kind::Seq, {std::move(elem)}, 0}; }
  static SemType self() { return {Kind::Self, {}, 0}; }

  bool is_collection() const {
    return kind == Kind::Str || kind == Kind::List || kind == Kind::Map;
  }

  friend bool operator==(const SemType&, const SemType&) = default;
};

inline bool is_concrete(const SemType& t) {
  switch (t.kind) {
    case SemType::Kind::Var:
    case SemType::Kind::Seq:
    case SemType::Kind::Self:
      return false;
    default:
      for (const auto& a : t.args) {
        if (!is_concrete(a)) return false;
      }
      return true;
  }
}

inline std::string to_string(const SemType& t) {
  using K = SemType::Kind;
  switch (t.kind) {
    case K::Str: return "Str";
    case K::Int: return "Int";
    case K::Char: return "Char";
    case K::Bool: return "Bool";
    case K::List: return "List[" + to_string(t.args[0]) + "]";
    case K::Pair: return "(" + to_string(t.args[0]) + "," + to_string(t.args[1]) + ")";
    case K::Map: return "Map[" + to_string(t.args[0]) + "," + to_string(t.args[1]) + "]";
    case K::Var: return std::string(1, t.var);
    case K::Seq: return "Seq[" + to_string(t.args[0]) + "]";
    case K::Self: return "Self";
  }
  return "?";
}

/// Element type of a concrete collection type (Char for Str, (K,V) for maps).
inline SemType element_type(const SemType& t) {
  switch (t.kind) {
    case SemType::Kind::Str: return SemType::character();
    case SemType::Kind::List: return t.args[0];
    case SemType::Kind::Map: return SemType::pair(t.args[0], t.args[1]);
    default: throw TypeMismatch("not a collection type: " + to_string(t));
  }
}

namespace detail {

class TypeParser {
 public:
  explicit TypeParser(std::string_view text) : text_(text) {}

  SemType parse_all() {
    SemType t = parse();
    skip_ws();
    if (pos_ != text_.size()) fail("trailing characters");
    return t;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw TypeSyntaxError("bad type '" + std::string(text_) + "' at " +
                          std::to_string(pos_) + ": " + msg);
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  void expect(char c) {
    skip_ws();
    if (pos_ >= text_.size() || text_[pos_] != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  std::string ident() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < text_.size() && std::isalpha(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (start == pos_) fail("expected type name");
    return std::string(text_.substr(start, pos_ - start));
  }

  SemType parse() {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == '(') {
      ++pos_;
      SemType a = parse();
      expect(',');
      SemType b = parse();
      expect(')');
      return SemType::pair(std::move(a), std::move(b));
    }
    std::string name = ident();
    if (name == "Str" || name == "String") return SemType::str();
    if (name == "Int") return SemType::integer();
    if (name == "Char") return SemType::character();
    if (name == "Bool" || name == "Boolean") return SemType::boolean();
    if (name == "Self") return SemType::self();
    if (name == "List" || name == "Seq") {
      expect('[');
      SemType e = parse();
      expect(']');
      return name == "List" ? SemType::list(std::move(e)) : SemType::seq(std::move(e));
    }
    if (name == "Map") {
      expect('[');
      SemType k = parse();
      expect(',');
      SemType v = parse();
      expect(']');
      return SemType::map(std::move(k), std::move(v));
    }
    if (name.size() == 1 && std::isupper(static_cast<unsigned char>(name[0]))) {
      return SemType::variable(name[0]);
    }
    fail("unknown type name '" + name + "'");
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline SemType parse_type(std::string_view text) { return detail::TypeParser(text).parse_all(); }

/// Type-variable bindings produced by matching a receiver pattern.
using Bindings = std::array<std::optional<SemType>, 26>;

/// Matches concrete type `t` against `pattern`, extending `b`.
inline bool match_type(const SemType& pattern, const SemType& t, Bindings& b) {
  using K = SemType::Kind;
  switch (pattern.kind) {
    case K::Var: {
      auto& slot = b[static_cast<std::size_t>(pattern.var - 'A')];
      if (slot) return *slot == t;
      slot = t;
      return true;
    }
    case K::Seq:
      if (!t.is_collection()) return false;
      return match_type(pattern.args[0], element_type(t), b);
    case K::Self:
      return false;
    default:
      if (pattern.kind != t.kind || pattern.args.size() != t.args.size()) return false;
      for (std::size_t i = 0; i < pattern.args.size(); ++i) {
        if (!match_type(pattern.args[i], t.args[i], b)) return false;
      }
      return true;
  }
}

inline bool matches(const SemType& pattern, const SemType& t) {
  Bindings b{};
  return match_type(pattern, t, b);
}

/// Substitutes bindings and Self into a return template.
inline SemType instantiate(const SemType& tmpl, const Bindings& b, const SemType& self) {
  using K = SemType::Kind;
  switch (tmpl.kind) {
    case K::Var: {
      const auto& slot = b[static_cast<std::size_t>(tmpl.var - 'A')];
      if (!slot) throw TypeMismatch(std::string("unbound type variable ") + tmpl.var);
      return *slot;
    }
    case K::Self:
      return self;
    case K::Seq:
      throw TypeMismatch("Seq[...] is not allowed in a return type");
    default: {
      SemType out = tmpl;
      for (auto& a : out.args) a = instantiate(a, b, self);
      return out;
    }
  }
}

/// Collects the type variables mentioned in a pattern.
inline void collect_vars(const SemType& t, std::array<bool, 26>& seen) {
  if (t.kind == SemType::Kind::Var) seen[static_cast<std::size_t>(t.var - 'A')] = true;
  for (const auto& a : t.args) collect_vars(a, seen);
}

}  // namespace gim
