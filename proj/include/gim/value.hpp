#pragma once

// Runtime values of the pipeline DSL, including the error element.
//
// Maps keep their entries in an explicit order. Map construction places
// entries in the iteration order of Scala's immutable hash-trie map for maps
// with more than four entries, and in insertion order otherwise, so debug
// traces read the same as the equivalent Scala REPL session.

#include <algorithm>
#include <compare>
#include <cstdint>
#include <memory>
#include <numeric>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "gim/errors.hpp"
#include "gim/types.hpp"

namespace gim {

enum class ErrorKind : unsigned char { TypeError, RuntimeError, Timeout };

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::TypeError: return "TypeError";
    case ErrorKind::RuntimeError: return "RuntimeError";
    case ErrorKind::Timeout: return "Timeout";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// UTF-8 <-> UTF-32

inline std::string to_utf8(std::u32string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char32_t c : s) {
    auto u = static_cast<std::uint32_t>(c);
    if (u < 0x80) {
      out.push_back(static_cast<char>(u));
    } else if (u < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (u >> 6)));
      out.push_back(static_cast<char>(0x80 | (u & 0x3F)));
    } else if (u < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (u >> 12)));
      out.push_back(static_cast<char>(0x80 | ((u >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (u & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (u >> 18)));
      out.push_back(static_cast<char>(0x80 | ((u >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((u >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (u & 0x3F)));
    }
  }
  return out;
}

inline std::u32string from_utf8(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    auto b = static_cast<unsigned char>(s[i]);
    std::uint32_t cp = 0;
    std::size_t n = 0;
    if (b < 0x80) {
      cp = b;
      n = 1;
    } else if ((b >> 5) == 0x6) {
      cp = b & 0x1F;
      n = 2;
    } else if ((b >> 4) == 0xE) {
      cp = b & 0x0F;
      n = 3;
    } else if ((b >> 3) == 0x1E) {
      cp = b & 0x07;
      n = 4;
    } else {
      throw Error("invalid UTF-8 lead byte");
    }
    if (i + n > s.size()) throw Error("truncated UTF-8 sequence");
    for (std::size_t k = 1; k < n; ++k) {
      auto c = static_cast<unsigned char>(s[i + k]);
      if ((c >> 6) != 0x2) throw Error("invalid UTF-8 continuation byte");
      cp = (cp << 6) | (c & 0x3F);
    }
    out.push_back(static_cast<char32_t>(cp));
    i += n;
  }
  return out;
}

// ---------------------------------------------------------------------------

class Value;

struct ListRep {
  std::vector<Value> items;
  SemType elem;
};

struct PairRep {
  std::shared_ptr<const Value> first;
  std::shared_ptr<const Value> second;
};

struct MapRep {
  std::vector<std::pair<Value, Value>> entries;
  SemType key;
  SemType val;
};

class Value {
 public:
  enum class Kind : unsigned char { Str, Int, Char, Bool, List, Pair, Map, Error };

  Value() : rep_(std::u32string{}) {}

  static Value str(std::u32string s) { return Value(std::move(s)); }
  static Value str(std::string_view utf8) { return Value(from_utf8(utf8)); }
  static Value integer(std::int64_t i) { return Value(i); }
  static Value character(char32_t c) { return Value(c); }
  static Value boolean(bool b) { return Value(Tag::Bool, b); }
  static Value list(std::vector<Value> items, SemType elem) {
    return Value(ListRep{std::move(items), std::move(elem)});
  }
  static Value pair(Value a, Value b) {
    return Value(PairRep{std::make_shared<const Value>(std::move(a)),
                         std::make_shared<const Value>(std::move(b))});
  }
  /// Builds a map; later duplicates overwrite earlier values in place.
  static Value map(std::vector<std::pair<Value, Value>> entries, SemType key, SemType val);
  static Value error(ErrorKind k) { return Value(k); }

  Kind kind() const { return static_cast<Kind>(rep_.index()); }
  bool is_error() const { return kind() == Kind::Error; }

  const std::u32string& as_str() const { return get<std::u32string>("Str"); }
  std::int64_t as_int() const { return get<std::int64_t>("Int"); }
  char32_t as_char() const { return get<char32_t>("Char"); }
  bool as_bool() const { return get<bool>("Bool"); }
  const std::vector<Value>& items() const { return get<ListRep>("List").items; }
  const SemType& list_elem_type() const { return get<ListRep>("List").elem; }
  const Value& first() const { return *get<PairRep>("Pair").first; }
  const Value& second() const { return *get<PairRep>("Pair").second; }
  const std::vector<std::pair<Value, Value>>& entries() const { return get<MapRep>("Map").entries; }
  const SemType& map_key_type() const { return get<MapRep>("Map").key; }
  const SemType& map_val_type() const { return get<MapRep>("Map").val; }
  ErrorKind error_kind() const { return get<ErrorKind>("Error"); }

  std::string str_utf8() const { return to_utf8(as_str()); }

  /// Number of elements when viewed as a collection (Str, List, Map).
  std::size_t size() const {
    switch (kind()) {
      case Kind::Str: return as_str().size();
      case Kind::List: return items().size();
      case Kind::Map: return entries().size();
      default: throw TypeMismatch("size of a non-collection value");
    }
  }

  /// Total node count of the value tree.
  std::size_t cells() const {
    switch (kind()) {
      case Kind::Str: return 1 + as_str().size();
      case Kind::List: {
        std::size_t n = 1;
        for (const auto& v : items()) n += v.cells();
        return n;
      }
      case Kind::Pair: return 1 + first().cells() + second().cells();
      case Kind::Map: {
        std::size_t n = 1;
        for (const auto& [k, v] : entries()) n += 1 + k.cells() + v.cells();
        return n;
      }
      default: return 1;
    }
  }

  friend bool operator==(const Value& a, const Value& b);
  friend std::strong_ordering operator<=>(const Value& a, const Value& b);

 private:
  enum class Tag { Bool };
  explicit Value(std::u32string s) : rep_(std::move(s)) {}
  explicit Value(std::int64_t i) : rep_(std::in_place_index<1>, i) {}
  explicit Value(char32_t c) : rep_(std::in_place_index<2>, c) {}
  Value(Tag, bool b) : rep_(std::in_place_index<3>, b) {}
  explicit Value(ListRep l) : rep_(std::move(l)) {}
  explicit Value(PairRep p) : rep_(std::move(p)) {}
  explicit Value(MapRep m) : rep_(std::move(m)) {}
  explicit Value(ErrorKind k) : rep_(k) {}

  template <typename T>
  const T& get(const char* want) const {
    if (const T* p = std::get_if<T>(&rep_)) return *p;
    throw TypeMismatch(std::string("value is not a ") + want);
  }

  std::variant<std::u32string, std::int64_t, char32_t, bool, ListRep, PairRep, MapRep, ErrorKind> rep_;
};

// ---------------------------------------------------------------------------
// Scala-compatible hashing (Scala 2.12 `##` and MurmurHash3)

namespace scala_hash {

inline std::uint32_t rotl(std::uint32_t x, int r) { return (x << r) | (x >> (32 - r)); }

inline std::uint32_t mix_last(std::uint32_t h, std::uint32_t k) {
  k *= 0xcc9e2d51u;
  k = rotl(k, 15);
  k *= 0x1b873593u;
  return h ^ k;
}

inline std::uint32_t mix(std::uint32_t h, std::uint32_t data) {
  h = mix_last(h, data);
  h = rotl(h, 13);
  return h * 5 + 0xe6546b64u;
}

inline std::uint32_t avalanche(std::uint32_t h) {
  h ^= h >> 16;
  h *= 0x85ebca6bu;
  h ^= h >> 13;
  h *= 0xc2b2ae35u;
  h ^= h >> 16;
  return h;
}

inline std::uint32_t finalize(std::uint32_t h, std::uint32_t len) { return avalanche(h ^ len); }

inline std::uint32_t java_string_hash(std::u32string_view s) {
  std::uint32_t h = 0;
  for (char32_t c : s) {
    auto u = static_cast<std::uint32_t>(c);
    if (u >= 0x10000) {
      u -= 0x10000;
      h = 31 * h + (0xD800 + (u >> 10));
      h = 31 * h + (0xDC00 + (u & 0x3FF));
    } else {
      h = 31 * h + u;
    }
  }
  return h;
}

constexpr std::uint32_t kProductSeed = 0xcafebabeu;
inline std::uint32_t seq_seed() { return java_string_hash(U"Seq"); }
inline std::uint32_t map_seed() { return java_string_hash(U"Map"); }

inline std::uint32_t hash(const Value& v);

inline std::uint32_t pair_hash(std::uint32_t a, std::uint32_t b) {
  std::uint32_t h = kProductSeed;
  h = mix(h, a);
  h = mix(h, b);
  return finalize(h, 2);
}

inline std::uint32_t hash(const Value& v) {
  using K = Value::Kind;
  switch (v.kind()) {
    case K::Str: return java_string_hash(v.as_str());
    case K::Int: {
      std::int64_t i = v.as_int();
      if (i >= INT32_MIN && i <= INT32_MAX) return static_cast<std::uint32_t>(i);
      auto u = static_cast<std::uint64_t>(i);
      return static_cast<std::uint32_t>(u ^ (u >> 32));
    }
    case K::Char: return static_cast<std::uint32_t>(v.as_char());
    case K::Bool: return v.as_bool() ? 1231u : 1237u;
    case K::Pair: return pair_hash(hash(v.first()), hash(v.second()));
    case K::List: {
      std::uint32_t h = seq_seed();
      std::uint32_t n = 0;
      for (const auto& e : v.items()) {
        h = mix(h, hash(e));
        ++n;
      }
      return finalize(h, n);
    }
    case K::Map: {
      std::uint32_t a = 0, b = 0, c = 1, n = 0;
      for (const auto& [k, val] : v.entries()) {
        std::uint32_t h = pair_hash(hash(k), hash(val));
        a += h;
        b ^= h;
        if (h != 0) c *= h;
        ++n;
      }
      std::uint32_t h = map_seed();
      h = mix(h, a);
      h = mix(h, b);
      h = mix_last(h, c);
      return finalize(h, n);
    }
    case K::Error: return 0;
  }
  return 0;
}

/// HashMap.improve from Scala 2.12's immutable.HashMap.
inline std::uint32_t improve(std::uint32_t h) {
  h = h + ~(h << 9);
  h = h ^ (h >> 14);
  h = h + (h << 4);
  return h ^ (h >> 10);
}

/// Sort key reproducing hash-trie iteration order (5-bit chunks, low first).
inline std::uint64_t trie_order_key(const Value& key) {
  std::uint32_t h = improve(hash(key));
  std::uint64_t out = 0;
  for (int level = 0; level < 7; ++level) out = (out << 5) | ((h >> (5 * level)) & 0x1F);
  return out;
}

}  // namespace scala_hash

// ---------------------------------------------------------------------------

inline bool operator==(const Value& a, const Value& b) {
  using K = Value::Kind;
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case K::Str: return a.as_str() == b.as_str();
    case K::Int: return a.as_int() == b.as_int();
    case K::Char: return a.as_char() == b.as_char();
    case K::Bool: return a.as_bool() == b.as_bool();
    case K::List: return a.items() == b.items();
    case K::Pair: return a.first() == b.first() && a.second() == b.second();
    case K::Map: {
      const auto& ea = a.entries();
      const auto& eb = b.entries();
      if (ea.size() != eb.size()) return false;
      for (const auto& [k, v] : ea) {
        auto it = std::find_if(eb.begin(), eb.end(), [&](const auto& e) { return e.first == k; });
        if (it == eb.end() || !(it->second == v)) return false;
      }
      return true;
    }
    case K::Error: return a.error_kind() == b.error_kind();
  }
  return false;
}

namespace detail {

inline std::vector<std::pair<Value, Value>> sorted_entries(const Value& m) {
  auto e = m.entries();
  std::sort(e.begin(), e.end(), [](const auto& x, const auto& y) { return (x.first <=> y.first) < 0; });
  return e;
}

}  // namespace detail

/// Total order: by kind first, then structurally. Maps compare by their
/// key-sorted entries so the order agrees with (order-insensitive) equality.
inline std::strong_ordering operator<=>(const Value& a, const Value& b) {
  using K = Value::Kind;
  if (a.kind() != b.kind()) return a.kind() <=> b.kind();
  switch (a.kind()) {
    case K::Str: return a.as_str().compare(b.as_str()) <=> 0;
    case K::Int: return a.as_int() <=> b.as_int();
    case K::Char: return a.as_char() <=> b.as_char();
    case K::Bool: return a.as_bool() <=> b.as_bool();
    case K::List:
      return std::lexicographical_compare_three_way(a.items().begin(), a.items().end(),
                                                    b.items().begin(), b.items().end());
    case K::Pair: {
      if (auto c = a.first() <=> b.first(); c != 0) return c;
      return a.second() <=> b.second();
    }
    case K::Map: {
      auto ea = detail::sorted_entries(a);
      auto eb = detail::sorted_entries(b);
      for (std::size_t i = 0; i < std::min(ea.size(), eb.size()); ++i) {
        if (auto c = ea[i].first <=> eb[i].first; c != 0) return c;
        if (auto c = ea[i].second <=> eb[i].second; c != 0) return c;
      }
      return ea.size() <=> eb.size();
    }
    case K::Error: return a.error_kind() <=> b.error_kind();
  }
  return std::strong_ordering::equal;
}

inline Value Value::map(std::vector<std::pair<Value, Value>> entries, SemType key, SemType val) {
  std::vector<std::pair<Value, Value>> unique;
  unique.reserve(entries.size());
  for (auto& e : entries) {
    auto it = std::find_if(unique.begin(), unique.end(), [&](const auto& u) { return u.first == e.first; });
    if (it == unique.end()) {
      unique.push_back(std::move(e));
    } else {
      it->second = std::move(e.second);
    }
  }
  if (unique.size() > 4) {
    std::vector<std::uint64_t> keys(unique.size());
    for (std::size_t i = 0; i < unique.size(); ++i) keys[i] = scala_hash::trie_order_key(unique[i].first);
    std::vector<std::size_t> order(unique.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return keys[x] < keys[y]; });
    std::vector<std::pair<Value, Value>> sorted;
    sorted.reserve(unique.size());
    for (std::size_t i : order) sorted.push_back(std::move(unique[i]));
    unique = std::move(sorted);
  }
  return Value(MapRep{std::move(unique), std::move(key), std::move(val)});
}

// ---------------------------------------------------------------------------
// Typing of values

/// Principal type of a non-error value. Lists and maps carry annotated
/// element types, so empty collections still have one.
inline SemType principal_type(const Value& v) {
  using K = Value::Kind;
  switch (v.kind()) {
    case K::Str: return SemType::str();
    case K::Int: return SemType::integer();
    case K::Char: return SemType::character();
    case K::Bool: return SemType::boolean();
    case K::List: return SemType::list(v.list_elem_type());
    case K::Pair: return SemType::pair(principal_type(v.first()), principal_type(v.second()));
    case K::Map: return SemType::map(v.map_key_type(), v.map_val_type());
    case K::Error: throw TypeMismatch("error values have no type");
  }
  throw TypeMismatch("unreachable");
}

/// Deep check that `v` inhabits concrete type `t`.
inline bool type_check(const Value& v, const SemType& t) {
  using K = Value::Kind;
  using TK = SemType::Kind;
  switch (v.kind()) {
    case K::Str: return t.kind == TK::Str;
    case K::Int: return t.kind == TK::Int;
    case K::Char: return t.kind == TK::Char;
    case K::Bool: return t.kind == TK::Bool;
    case K::List:
      if (t.kind != TK::List || !(v.list_elem_type() == t.args[0])) return false;
      return std::all_of(v.items().begin(), v.items().end(),
                         [&](const Value& e) { return type_check(e, t.args[0]); });
    case K::Pair:
      return t.kind == TK::Pair && type_check(v.first(), t.args[0]) && type_check(v.second(), t.args[1]);
    case K::Map:
      if (t.kind != TK::Map || !(v.map_key_type() == t.args[0]) || !(v.map_val_type() == t.args[1])) {
        return false;
      }
      return std::all_of(v.entries().begin(), v.entries().end(), [&](const auto& e) {
        return type_check(e.first, t.args[0]) && type_check(e.second, t.args[1]);
      });
    case K::Error: return false;
  }
  return false;
}

/// Elements of a collection value: chars of a Str, items of a List, entry
/// pairs of a Map.
inline std::vector<Value> elements(const Value& v) {
  using K = Value::Kind;
  switch (v.kind()) {
    case K::Str: {
      std::vector<Value> out;
      out.reserve(v.as_str().size());
      for (char32_t c : v.as_str()) out.push_back(Value::character(c));
      return out;
    }
    case K::List: return v.items();
    case K::Map: {
      std::vector<Value> out;
      out.reserve(v.entries().size());
      for (const auto& [k, val] : v.entries()) out.push_back(Value::pair(k, val));
      return out;
    }
    default: throw TypeMismatch("value is not a collection");
  }
}

/// Builds a collection of concrete type `t` from elements (the inverse of
/// `elements`). Throws TypeMismatch if the elements do not fit.
inline Value rebuild(const SemType& t, std::vector<Value> elems) {
  using TK = SemType::Kind;
  switch (t.kind) {
    case TK::Str: {
      std::u32string s;
      s.reserve(elems.size());
      for (const auto& e : elems) {
        if (e.kind() != Value::Kind::Char) throw TypeMismatch("string element is not a Char");
        s.push_back(e.as_char());
      }
      return Value::str(std::move(s));
    }
    case TK::List: return Value::list(std::move(elems), t.args[0]);
    case TK::Map: {
      std::vector<std::pair<Value, Value>> entries;
      entries.reserve(elems.size());
      for (auto& e : elems) {
        if (e.kind() != Value::Kind::Pair) throw TypeMismatch("map element is not a pair");
        entries.emplace_back(e.first(), e.second());
      }
      return Value::map(std::move(entries), t.args[0], t.args[1]);
    }
    default: throw TypeMismatch("cannot build a collection of type " + to_string(t));
  }
}

}  // namespace gim
