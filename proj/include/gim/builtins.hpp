#pragma once

// Built-in catalog: the method implementations behind vocabulary letters and
// the semantic functions behind cataloged lambdas. Semantics follow the
// Scala standard library methods of the same name.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gim/render.hpp"
#include "gim/value.hpp"
#include "gim/vocabulary.hpp"

namespace gim {

struct EvalLimits {
  std::size_t max_steps = 100000;
  std::size_t max_value_cells = 1000000;
  std::chrono::milliseconds timeout{1000};
};

/// Thrown by builtins; the interpreter turns it into an error value.
struct EvalFailure {
  ErrorKind kind;
  std::string detail;
};

class Budget {
 public:
  explicit Budget(const EvalLimits& lim)
      : limits_(lim), start_(std::chrono::steady_clock::now()) {}

  void charge(std::size_t n = 1) {
    used_ += n;
    if (used_ > limits_.max_steps) throw EvalFailure{ErrorKind::Timeout, "step limit"};
    if ((used_ - last_clock_check_) >= 512) {
      last_clock_check_ = used_;
      check_clock();
    }
  }

  void check_clock() const {
    if (std::chrono::steady_clock::now() - start_ > limits_.timeout) {
      throw EvalFailure{ErrorKind::Timeout, "wall-clock limit"};
    }
  }

  void check_cells(const Value& v) const {
    if (v.cells() > limits_.max_value_cells) throw EvalFailure{ErrorKind::Timeout, "value size limit"};
  }

  std::size_t used() const { return used_; }
  void set_used(std::size_t n) { used_ = n; }
  const EvalLimits& limits() const { return limits_; }

 private:
  EvalLimits limits_;
  std::chrono::steady_clock::time_point start_;
  std::size_t used_ = 0;
  std::size_t last_clock_check_ = 0;
};

struct EvalContext {
  const Vocabulary& vocab;
  const Value& input;  // the original pipeline input, captured by e.g. zip(input.tail)
  Budget& budget;
};

using LetterFn = Value (*)(const Value& recv, const SemType& recv_type, const SemType& result_type,
                           std::span<const Arg> args, EvalContext& ctx);
using LambdaFn = Value (*)(const Value& x, std::span<const Arg> args, EvalContext& ctx);

/// Argument signature characters: I int, S string, C char, B bool, V any
/// constant, L lambda. A trailing '+' repeats the last kind one or more times.
template <typename Fn>
struct BuiltinSpec {
  std::string_view name;
  std::vector<std::string_view> signatures;
  Fn fn;
};

namespace builtin_detail {

[[noreturn]] inline void type_error(std::string msg) { throw EvalFailure{ErrorKind::TypeError, std::move(msg)}; }
[[noreturn]] inline void runtime_error(std::string msg) { throw EvalFailure{ErrorKind::RuntimeError, std::move(msg)}; }

inline const Value& const_arg(std::span<const Arg> args, std::size_t i) {
  if (i >= args.size() || !std::holds_alternative<Value>(args[i])) type_error("expected constant argument");
  return std::get<Value>(args[i]);
}

inline std::int64_t int_arg(std::span<const Arg> args, std::size_t i) {
  const Value& v = const_arg(args, i);
  if (v.kind() != Value::Kind::Int) type_error("expected Int argument");
  return v.as_int();
}

inline std::size_t count_arg(std::span<const Arg> args, std::size_t i) {
  std::int64_t n = int_arg(args, i);
  return n < 0 ? 0 : static_cast<std::size_t>(n);
}

inline Value call_lambda(std::size_t index, const Value& x, EvalContext& ctx);

inline Value call(std::span<const Arg> args, std::size_t i, const Value& x, EvalContext& ctx) {
  if (i >= args.size() || !std::holds_alternative<LambdaRef>(args[i])) type_error("expected lambda argument");
  return call_lambda(std::get<LambdaRef>(args[i]).index, x, ctx);
}

inline bool truthy(const Value& v) {
  if (v.kind() != Value::Kind::Bool) type_error("predicate lambda did not return Bool");
  return v.as_bool();
}

inline std::vector<Value> elems(const Value& v, EvalContext& ctx) {
  if (v.kind() != Value::Kind::Str && v.kind() != Value::Kind::List && v.kind() != Value::Kind::Map) {
    type_error("receiver is not a collection");
  }
  ctx.budget.charge(v.size());
  return elements(v);
}

inline Value build(const SemType& t, std::vector<Value> items, EvalContext& ctx) {
  ctx.budget.charge(items.size());
  try {
    return rebuild(t, std::move(items));
  } catch (const TypeMismatch& e) {
    type_error(e.what());
  }
}

inline std::vector<Value> slice(const std::vector<Value>& v, std::size_t from, std::size_t to) {
  from = std::min(from, v.size());
  to = std::clamp(to, from, v.size());
  return {v.begin() + static_cast<std::ptrdiff_t>(from), v.begin() + static_cast<std::ptrdiff_t>(to)};
}

inline const Value& require_pair(const Value& v) {
  if (v.kind() != Value::Kind::Pair) type_error("expected a pair");
  return v;
}

inline std::int64_t require_int(const Value& v) {
  if (v.kind() != Value::Kind::Int) type_error("expected Int");
  return v.as_int();
}

inline const std::u32string& require_str(const Value& v) {
  if (v.kind() != Value::Kind::Str) type_error("expected Str");
  return v.as_str();
}

inline void require_same_kind(const Value& a, const Value& b) {
  if (a.kind() != b.kind()) type_error("comparison between values of different kinds");
}

/// java.lang.String.split with a literal separator.
inline std::vector<Value> java_split(const std::u32string& s, const std::u32string& sep) {
  std::vector<Value> out;
  if (sep.empty()) {
    for (char32_t c : s) out.push_back(Value::str(std::u32string(1, c)));
    return out;
  }
  if (s.find(sep) == std::u32string::npos) {
    out.push_back(Value::str(s));
    return out;
  }
  std::size_t start = 0;
  while (true) {
    std::size_t pos = s.find(sep, start);
    if (pos == std::u32string::npos) {
      out.push_back(Value::str(s.substr(start)));
      break;
    }
    out.push_back(Value::str(s.substr(start, pos - start)));
    start = pos + sep.size();
  }
  while (!out.empty() && out.back().as_str().empty()) out.pop_back();
  return out;
}

inline std::u32string java_trim(const std::u32string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && s[b] <= U' ') ++b;
  while (e > b && s[e - 1] <= U' ') --e;
  return s.substr(b, e - b);
}

inline Value sized_rebuild_like(const Value& x, std::vector<Value> items, EvalContext& ctx) {
  return build(principal_type(x), std::move(items), ctx);
}

// --- lambda builtins -------------------------------------------------------

inline Value l_identity(const Value& x, std::span<const Arg>, EvalContext&) { return x; }
inline Value l_proj1(const Value& x, std::span<const Arg>, EvalContext&) { return require_pair(x).first(); }
inline Value l_proj2(const Value& x, std::span<const Arg>, EvalContext&) { return require_pair(x).second(); }
inline Value l_swap(const Value& x, std::span<const Arg>, EvalContext&) {
  require_pair(x);
  return Value::pair(x.second(), x.first());
}
inline Value l_pair_concat(const Value& x, std::span<const Arg>, EvalContext&) {
  require_pair(x);
  return Value::str(plain_string(x.first()) + plain_string(x.second()));
}
inline Value l_to_string(const Value& x, std::span<const Arg>, EvalContext&) { return Value::str(plain_string(x)); }
inline Value l_mk_string(const Value& x, std::span<const Arg> a, EvalContext& ctx) {
  if (x.kind() != Value::Kind::List) type_error("mkString of a non-list");
  std::string sep = a.empty() ? std::string() : to_utf8(require_str(const_arg(a, 0)));
  std::string out;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (i) out += sep;
    out += plain_string(x.items()[i]);
  }
  ctx.budget.charge(x.size());
  return Value::str(out);
}
inline Value l_length(const Value& x, std::span<const Arg>, EvalContext&) {
  if (x.kind() != Value::Kind::Str && x.kind() != Value::Kind::List && x.kind() != Value::Kind::Map) {
    type_error("length of a non-collection");
  }
  return Value::integer(static_cast<std::int64_t>(x.size()));
}
inline Value l_sorted(const Value& x, std::span<const Arg>, EvalContext& ctx) {
  auto items = elems(x, ctx);
  std::stable_sort(items.begin(), items.end(), [](const Value& a, const Value& b) { return (a <=> b) < 0; });
  return sized_rebuild_like(x, std::move(items), ctx);
}
inline Value l_sum(const Value& x, std::span<const Arg>, EvalContext& ctx) {
  std::int64_t s = 0;
  for (const auto& e : elems(x, ctx)) s += require_int(e);
  return Value::integer(s);
}
inline Value l_map_second(const Value& x, std::span<const Arg> args, EvalContext& ctx) {
  require_pair(x);
  return Value::pair(x.first(), call(args, 0, x.second(), ctx));
}
inline Value l_pair_with(const Value& x, std::span<const Arg> args, EvalContext&) {
  return Value::pair(x, const_arg(args, 0));
}
inline Value l_eq(const Value& x, std::span<const Arg> args, EvalContext&) {
  return Value::boolean(x == const_arg(args, 0));
}
inline Value l_ne(const Value& x, std::span<const Arg> args, EvalContext&) {
  return Value::boolean(!(x == const_arg(args, 0)));
}
inline Value l_gt(const Value& x, std::span<const Arg> args, EvalContext&) {
  require_same_kind(x, const_arg(args, 0));
  return Value::boolean((x <=> const_arg(args, 0)) > 0);
}
inline Value l_lt(const Value& x, std::span<const Arg> args, EvalContext&) {
  require_same_kind(x, const_arg(args, 0));
  return Value::boolean((x <=> const_arg(args, 0)) < 0);
}
inline Value l_ge(const Value& x, std::span<const Arg> args, EvalContext&) {
  require_same_kind(x, const_arg(args, 0));
  return Value::boolean((x <=> const_arg(args, 0)) >= 0);
}
inline Value l_le(const Value& x, std::span<const Arg> args, EvalContext&) {
  require_same_kind(x, const_arg(args, 0));
  return Value::boolean((x <=> const_arg(args, 0)) <= 0);
}
inline Value l_in_range(const Value& x, std::span<const Arg> args, EvalContext&) {
  std::int64_t v = require_int(x);
  return Value::boolean(v >= int_arg(args, 0) && v <= int_arg(args, 1));
}
inline Value l_either(const Value& x, std::span<const Arg> args, EvalContext& ctx) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (truthy(call(args, i, x, ctx))) return Value::boolean(true);
  }
  return Value::boolean(false);
}
inline Value l_both(const Value& x, std::span<const Arg> args, EvalContext& ctx) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (!truthy(call(args, i, x, ctx))) return Value::boolean(false);
  }
  return Value::boolean(true);
}
inline Value l_not(const Value& x, std::span<const Arg> args, EvalContext& ctx) {
  return Value::boolean(!truthy(call(args, 0, x, ctx)));
}
inline Value l_compose(const Value& x, std::span<const Arg> args, EvalContext& ctx) {
  Value cur = x;
  for (std::size_t i = 0; i < args.size(); ++i) cur = call(args, i, cur, ctx);
  return cur;
}
inline Value l_is_empty(const Value& x, std::span<const Arg>, EvalContext&) {
  if (x.kind() != Value::Kind::Str && x.kind() != Value::Kind::List && x.kind() != Value::Kind::Map) {
    type_error("isEmpty of a non-collection");
  }
  return Value::boolean(x.size() == 0);
}
inline Value l_non_empty(const Value& x, std::span<const Arg> a, EvalContext& ctx) {
  return Value::boolean(!l_is_empty(x, a, ctx).as_bool());
}
inline Value l_trim(const Value& x, std::span<const Arg>, EvalContext&) { return Value::str(java_trim(require_str(x))); }
inline Value l_to_lower(const Value& x, std::span<const Arg>, EvalContext&) {
  std::u32string s = require_str(x);
  for (auto& c : s) {
    if (c >= U'A' && c <= U'Z') c = c - U'A' + U'a';
  }
  return Value::str(std::move(s));
}
inline Value l_to_upper(const Value& x, std::span<const Arg>, EvalContext&) {
  std::u32string s = require_str(x);
  for (auto& c : s) {
    if (c >= U'a' && c <= U'z') c = c - U'a' + U'A';
  }
  return Value::str(std::move(s));
}
inline Value l_to_int(const Value& x, std::span<const Arg>, EvalContext&) {
  switch (x.kind()) {
    case Value::Kind::Int: return x;
    case Value::Kind::Char: return Value::integer(static_cast<std::int64_t>(x.as_char()));
    case Value::Kind::Str: {
      const auto& s = x.as_str();
      std::size_t i = 0;
      bool neg = false;
      if (i < s.size() && (s[i] == U'-' || s[i] == U'+')) {
        neg = s[i] == U'-';
        ++i;
      }
      if (i == s.size()) runtime_error("NumberFormatException");
      std::int64_t v = 0;
      for (; i < s.size(); ++i) {
        if (s[i] < U'0' || s[i] > U'9') runtime_error("NumberFormatException");
        if (v > (INT32_MAX - 9) / 10) runtime_error("NumberFormatException");
        v = v * 10 + (s[i] - U'0');
      }
      return Value::integer(neg ? -v : v);
    }
    default: type_error("toInt of unsupported value");
  }
}
inline Value l_square(const Value& x, std::span<const Arg>, EvalContext&) {
  std::int64_t v = require_int(x);
  return Value::integer(v * v);
}
inline Value l_add(const Value& x, std::span<const Arg> a, EvalContext&) { return Value::integer(require_int(x) + int_arg(a, 0)); }
inline Value l_mul(const Value& x, std::span<const Arg> a, EvalContext&) { return Value::integer(require_int(x) * int_arg(a, 0)); }
inline Value l_div(const Value& x, std::span<const Arg> a, EvalContext&) {
  std::int64_t d = int_arg(a, 0);
  if (d == 0) runtime_error("ArithmeticException: / by zero");
  return Value::integer(require_int(x) / d);
}
inline Value l_mod(const Value& x, std::span<const Arg> a, EvalContext&) {
  std::int64_t d = int_arg(a, 0);
  if (d == 0) runtime_error("ArithmeticException: / by zero");
  return Value::integer(require_int(x) % d);
}
inline Value l_starts_with(const Value& x, std::span<const Arg> a, EvalContext&) {
  const auto& s = require_str(x);
  const auto& p = require_str(const_arg(a, 0));
  return Value::boolean(s.compare(0, p.size(), p) == 0 && s.size() >= p.size());
}
inline Value l_contains(const Value& x, std::span<const Arg> a, EvalContext& ctx) {
  const Value& needle = const_arg(a, 0);
  if (x.kind() == Value::Kind::Str) {
    if (needle.kind() == Value::Kind::Str) return Value::boolean(x.as_str().find(needle.as_str()) != std::u32string::npos);
    if (needle.kind() == Value::Kind::Char) return Value::boolean(x.as_str().find(needle.as_char()) != std::u32string::npos);
    return Value::boolean(false);
  }
  for (const auto& e : elems(x, ctx)) {
    if (e == needle) return Value::boolean(true);
  }
  return Value::boolean(false);
}
inline Value l_take(const Value& x, std::span<const Arg> a, EvalContext& ctx) {
  auto items = elems(x, ctx);
  return sized_rebuild_like(x, slice(items, 0, count_arg(a, 0)), ctx);
}
inline Value l_drop(const Value& x, std::span<const Arg> a, EvalContext& ctx) {
  auto items = elems(x, ctx);
  return sized_rebuild_like(x, slice(items, count_arg(a, 0), items.size()), ctx);
}
inline Value l_split(const Value& x, std::span<const Arg> a, EvalContext& ctx) {
  auto parts = java_split(require_str(x), require_str(const_arg(a, 0)));
  ctx.budget.charge(parts.size());
  return Value::list(std::move(parts), SemType::str());
}
inline Value l_constant(const Value&, std::span<const Arg> a, EvalContext&) { return const_arg(a, 0); }
inline Value l_head(const Value& x, std::span<const Arg>, EvalContext& ctx) {
  auto items = elems(x, ctx);
  if (items.empty()) runtime_error("head of empty collection");
  return items.front();
}

// --- letter builtins -------------------------------------------------------

inline Value m_take(const Value& r, const SemType& rt, const SemType&, std::span<const Arg> a, EvalContext& ctx) {
  auto items = elems(r, ctx);
  return build(rt, slice(items, 0, count_arg(a, 0)), ctx);
}
inline Value m_take_right(const Value& r, const SemType& rt, const SemType&, std::span<const Arg> a, EvalContext& ctx) {
  auto items = elems(r, ctx);
  std::size_t n = count_arg(a, 0);
  return build(rt, slice(items, items.size() > n ? items.size() - n : 0, items.size()), ctx);
}
inline Value m_drop(const Value& r, const SemType& rt, const SemType&, std::span<const Arg> a, EvalContext& ctx) {
  auto items = elems(r, ctx);
  return build(rt, slice(items, count_arg(a, 0), items.size()), ctx);
}
inline Value m_drop_right(const Value& r, const SemType& rt, const SemType&, std::span<const Arg> a, EvalContext& ctx) {
  auto items = elems(r, ctx);
  std::size_t n = count_arg(a, 0);
  return build(rt, slice(items, 0, items.size() > n ? items.size() - n : 0), ctx);
}
inline Value m_tail(const Value& r, const SemType& rt, const SemType&, std::span<const Arg>, EvalContext& ctx) {
  auto items = elems(r, ctx);
  if (items.empty()) runtime_error("tail of empty collection");
  return build(rt, slice(items, 1, items.size()), ctx);
}
inline Value m_init(const Value& r, const SemType& rt, const SemType&, std::span<const Arg>, EvalContext& ctx) {
  auto items = elems(r, ctx);
  if (items.empty()) runtime_error("init of empty collection");
  return build(rt, slice(items, 0, items.size() - 1), ctx);
}
inline Value m_head(const Value& r, const SemType&, const SemType&, std::span<const Arg>, EvalContext& ctx) {
  auto items = elems(r, ctx);
  if (items.empty()) runtime_error("head of empty collection");
  return items.front();
}
inline Value m_last(const Value& r, const SemType&, const SemType&, std::span<const Arg>, EvalContext& ctx) {
  auto items = elems(r, ctx);
  if (items.empty()) runtime_error("last of empty collection");
  return items.back();
}
inline Value m_reverse(const Value& r, const SemType& rt, const SemType&, std::span<const Arg>, EvalContext& ctx) {
  auto items = elems(r, ctx);
  std::reverse(items.begin(), items.end());
  return build(rt, std::move(items), ctx);
}
inline Value m_sorted(const Value& r, const SemType& rt, const SemType&, std::span<const Arg>, EvalContext& ctx) {
  auto items = elems(r, ctx);
  std::stable_sort(items.begin(), items.end(), [](const Value& a, const Value& b) { return (a <=> b) < 0; });
  return build(rt, std::move(items), ctx);
}
inline Value m_sort_by(const Value& r, const SemType& rt, const SemType&, std::span<const Arg> a, EvalContext& ctx) {
  auto items = elems(r, ctx);
  std::vector<std::pair<Value, Value>> keyed;
  keyed.reserve(items.size());
  for (auto& e : items) {
    Value k = call(a, 0, e, ctx);
    keyed.emplace_back(std::move(k), std::move(e));
  }
  std::stable_sort(keyed.begin(), keyed.end(), [](const auto& x, const auto& y) { return (x.first <=> y.first) < 0; });
  items.clear();
  for (auto& [k, e] : keyed) items.push_back(std::move(e));
  return build(rt, std::move(items), ctx);
}
inline Value m_distinct(const Value& r, const SemType& rt, const SemType&, std::span<const Arg>, EvalContext& ctx) {
  auto items = elems(r, ctx);
  std::vector<Value> out;
  for (auto& e : items) {
    ctx.budget.charge(out.size());
    if (std::find(out.begin(), out.end(), e) == out.end()) out.push_back(std::move(e));
  }
  return build(rt, std::move(out), ctx);
}
inline Value m_length(const Value& r, const SemType&, const SemType&, std::span<const Arg>, EvalContext& ctx) {
  return l_length(r, {}, ctx);
}
inline Value m_sum(const Value& r, const SemType&, const SemType&, std::span<const Arg>, EvalContext& ctx) {
  return l_sum(r, {}, ctx);
}
inline Value m_min(const Value& r, const SemType&, const SemType&, std::span<const Arg>, EvalContext& ctx) {
  auto items = elems(r, ctx);
  if (items.empty()) runtime_error("min of empty collection");
  return *std::min_element(items.begin(), items.end(), [](const Value& a, const Value& b) { return (a <=> b) < 0; });
}
inline Value m_max(const Value& r, const SemType&, const SemType&, std::span<const Arg>, EvalContext& ctx) {
  auto items = elems(r, ctx);
  if (items.empty()) runtime_error("max of empty collection");
  // First maximal element, as Scala's max.
  std::size_t best = 0;
  for (std::size_t i = 1; i < items.size(); ++i) {
    if ((items[i] <=> items[best]) > 0) best = i;
  }
  return items[best];
}
inline Value extremum_by(const Value& r, std::span<const Arg> a, EvalContext& ctx, bool want_max) {
  auto items = elems(r, ctx);
  if (items.empty()) runtime_error(want_max ? "maxBy of empty collection" : "minBy of empty collection");
  std::size_t best = 0;
  Value best_key = call(a, 0, items[0], ctx);
  for (std::size_t i = 1; i < items.size(); ++i) {
    Value k = call(a, 0, items[i], ctx);
    auto c = k <=> best_key;
    if (want_max ? c > 0 : c < 0) {
      best = i;
      best_key = std::move(k);
    }
  }
  return items[best];
}
inline Value m_max_by(const Value& r, const SemType&, const SemType&, std::span<const Arg> a, EvalContext& ctx) {
  return extremum_by(r, a, ctx, true);
}
inline Value m_min_by(const Value& r, const SemType&, const SemType&, std::span<const Arg> a, EvalContext& ctx) {
  return extremum_by(r, a, ctx, false);
}
inline Value m_map(const Value& r, const SemType&, const SemType& res, std::span<const Arg> a, EvalContext& ctx) {
  auto items = elems(r, ctx);
  for (auto& e : items) e = call(a, 0, e, ctx);
  return build(res, std::move(items), ctx);
}
inline Value m_flatten(const Value& r, const SemType&, const SemType& res, std::span<const Arg>, EvalContext& ctx) {
  std::vector<Value> out;
  for (const auto& inner : elems(r, ctx)) {
    for (auto& e : elems(inner, ctx)) out.push_back(std::move(e));
  }
  return build(res, std::move(out), ctx);
}
inline Value filter_impl(const Value& r, const SemType& rt, std::span<const Arg> a, EvalContext& ctx, bool keep) {
  auto items = elems(r, ctx);
  std::vector<Value> out;
  for (auto& e : items) {
    if (truthy(call(a, 0, e, ctx)) == keep) out.push_back(std::move(e));
  }
  return build(rt, std::move(out), ctx);
}
inline Value m_filter(const Value& r, const SemType& rt, const SemType&, std::span<const Arg> a, EvalContext& ctx) {
  return filter_impl(r, rt, a, ctx, true);
}
inline Value m_filter_not(const Value& r, const SemType& rt, const SemType&, std::span<const Arg> a, EvalContext& ctx) {
  return filter_impl(r, rt, a, ctx, false);
}
inline Value m_take_while(const Value& r, const SemType& rt, const SemType&, std::span<const Arg> a, EvalContext& ctx) {
  auto items = elems(r, ctx);
  std::size_t n = 0;
  while (n < items.size() && truthy(call(a, 0, items[n], ctx))) ++n;
  return build(rt, slice(items, 0, n), ctx);
}
inline Value m_drop_while(const Value& r, const SemType& rt, const SemType&, std::span<const Arg> a, EvalContext& ctx) {
  auto items = elems(r, ctx);
  std::size_t n = 0;
  while (n < items.size() && truthy(call(a, 0, items[n], ctx))) ++n;
  return build(rt, slice(items, n, items.size()), ctx);
}
inline Value m_count(const Value& r, const SemType&, const SemType&, std::span<const Arg> a, EvalContext& ctx) {
  std::int64_t n = 0;
  for (const auto& e : elems(r, ctx)) n += truthy(call(a, 0, e, ctx)) ? 1 : 0;
  return Value::integer(n);
}
inline Value m_exists(const Value& r, const SemType&, const SemType&, std::span<const Arg> a, EvalContext& ctx) {
  for (const auto& e : elems(r, ctx)) {
    if (truthy(call(a, 0, e, ctx))) return Value::boolean(true);
  }
  return Value::boolean(false);
}
inline Value m_forall(const Value& r, const SemType&, const SemType&, std::span<const Arg> a, EvalContext& ctx) {
  for (const auto& e : elems(r, ctx)) {
    if (!truthy(call(a, 0, e, ctx))) return Value::boolean(false);
  }
  return Value::boolean(true);
}
inline Value m_group_by(const Value& r, const SemType&, const SemType& res, std::span<const Arg> a, EvalContext& ctx) {
  if (res.kind != SemType::Kind::Map) type_error("groupBy must return a Map");
  std::vector<Value> keys;
  std::vector<std::vector<Value>> groups;
  for (auto& e : elems(r, ctx)) {
    Value k = call(a, 0, e, ctx);
    auto it = std::find(keys.begin(), keys.end(), k);
    ctx.budget.charge(static_cast<std::size_t>(it - keys.begin()));
    if (it == keys.end()) {
      keys.push_back(std::move(k));
      groups.emplace_back();
      groups.back().push_back(std::move(e));
    } else {
      groups[static_cast<std::size_t>(it - keys.begin())].push_back(std::move(e));
    }
  }
  std::vector<std::pair<Value, Value>> entries;
  entries.reserve(keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i) {
    entries.emplace_back(std::move(keys[i]), build(res.args[1], std::move(groups[i]), ctx));
  }
  return Value::map(std::move(entries), res.args[0], res.args[1]);
}
inline Value m_mk_string(const Value& r, const SemType&, const SemType&, std::span<const Arg> a, EvalContext& ctx) {
  std::string sep = a.empty() ? std::string() : to_utf8(require_str(const_arg(a, 0)));
  std::string out;
  bool first = true;
  for (const auto& e : elems(r, ctx)) {
    if (!first) out += sep;
    first = false;
    out += plain_string(e);
  }
  return Value::str(out);
}
inline Value m_split(const Value& r, const SemType&, const SemType&, std::span<const Arg> a, EvalContext& ctx) {
  return l_split(r, a, ctx);
}
inline Value m_zip_with_index(const Value& r, const SemType&, const SemType& res, std::span<const Arg>, EvalContext& ctx) {
  auto items = elems(r, ctx);
  std::vector<Value> out;
  out.reserve(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    out.push_back(Value::pair(std::move(items[i]), Value::integer(static_cast<std::int64_t>(i))));
  }
  return build(res, std::move(out), ctx);
}
inline Value m_zip_input_tail(const Value& r, const SemType&, const SemType& res, std::span<const Arg>, EvalContext& ctx) {
  auto items = elems(r, ctx);
  auto in = elems(ctx.input, ctx);
  if (in.empty()) runtime_error("tail of empty collection");
  std::vector<Value> out;
  std::size_t n = std::min(items.size(), in.size() - 1);
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(Value::pair(items[i], in[i + 1]));
  return build(res, std::move(out), ctx);
}
inline Value m_sliding(const Value& r, const SemType&, const SemType& res, std::span<const Arg> a, EvalContext& ctx) {
  std::int64_t width = int_arg(a, 0);
  if (width <= 0) runtime_error("sliding size must be positive");
  auto items = elems(r, ctx);
  auto n = static_cast<std::size_t>(width);
  const SemType& window_t = res.args.at(0);
  std::vector<Value> out;
  if (items.empty()) return build(res, std::move(out), ctx);
  if (items.size() <= n) {
    out.push_back(build(window_t, std::move(items), ctx));
    return build(res, std::move(out), ctx);
  }
  for (std::size_t i = 0; i + n <= items.size(); ++i) {
    out.push_back(build(window_t, slice(items, i, i + n), ctx));
  }
  return build(res, std::move(out), ctx);
}
inline Value m_grouped(const Value& r, const SemType&, const SemType& res, std::span<const Arg> a, EvalContext& ctx) {
  std::int64_t width = int_arg(a, 0);
  if (width <= 0) runtime_error("grouped size must be positive");
  auto items = elems(r, ctx);
  auto n = static_cast<std::size_t>(width);
  std::vector<Value> out;
  for (std::size_t i = 0; i < items.size(); i += n) {
    out.push_back(build(res.args.at(0), slice(items, i, i + n), ctx));
  }
  return build(res, std::move(out), ctx);
}
inline Value m_to_list(const Value& r, const SemType&, const SemType& res, std::span<const Arg>, EvalContext& ctx) {
  return build(res, elems(r, ctx), ctx);
}
inline Value m_to_map(const Value& r, const SemType&, const SemType& res, std::span<const Arg>, EvalContext& ctx) {
  return build(res, elems(r, ctx), ctx);
}
inline Value m_keys(const Value& r, const SemType&, const SemType& res, std::span<const Arg>, EvalContext& ctx) {
  if (r.kind() != Value::Kind::Map) type_error("keys of a non-map");
  std::vector<Value> out;
  for (const auto& [k, v] : r.entries()) out.push_back(k);
  return build(res, std::move(out), ctx);
}
inline Value m_values(const Value& r, const SemType&, const SemType& res, std::span<const Arg>, EvalContext& ctx) {
  if (r.kind() != Value::Kind::Map) type_error("values of a non-map");
  std::vector<Value> out;
  for (const auto& [k, v] : r.entries()) out.push_back(v);
  return build(res, std::move(out), ctx);
}
inline Value m_first(const Value& r, const SemType&, const SemType&, std::span<const Arg>, EvalContext&) {
  return require_pair(r).first();
}
inline Value m_second(const Value& r, const SemType&, const SemType&, std::span<const Arg>, EvalContext&) {
  return require_pair(r).second();
}
inline Value m_split_at_input_half(const Value& r, const SemType& rt, const SemType&, std::span<const Arg>, EvalContext& ctx) {
  auto items = elems(r, ctx);
  auto in = elems(ctx.input, ctx);
  std::size_t k = in.size() / 2;
  return Value::pair(build(rt, slice(items, 0, k), ctx), build(rt, slice(items, k, items.size()), ctx));
}
inline Value m_parse_binary(const Value& r, const SemType&, const SemType&, std::span<const Arg>, EvalContext&) {
  const auto& s = require_str(r);
  if (s.empty() || s.size() > 31) runtime_error("NumberFormatException");
  std::int64_t v = 0;
  for (char32_t c : s) {
    if (c != U'0' && c != U'1') runtime_error("NumberFormatException");
    v = v * 2 + (c == U'1' ? 1 : 0);
  }
  return Value::integer(v);
}
inline Value m_apply(const Value& r, const SemType&, const SemType&, std::span<const Arg> a, EvalContext& ctx) {
  return call(a, 0, r, ctx);
}

}  // namespace builtin_detail

inline const std::vector<BuiltinSpec<LambdaFn>>& lambda_catalog() {
  using namespace builtin_detail;
  static const std::vector<BuiltinSpec<LambdaFn>> catalog = {
      {"identity", {""}, l_identity},
      {"proj1", {""}, l_proj1},
      {"proj2", {""}, l_proj2},
      {"swap", {""}, l_swap},
      {"pair_concat", {""}, l_pair_concat},
      {"to_string", {""}, l_to_string},
      {"mk_string", {"", "S"}, l_mk_string},
      {"length", {""}, l_length},
      {"sorted", {""}, l_sorted},
      {"sum", {""}, l_sum},
      {"map_second", {"L"}, l_map_second},
      {"pair_with", {"V"}, l_pair_with},
      {"eq", {"V"}, l_eq},
      {"ne", {"V"}, l_ne},
      {"gt", {"V"}, l_gt},
      {"lt", {"V"}, l_lt},
      {"ge", {"V"}, l_ge},
      {"le", {"V"}, l_le},
      {"in_range", {"II"}, l_in_range},
      {"either", {"L+"}, l_either},
      {"both", {"L+"}, l_both},
      {"not", {"L"}, l_not},
      {"compose", {"L+"}, l_compose},
      {"is_empty", {""}, l_is_empty},
      {"non_empty", {""}, l_non_empty},
      {"trim", {""}, l_trim},
      {"to_lower", {""}, l_to_lower},
      {"to_upper", {""}, l_to_upper},
      {"to_int", {""}, l_to_int},
      {"square", {""}, l_square},
      {"add", {"I"}, l_add},
      {"mul", {"I"}, l_mul},
      {"div", {"I"}, l_div},
      {"mod", {"I"}, l_mod},
      {"starts_with", {"S"}, l_starts_with},
      {"contains", {"V"}, l_contains},
      {"take", {"I"}, l_take},
      {"drop", {"I"}, l_drop},
      {"split", {"S"}, l_split},
      {"constant", {"V"}, l_constant},
      {"head", {""}, l_head},
  };
  return catalog;
}

inline const std::vector<BuiltinSpec<LetterFn>>& letter_catalog() {
  using namespace builtin_detail;
  static const std::vector<BuiltinSpec<LetterFn>> catalog = {
      {"take", {"I"}, m_take},
      {"take_right", {"I"}, m_take_right},
      {"drop", {"I"}, m_drop},
      {"drop_right", {"I"}, m_drop_right},
      {"tail", {""}, m_tail},
      {"init", {""}, m_init},
      {"head", {""}, m_head},
      {"last", {""}, m_last},
      {"reverse", {""}, m_reverse},
      {"sorted", {""}, m_sorted},
      {"sort_by", {"L"}, m_sort_by},
      {"distinct", {""}, m_distinct},
      {"length", {""}, m_length},
      {"sum", {""}, m_sum},
      {"min", {""}, m_min},
      {"max", {""}, m_max},
      {"min_by", {"L"}, m_min_by},
      {"max_by", {"L"}, m_max_by},
      {"map", {"L"}, m_map},
      {"flatten", {""}, m_flatten},
      {"filter", {"L"}, m_filter},
      {"filter_not", {"L"}, m_filter_not},
      {"take_while", {"L"}, m_take_while},
      {"drop_while", {"L"}, m_drop_while},
      {"count", {"L"}, m_count},
      {"exists", {"L"}, m_exists},
      {"forall", {"L"}, m_forall},
      {"group_by", {"L"}, m_group_by},
      {"mk_string", {"", "S"}, m_mk_string},
      {"split", {"S"}, m_split},
      {"zip_with_index", {""}, m_zip_with_index},
      {"zip_input_tail", {""}, m_zip_input_tail},
      {"sliding", {"I"}, m_sliding},
      {"grouped", {"I"}, m_grouped},
      {"to_list", {""}, m_to_list},
      {"to_map", {""}, m_to_map},
      {"keys", {""}, m_keys},
      {"values", {""}, m_values},
      {"first", {""}, m_first},
      {"second", {""}, m_second},
      {"split_at_input_half", {""}, m_split_at_input_half},
      {"parse_binary", {""}, m_parse_binary},
      {"apply", {"L"}, m_apply},
  };
  return catalog;
}

template <typename Fn>
std::optional<std::size_t> find_builtin(const std::vector<BuiltinSpec<Fn>>& catalog, std::string_view name) {
  for (std::size_t i = 0; i < catalog.size(); ++i) {
    if (catalog[i].name == name) return i;
  }
  return std::nullopt;
}

/// True if `args` fits one of the builtin's signatures.
inline bool args_fit(std::string_view sig, std::span<const Arg> args) {
  auto kind_ok = [](char k, const Arg& a) {
    if (k == 'L') return std::holds_alternative<LambdaRef>(a);
    if (!std::holds_alternative<Value>(a)) return false;
    const Value& v = std::get<Value>(a);
    switch (k) {
      case 'I': return v.kind() == Value::Kind::Int;
      case 'S': return v.kind() == Value::Kind::Str;
      case 'C': return v.kind() == Value::Kind::Char;
      case 'B': return v.kind() == Value::Kind::Bool;
      case 'V': return true;
      default: return false;
    }
  };
  bool variadic = !sig.empty() && sig.back() == '+';
  std::string_view kinds = variadic ? sig.substr(0, sig.size() - 1) : sig;
  if (!variadic && args.size() != kinds.size()) return false;
  if (variadic && args.size() < kinds.size()) return false;
  for (std::size_t i = 0; i < args.size(); ++i) {
    char k = i < kinds.size() ? kinds[i] : kinds.back();
    if (!kind_ok(k, args[i])) return false;
  }
  return true;
}

namespace builtin_detail {

inline Value call_lambda(std::size_t index, const Value& x, EvalContext& ctx) {
  const auto& lambdas = ctx.vocab.lambdas();
  if (index >= lambdas.size()) type_error("lambda index out of range");
  const LambdaDef& def = lambdas[index];
  ctx.budget.charge(1);
  return lambda_catalog()[def.builtin_index].fn(x, def.args, ctx);
}

}  // namespace builtin_detail

}  // namespace gim
