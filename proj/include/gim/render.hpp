#pragma once

#include <string>

#include "gim/value.hpp"

namespace gim {

namespace detail {

inline void append_escaped(std::string& out, char32_t c) {
  switch (c) {
    case U'\n': out += "\\n"; break;
    case U'\r': out += "\\r"; break;
    case U'\t': out += "\\t"; break;
    case U'"': out += "\\\""; break;
    case U'\\': out += "\\\\"; break;
    default: out += to_utf8(std::u32string_view(&c, 1));
  }
}

inline std::string quoted(const std::u32string& s) {
  std::string out = "\"";
  for (char32_t c : s) append_escaped(out, c);
  out += '"';
  return out;
}

}  // namespace detail

/// Scala `toString` of a value, as used by mkString and string concatenation.
inline std::string plain_string(const Value& v) {
  using K = Value::Kind;
  switch (v.kind()) {
    case K::Str: return v.str_utf8();
    case K::Int: return std::to_string(v.as_int());
    case K::Char: return to_utf8(std::u32string(1, v.as_char()));
    case K::Bool: return v.as_bool() ? "true" : "false";
    case K::List: {
      std::string out = "List(";
      bool first = true;
      for (const auto& e : v.items()) {
        if (!first) out += ", ";
        first = false;
        out += plain_string(e);
      }
      return out + ")";
    }
    case K::Pair: return "(" + plain_string(v.first()) + "," + plain_string(v.second()) + ")";
    case K::Map: {
      std::string out = "Map(";
      bool first = true;
      for (const auto& [k, val] : v.entries()) {
        if (!first) out += ", ";
        first = false;
        out += plain_string(k) + " -> " + plain_string(val);
      }
      return out + ")";
    }
    case K::Error: return std::string("error: ") + to_string(v.error_kind());
  }
  return {};
}

/// Debug-view rendering: strings quoted, chars bare, no spaces after commas.
inline std::string render_full(const Value& v) {
  using K = Value::Kind;
  switch (v.kind()) {
    case K::Str: return detail::quoted(v.as_str());
    case K::Char: {
      std::string out;
      detail::append_escaped(out, v.as_char());
      return out;
    }
    case K::Int:
    case K::Bool:
    case K::Error:
      return plain_string(v);
    case K::List: {
      std::string out = "List(";
      for (std::size_t i = 0; i < v.items().size(); ++i) {
        if (i) out += ',';
        out += render_full(v.items()[i]);
      }
      return out + ")";
    }
    case K::Pair: return "(" + render_full(v.first()) + "," + render_full(v.second()) + ")";
    case K::Map: {
      std::string out = "Map(";
      for (std::size_t i = 0; i < v.entries().size(); ++i) {
        if (i) out += ',';
        out += render_full(v.entries()[i].first) + "->" + render_full(v.entries()[i].second);
      }
      return out + ")";
    }
  }
  return {};
}

struct RenderedValue {
  std::string text;
  bool truncated = false;
};

/// Renders `v` in at most `max_chars` bytes (max_chars >= 8). Lists and maps
/// are cut after a whole top-level element and closed with ",...)".
inline RenderedValue render_value(const Value& v, std::size_t max_chars = 60) {
  if (max_chars < 8) throw Error("render_value: max_chars must be at least 8");
  std::string full = render_full(v);
  if (full.size() <= max_chars) return {std::move(full), false};

  using K = Value::Kind;
  if (v.kind() == K::List || v.kind() == K::Map) {
    std::string out = v.kind() == K::List ? "List(" : "Map(";
    const std::string tail = "...)";
    std::size_t n = v.kind() == K::List ? v.items().size() : v.entries().size();
    for (std::size_t i = 0; i < n; ++i) {
      std::string elem = v.kind() == K::List
                             ? render_full(v.items()[i])
                             : render_full(v.entries()[i].first) + "->" + render_full(v.entries()[i].second);
      if (out.size() + elem.size() + 1 + tail.size() > max_chars) break;
      out += elem;
      out += ',';
    }
    if (out.size() + tail.size() <= max_chars) return {out + tail, true};
  }
  if (v.kind() == K::Str) {
    std::string out = "\"";
    for (char32_t c : v.as_str()) {
      std::string piece;
      detail::append_escaped(piece, c);
      if (out.size() + piece.size() + 4 > max_chars) break;
      out += piece;
    }
    return {out + "...\"", true};
  }
  // Pairs and other scalars: plain cut on a UTF-8 boundary.
  std::size_t cut = max_chars - 3;
  while (cut > 0 && (static_cast<unsigned char>(full[cut]) & 0xC0) == 0x80) --cut;
  return {full.substr(0, cut) + "...", true};
}

}  // namespace gim
