#pragma once

#include <algorithm>
#include <cctype>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gim/vocabulary.hpp"

namespace gim {

/// A linear pipeline `input.f1.f2...fn`, stored as token ids. The empty
/// program is the bare `input`.
struct Program {
  std::vector<std::string> tokens;

  std::size_t length() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }

  friend bool operator==(const Program&, const Program&) = default;
  friend auto operator<=>(const Program&, const Program&) = default;
};

inline std::vector<LetterId> letter_ids(const Program& p, const Vocabulary& v) {
  std::vector<LetterId> ids;
  ids.reserve(p.tokens.size());
  for (const auto& t : p.tokens) ids.push_back(v.require(t));
  return ids;
}

inline Program program_from_ids(std::span<const LetterId> ids, const Vocabulary& v) {
  Program p;
  p.tokens.reserve(ids.size());
  for (LetterId id : ids) p.tokens.push_back(v.letter(id).token_id);
  return p;
}

inline std::string render_program(const Program& p, const Vocabulary& v) {
  std::string out = "input";
  for (const auto& t : p.tokens) {
    out += '.';
    out += v.letter(v.require(t)).display_text;
  }
  return out;
}

inline std::string render_ids(std::span<const LetterId> ids, const Vocabulary& v) {
  std::string out = "input";
  for (LetterId id : ids) {
    out += '.';
    out += v.letter(id).display_text;
  }
  return out;
}

/// Parses "input" followed by ".display" segments; whitespace (including
/// newlines) may precede each dot. Display texts may themselves contain dots,
/// so segments are matched against the vocabulary with backtracking.
inline Program parse_program(std::string_view text, const Vocabulary& v) {
  auto skip_ws = [&](std::size_t pos) {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    return pos;
  };
  std::size_t pos = skip_ws(0);
  constexpr std::string_view kInput = "input";
  if (text.substr(pos, kInput.size()) != kInput) {
    throw ParseError("program must start with 'input'", pos, std::min(text.size() - pos, kInput.size()));
  }
  pos += kInput.size();

  // Letters sorted by display length, longest first, so greedy choices come first.
  std::vector<LetterId> order(v.size());
  for (LetterId i = 0; i < v.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](LetterId a, LetterId b) {
    return v.letter(a).display_text.size() > v.letter(b).display_text.size();
  });

  std::vector<char> dead(text.size() + 1, 0);
  std::size_t furthest = pos;
  std::vector<LetterId> path;

  auto solve = [&](auto&& self, std::size_t at) -> bool {
    at = skip_ws(at);
    furthest = std::max(furthest, at);
    if (at == text.size()) return true;
    if (dead[at]) return false;
    if (text[at] == '.') {
      std::string_view rest = text.substr(at + 1);
      for (LetterId id : order) {
        const std::string& d = v.letter(id).display_text;
        if (rest.substr(0, d.size()) == d) {
          path.push_back(id);
          if (self(self, at + 1 + d.size())) return true;
          path.pop_back();
        }
      }
    }
    dead[at] = 1;
    return false;
  };

  if (!solve(solve, pos)) {
    std::size_t end = text.find('.', furthest + 1);
    if (end == std::string_view::npos) end = text.size();
    throw ParseError("unparseable program segment '" + std::string(text.substr(furthest, end - furthest)) + "'",
                     furthest, end - furthest);
  }
  return program_from_ids(path, v);
}

struct TypeResult {
  std::optional<SemType> type;
  std::size_t error_index = 0;  // index of the first ill-typed token when !type

  bool ok() const { return type.has_value(); }
};

inline TypeResult type_of_ids(std::span<const LetterId> ids, const Vocabulary& v, const SemType& start) {
  SemType cur = start;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    auto next = v.letter(ids[i]).result_type(cur);
    if (!next) return {std::nullopt, i};
    cur = std::move(*next);
  }
  return {std::move(cur), 0};
}

/// Folds the vocabulary input type through each letter's typing rule.
inline TypeResult type_of(const Program& p, const Vocabulary& v) {
  auto ids = letter_ids(p, v);
  return type_of_ids(ids, v, v.input_type());
}

}  // namespace gim
