#pragma once

// Vocabulary letters: partially applied methods with a receiver pattern and a
// return rule. Loading from files lives in loader.hpp.

#include <cstddef>
#include <optional>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "gim/types.hpp"
#include "gim/value.hpp"

namespace gim {

using LetterId = std::size_t;

/// Reference into a vocabulary's lambda catalog.
struct LambdaRef {
  std::size_t index = 0;
  friend bool operator==(const LambdaRef&, const LambdaRef&) = default;
};

/// A bound argument: a constant or a cataloged lambda.
using Arg = std::variant<Value, LambdaRef>;

struct LambdaDef {
  std::string id;
  std::string builtin;
  std::size_t builtin_index = 0;
  std::vector<Arg> args;
};

struct MethodDescriptor {
  std::string token_id;
  std::string display_text;
  SemType receiver_pattern;
  SemType return_rule;
  std::string builtin_op;
  std::size_t builtin_index = 0;
  std::vector<Arg> bound_args;

  /// Result type for a receiver, or nullopt if the pattern does not match.
  std::optional<SemType> result_type(const SemType& receiver) const {
    Bindings b{};
    if (!match_type(receiver_pattern, receiver, b)) return std::nullopt;
    return instantiate(return_rule, b, receiver);
  }
};

class Vocabulary {
 public:
  Vocabulary() = default;
  Vocabulary(std::string name, SemType input_type, std::vector<MethodDescriptor> letters,
             std::vector<LambdaDef> lambdas)
      : name_(std::move(name)),
        input_type_(std::move(input_type)),
        letters_(std::move(letters)),
        lambdas_(std::move(lambdas)) {
    for (std::size_t i = 0; i < letters_.size(); ++i) by_token_.emplace(letters_[i].token_id, i);
  }

  const std::string& name() const { return name_; }
  const SemType& input_type() const { return input_type_; }
  const std::vector<MethodDescriptor>& letters() const { return letters_; }
  const std::vector<LambdaDef>& lambdas() const { return lambdas_; }
  std::size_t size() const { return letters_.size(); }
  const MethodDescriptor& letter(LetterId id) const { return letters_.at(id); }

  std::optional<LetterId> find(const std::string& token) const {
    auto it = by_token_.find(token);
    if (it == by_token_.end()) return std::nullopt;
    return it->second;
  }

  LetterId require(const std::string& token) const {
    if (auto id = find(token)) return *id;
    throw UnknownToken(token);
  }

 private:
  std::string name_;
  SemType input_type_;
  std::vector<MethodDescriptor> letters_;
  std::vector<LambdaDef> lambdas_;
  std::unordered_map<std::string, LetterId> by_token_;
};

/// Letters whose receiver pattern matches `recv`, in vocabulary order.
inline std::vector<const MethodDescriptor*> applicable(const Vocabulary& v, const SemType& recv) {
  std::vector<const MethodDescriptor*> out;
  for (const auto& m : v.letters()) {
    if (matches(m.receiver_pattern, recv)) out.push_back(&m);
  }
  return out;
}

inline std::vector<LetterId> applicable_ids(const Vocabulary& v, const SemType& recv) {
  std::vector<LetterId> out;
  for (LetterId i = 0; i < v.size(); ++i) {
    if (matches(v.letter(i).receiver_pattern, recv)) out.push_back(i);
  }
  return out;
}

}  // namespace gim
