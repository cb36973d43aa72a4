#pragma once

// Identity sequences (invertible pairs, nullipotent letters), target-equivalent
// programs containing a given letter, and observational partitions.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "gim/enumerator.hpp"

namespace gim {

struct GenConfig {
  std::size_t min_len = 0;
  std::size_t max_len = 12;
  std::u32string alphabet = U"abcdefghijk #\n";
  std::int64_t int_min = -9;
  std::int64_t int_max = 9;
};

/// Replaces type variables by Int and Seq[T] by List[T].
inline SemType concretize(const SemType& t) {
  using K = SemType::Kind;
  if (t.kind == K::Var) return SemType::integer();
  if (t.kind == K::Seq) return SemType::list(concretize(t.args[0]));
  if (t.kind == K::Self) throw TypeMismatch("Self has no concrete instance");
  SemType out = t;
  for (auto& a : out.args) a = concretize(a);
  return out;
}

/// Random values of a concrete type.
class ValueGenerator {
 public:
  explicit ValueGenerator(std::uint64_t seed, GenConfig cfg = {}) : rng_(seed), cfg_(std::move(cfg)) {
    if (cfg_.alphabet.empty() || cfg_.min_len > cfg_.max_len || cfg_.int_min > cfg_.int_max) {
      throw Error("invalid generator configuration");
    }
  }

  /// `length` fixes the size of a top-level collection.
  Value sample(const SemType& t, std::optional<std::size_t> length = std::nullopt) {
    using K = SemType::Kind;
    switch (t.kind) {
      case K::Str: {
        std::u32string s(draw_len(length), U' ');
        for (auto& c : s) c = draw_char();
        return Value::str(std::move(s));
      }
      case K::Int: return Value::integer(uniform(cfg_.int_min, cfg_.int_max));
      case K::Char: return Value::character(draw_char());
      case K::Bool: return Value::boolean(uniform(0, 1) == 1);
      case K::List: {
        std::vector<Value> items;
        std::size_t n = draw_len(length);
        for (std::size_t i = 0; i < n; ++i) items.push_back(sample(t.args[0]));
        return Value::list(std::move(items), t.args[0]);
      }
      case K::Pair: return Value::pair(sample(t.args[0]), sample(t.args[1]));
      case K::Map: {
        std::vector<std::pair<Value, Value>> entries;
        std::size_t n = draw_len(length);
        // Duplicate keys collapse; keep drawing until the size is reached or we give up.
        for (std::size_t tries = 0; entries.size() < n && tries < 20 * (n + 1); ++tries) {
          Value k = sample(t.args[0]);
          if (std::any_of(entries.begin(), entries.end(), [&](const auto& e) { return e.first == k; })) continue;
          entries.emplace_back(std::move(k), sample(t.args[1]));
        }
        return Value::map(std::move(entries), t.args[0], t.args[1]);
      }
      default: return sample(concretize(t), length);
    }
  }

 private:
  std::int64_t uniform(std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng_);
  }
  std::size_t draw_len(std::optional<std::size_t> fixed) {
    if (fixed) return *fixed;
    return static_cast<std::size_t>(
        uniform(static_cast<std::int64_t>(cfg_.min_len), static_cast<std::int64_t>(cfg_.max_len)));
  }
  char32_t draw_char() {
    return cfg_.alphabet[static_cast<std::size_t>(uniform(0, static_cast<std::int64_t>(cfg_.alphabet.size()) - 1))];
  }

  std::mt19937_64 rng_;
  GenConfig cfg_;
};

struct VerifyConfig {
  std::size_t samples = 100;
  std::uint64_t seed = 1;
  GenConfig gen{};
  EvalLimits limits{};
};

/// One registry entry: `tokens` applied to a value of `context` gives it back.
struct IdentityEntry {
  enum class Kind : unsigned char { Invertible, Nullipotent };
  Kind kind = Kind::Invertible;
  std::vector<std::string> tokens;
  SemType context;                    // may be a pattern
  std::optional<std::size_t> length;  // sampling restriction on the context value
};

struct EquivRegistry {
  std::shared_ptr<const Vocabulary> vocabulary;
  std::vector<IdentityEntry> entries;

  std::vector<const IdentityEntry*> of_kind(IdentityEntry::Kind k) const {
    std::vector<const IdentityEntry*> out;
    for (const auto& e : entries) {
      if (e.kind == k) out.push_back(&e);
    }
    return out;
  }
  std::vector<const IdentityEntry*> invertible_pairs() const { return of_kind(IdentityEntry::Kind::Invertible); }
  std::vector<const IdentityEntry*> nullipotent_entries() const { return of_kind(IdentityEntry::Kind::Nullipotent); }
};

/// `vocab_dir` resolves the registry's "vocabulary" field.
inline EquivRegistry load_registry_json(const json& doc, const std::filesystem::path& vocab_dir) {
  using loader_detail::field;
  if (!doc.is_object()) throw SchemaError("registry", "expected an object");
  if (field(doc, "format_version", "registry") != kFormatVersion) {
    throw SchemaError("registry.format_version", "unsupported version");
  }
  EquivRegistry reg;
  const json& vf = field(doc, "vocabulary", "registry");
  if (!vf.is_string()) throw SchemaError("registry.vocabulary", "expected a file name");
  reg.vocabulary = std::make_shared<const Vocabulary>(
      load_vocabulary(read_file(vocab_dir / vf.get<std::string>())));
  const json& arr = field(doc, "identities", "registry");
  if (!arr.is_array()) throw SchemaError("registry.identities", "expected an array");
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string path = "registry.identities[" + std::to_string(i) + "]";
    const json& e = arr[i];
    IdentityEntry entry;
    std::string kind = loader_detail::string_field(e, "kind", path);
    if (kind == "invertible") {
      entry.kind = IdentityEntry::Kind::Invertible;
    } else if (kind == "nullipotent") {
      entry.kind = IdentityEntry::Kind::Nullipotent;
    } else {
      throw SchemaError(path + ".kind", "expected invertible or nullipotent");
    }
    const json& toks = field(e, "tokens", path);
    if (!toks.is_array() || toks.empty()) throw SchemaError(path + ".tokens", "expected a non-empty array");
    for (const auto& t : toks) {
      if (!t.is_string()) throw SchemaError(path + ".tokens", "expected strings");
      reg.vocabulary->require(t.get<std::string>());
      entry.tokens.push_back(t.get<std::string>());
    }
    if (entry.kind == IdentityEntry::Kind::Nullipotent && entry.tokens.size() != 1) {
      throw SchemaError(path + ".tokens", "a nullipotent entry has exactly one token");
    }
    entry.context = loader_detail::type_field(e, "context", path);
    if (e.contains("length")) {
      if (!e["length"].is_number_unsigned()) throw SchemaError(path + ".length", "expected a count");
      entry.length = e["length"].get<std::size_t>();
    }
    reg.entries.push_back(std::move(entry));
  }
  return reg;
}

inline EquivRegistry load_registry(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw SchemaError(path.string(), e.what());
  }
  return load_registry_json(doc, path.parent_path());
}

namespace equiv_detail {

inline std::vector<LetterId> resolve(const std::vector<std::string>& tokens, const Vocabulary& v) {
  std::vector<LetterId> ids;
  for (const auto& t : tokens) ids.push_back(v.require(t));
  return ids;
}

}  // namespace equiv_detail

/// True iff `tokens` returns every sampled value of `ctx` unchanged.
inline bool verify_identity(const std::vector<std::string>& tokens, const SemType& ctx, const Vocabulary& v,
                            const VerifyConfig& cfg = {}, std::optional<std::size_t> length = std::nullopt) {
  SemType t = concretize(ctx);
  auto ids = equiv_detail::resolve(tokens, v);
  auto r = type_of_ids(ids, v, t);
  if (!r.ok()) {
    throw TypeMismatch("'" + tokens[r.error_index] + "' does not apply at position " + std::to_string(r.error_index) +
                       " from " + to_string(t));
  }
  if (!(*r.type == t)) {
    throw TypeMismatch("sequence maps " + to_string(t) + " to " + to_string(*r.type));
  }
  ValueGenerator gen(cfg.seed, cfg.gen);
  for (std::size_t i = 0; i < cfg.samples; ++i) {
    Value x = gen.sample(t, length);
    Value y = run_pipeline(ids, x, t, x, v, cfg.limits);
    if (y.is_error() || !(y == x)) return false;
  }
  return true;
}

inline bool verify_entry(const IdentityEntry& e, const Vocabulary& v, const VerifyConfig& cfg = {}) {
  return verify_identity(e.tokens, e.context, v, cfg, e.length);
}

/// Programs agree on every sampled input of the vocabulary's input type
/// (errors compare by kind).
inline bool agree_on_samples(const Program& a, const Program& b, const Vocabulary& v, const VerifyConfig& cfg = {}) {
  ValueGenerator gen(cfg.seed, cfg.gen);
  for (std::size_t i = 0; i < cfg.samples; ++i) {
    Value x = gen.sample(v.input_type());
    if (!(evaluate(a, x, v, cfg.limits) == evaluate(b, x, v, cfg.limits))) return false;
  }
  return true;
}

/// A program containing `banned` that agrees with `target` on sampled inputs,
/// built by splicing a registered identity into `target`. Later positions are
/// tried first, so an identity appended at the end wins when it fits.
inline Program make_equivalent_with(const Program& target, const std::string& banned, const EquivRegistry& reg,
                                    const Vocabulary& v, const VerifyConfig& cfg = {}) {
  v.require(banned);
  if (std::find(target.tokens.begin(), target.tokens.end(), banned) != target.tokens.end()) return target;
  auto ids = letter_ids(target, v);
  std::vector<SemType> types{v.input_type()};
  for (LetterId id : ids) {
    auto next = v.letter(id).result_type(types.back());
    if (!next) throw TypeMismatch("target does not type-check");
    types.push_back(std::move(*next));
  }
  for (std::size_t k = ids.size() + 1; k-- > 0;) {
    for (const auto& e : reg.entries) {
      if (std::find(e.tokens.begin(), e.tokens.end(), banned) == e.tokens.end()) continue;
      if (!matches(e.context, types[k])) continue;
      if (!std::all_of(e.tokens.begin(), e.tokens.end(), [&](const auto& t) { return v.find(t).has_value(); })) {
        continue;
      }
      auto seq = equiv_detail::resolve(e.tokens, v);
      auto r = type_of_ids(seq, v, types[k]);
      if (!r.ok() || !(*r.type == types[k])) continue;
      Program cand;
      cand.tokens.assign(target.tokens.begin(), target.tokens.begin() + static_cast<std::ptrdiff_t>(k));
      cand.tokens.insert(cand.tokens.end(), e.tokens.begin(), e.tokens.end());
      cand.tokens.insert(cand.tokens.end(), target.tokens.begin() + static_cast<std::ptrdiff_t>(k),
                         target.tokens.end());
      if (agree_on_samples(cand, target, v, cfg)) return cand;
    }
  }
  throw NoConstruction("no registered identity containing '" + banned + "' fits the target");
}

/// Groups programs whose results agree on every input. Classes and their
/// members keep input order.
inline std::vector<std::vector<std::size_t>> observational_partition(const std::vector<Program>& programs,
                                                                     const std::vector<Value>& inputs,
                                                                     const Vocabulary& v,
                                                                     const EvalLimits& lim = {}) {
  std::vector<std::vector<Value>> sigs;
  std::vector<std::vector<std::size_t>> classes;
  for (std::size_t i = 0; i < programs.size(); ++i) {
    std::vector<Value> sig;
    for (const auto& x : inputs) sig.push_back(evaluate(programs[i], x, v, lim));
    auto it = std::find(sigs.begin(), sigs.end(), sig);
    if (it == sigs.end()) {
      sigs.push_back(std::move(sig));
      classes.push_back({i});
    } else {
      classes[static_cast<std::size_t>(it - sigs.begin())].push_back(i);
    }
  }
  return classes;
}

struct WitnessConfig {
  std::size_t example_sets = 50;
  std::size_t examples_per_set = 5;
  std::size_t extra_length = 2;
  std::uint64_t seed = 2024;
  VerifyConfig verify{};
  GenConfig inputs{};
  /// Also enumerate the filtered space at the raised length bound. Only
  /// practical for small vocabularies.
  bool enumerate = false;
};

struct WitnessRound {
  std::vector<Example> examples;
  bool witness_satisfies = false;
  std::optional<std::size_t> banned_programs;  // from enumeration when enabled
};

struct WitnessReport {
  Program target;
  std::string banned;
  Program witness;
  std::size_t length_bound = 0;
  std::vector<WitnessRound> rounds;
  std::size_t failures = 0;
};

/// For random example sets consistent with the task target, checks that the
/// example-filtered space at length |target| + extra still holds a program
/// using `banned`. The spliced witness is a member whenever it fits the bound
/// and satisfies the examples.
inline WitnessReport ban_witness(const TaskDefinition& task, const std::string& banned, const EquivRegistry& reg,
                                   const WitnessConfig& cfg = {}) {
  if (!task.target) throw Error("task " + task.task_id + " has no target program");
  const Vocabulary& v = *task.vocabulary;
  WitnessReport rep;
  rep.target = *task.target;
  rep.banned = banned;
  rep.length_bound = task.target->length() + cfg.extra_length;
  rep.witness = make_equivalent_with(*task.target, banned, reg, v, cfg.verify);
  bool fits = rep.witness.length() <= rep.length_bound && type_of(rep.witness, v).ok();

  std::optional<EnumTree> tree;
  if (cfg.enumerate) tree = build_tree(task.vocabulary, rep.length_bound, false, {}, cfg.verify.limits);

  ValueGenerator gen(cfg.seed, cfg.inputs);
  for (std::size_t s = 0; s < cfg.example_sets; ++s) {
    WitnessRound round;
    for (std::size_t tries = 0; round.examples.size() < cfg.examples_per_set && tries < 1000; ++tries) {
      Value x = gen.sample(v.input_type());
      if (std::any_of(round.examples.begin(), round.examples.end(), [&](const Example& e) { return e.input == x; })) {
        continue;
      }
      Value y = evaluate(*task.target, x, v, cfg.verify.limits);
      if (!y.is_error()) round.examples.push_back({std::move(x), std::move(y)});
    }
    if (round.examples.size() < cfg.examples_per_set) throw Error("could not sample enough consistent examples");
    std::vector<Predicate> preds;
    for (const auto& e : round.examples) preds.push_back(Predicate::example(e.input, e.output));
    round.witness_satisfies = fits && satisfies_all(rep.witness, preds, v, cfg.verify.limits);
    bool ok = round.witness_satisfies;
    if (tree) {
      std::size_t n = 0;
      for (NodeId i : candidate_ids(*tree, preds)) {
        auto toks = tree->program(i).tokens;
        if (std::find(toks.begin(), toks.end(), banned) != toks.end()) ++n;
      }
      round.banned_programs = n;
      ok = ok && n > 0;
    }
    if (!ok) ++rep.failures;
    rep.rounds.push_back(std::move(round));
  }
  return rep;
}

}  // namespace gim
