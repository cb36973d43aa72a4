#pragma once

// Bottom-up enumeration of well-typed pipelines as a prefix tree. Nodes are
// stored breadth-first; the children of a node are contiguous and follow
// vocabulary order, so index order is the candidate order.

#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "gim/interpreter.hpp"
#include "gim/predicates.hpp"

namespace gim {

using NodeId = std::uint32_t;

struct EnumConfig {
  std::size_t max_length = 6;
  bool oe = false;                   // fold observationally equivalent programs
  std::vector<Value> example_inputs; // inputs used for the memo vectors when oe is on
  std::size_t node_cap = 2'000'000;
  EvalLimits limits{};
};

struct SpaceStats {
  std::uint64_t total_wellformed = 0;
  std::uint64_t matching_examples = 0;
  std::uint64_t matching_all = 0;

  friend bool operator==(const SpaceStats&, const SpaceStats&) = default;
};

class EnumTree {
 public:
  struct Node {
    NodeId parent = 0;
    std::uint32_t letter = 0;
    std::uint32_t type = 0;  // index into types()
    NodeId first_child = 0;
    std::uint32_t child_count = 0;
    std::uint8_t depth = 0;
    bool pruned = false;
    bool folded = false;
  };

  static EnumTree build(std::shared_ptr<const Vocabulary> v, EnumConfig cfg) {
    EnumTree t(std::move(v), std::move(cfg));
    t.build_nodes();
    return t;
  }

  const Vocabulary& vocabulary() const { return *vocab_; }
  std::shared_ptr<const Vocabulary> vocabulary_ptr() const { return vocab_; }
  const EnumConfig& config() const { return cfg_; }
  std::size_t size() const { return nodes_.size(); }
  const Node& node(NodeId i) const { return nodes_.at(i); }
  const SemType& type_of_node(NodeId i) const { return types_[nodes_.at(i).type]; }
  /// Affix predicates make shallower nodes non-candidates.
  std::size_t min_depth() const { return min_depth_; }
  /// Number of well-typed programs up to max_length, folded or not.
  std::uint64_t total_wellformed() const { return total_wellformed_; }

  std::vector<LetterId> path(NodeId i) const {
    std::vector<LetterId> out(nodes_.at(i).depth);
    for (std::size_t k = out.size(); k > 0; --k) {
      out[k - 1] = nodes_[i].letter;
      i = nodes_[i].parent;
    }
    return out;
  }

  Program program(NodeId i) const { return program_from_ids(path(i), *vocab_); }

  /// Node for a token sequence, if it is in the tree.
  std::optional<NodeId> find(std::span<const LetterId> ids) const {
    NodeId cur = 0;
    for (LetterId id : ids) {
      const Node& n = nodes_[cur];
      bool found = false;
      for (NodeId c = n.first_child; c < n.first_child + n.child_count; ++c) {
        if (nodes_[c].letter == id) {
          cur = c;
          found = true;
          break;
        }
      }
      if (!found) return std::nullopt;
    }
    return cur;
  }

  std::optional<NodeId> find(const Program& p) const {
    std::vector<LetterId> ids;
    for (const auto& t : p.tokens) {
      auto id = vocab_->find(t);
      if (!id) return std::nullopt;
      ids.push_back(*id);
    }
    return find(ids);
  }

  /// Applies a Remove or Affix predicate to the tree; other kinds are ignored
  /// (they filter instead). Pruned nodes stay pruned.
  void prune_with(const Predicate& q) {
    if (q.kind == PredicateKind::Remove) {
      auto seq = resolve(q.tokens);
      for (NodeId i = 1; i < nodes_.size(); ++i) {
        if (!nodes_[i].pruned && nodes_[i].depth >= seq.size() && ends_with(i, seq)) nodes_[i].pruned = true;
      }
    } else if (q.kind == PredicateKind::Affix) {
      auto prefix = resolve(q.tokens);
      for (NodeId i = 1; i < nodes_.size() && nodes_[i].depth <= prefix.size(); ++i) {
        if (nodes_[i].letter != prefix[nodes_[i].depth - 1]) nodes_[i].pruned = true;
      }
      min_depth_ = std::max(min_depth_, prefix.size());
    } else {
      return;
    }
    for (NodeId i = 1; i < nodes_.size(); ++i) {
      if (nodes_[nodes_[i].parent].pruned) nodes_[i].pruned = true;
    }
  }

  /// Per-node satisfaction of an Example, computed once over the whole tree
  /// (pruned nodes included) with evaluation shared along prefixes.
  const std::vector<char>& example_mask(const Predicate& ex) {
    for (std::size_t k = 0; k < mask_keys_.size(); ++k) {
      if (mask_keys_[k] == ex) return masks_[k];
    }
    std::vector<char> mask(nodes_.size(), 0);
    Value root = type_check(ex.input, vocab_->input_type()) ? ex.input : Value::error(ErrorKind::TypeError);
    eval_subtree(0, root, 0, ex, mask);
    mask_keys_.push_back(ex);
    masks_.push_back(std::move(mask));
    return masks_.back();
  }

  /// Node shape test: reachable after pruning, deep enough for any Affix, and
  /// not folded (unless folded nodes are requested).
  bool selectable(NodeId i, bool show_folded = false) const {
    const Node& n = nodes_[i];
    return !n.pruned && n.depth >= min_depth_ && (show_folded || !n.folded);
  }

  /// Memo vector of a node (values on the configured example inputs); empty
  /// unless oe is on.
  const std::vector<Value>& memo(NodeId i) const {
    static const std::vector<Value> none;
    return memo_.empty() ? none : memo_.at(i);
  }

  static std::optional<EnumTree> load(std::shared_ptr<const Vocabulary> v, const std::filesystem::path& path,
                                      const EnumConfig& expected) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::string line;
    if (!std::getline(in, line)) return std::nullopt;
    json header = json::parse(line, nullptr, false);
    json inputs = json::array();
    for (const auto& e : expected.example_inputs) inputs.push_back(value_to_json(e));
    if (header.is_discarded() || header.value("format", "") != "gim-space" ||
        header.value("format_version", 0) != kFormatVersion || header.value("vocabulary", "") != v->name() ||
        header.value("max_length", std::size_t{0}) != expected.max_length ||
        header.value("oe", false) != expected.oe || header.value("example_inputs", json::array()) != inputs) {
      return std::nullopt;
    }
    const std::string where = path.string();
    std::size_t count = header.value("nodes", std::size_t{0});
    if (count == 0 || count > expected.node_cap) throw SchemaError(where, "bad node count");
    EnumTree t(std::move(v), expected);
    Node root;
    root.type = t.intern(t.vocab_->input_type());
    t.nodes_.push_back(root);
    if (expected.oe) {
      t.memo_.emplace_back();
      for (const auto& e : expected.example_inputs) {
        t.memo_[0].push_back(type_check(e, t.vocab_->input_type()) ? e : Value::error(ErrorKind::TypeError));
      }
    }
    for (std::size_t k = 1; k < count; ++k) {
      if (!std::getline(in, line)) throw SchemaError(where, "truncated");
      json rec = json::parse(line, nullptr, false);
      if (rec.is_discarded() || !rec.contains("p") || !rec.contains("t")) {
        throw SchemaError(where + ":" + std::to_string(k + 1), "bad node record");
      }
      NodeId parent = rec["p"].get<NodeId>();
      if (parent >= t.nodes_.size()) throw SchemaError(where + ":" + std::to_string(k + 1), "parent out of order");
      LetterId letter = t.vocab_->require(rec["t"].get<std::string>());
      Node& pn = t.nodes_[parent];
      auto rt = t.vocab_->letter(letter).result_type(t.types_[pn.type]);
      if (!rt) throw SchemaError(where + ":" + std::to_string(k + 1), "ill-typed node");
      if (pn.child_count == 0) pn.first_child = static_cast<NodeId>(t.nodes_.size());
      if (pn.first_child + pn.child_count != t.nodes_.size()) {
        throw SchemaError(where + ":" + std::to_string(k + 1), "children are not contiguous");
      }
      ++pn.child_count;
      Node c;
      c.parent = parent;
      c.letter = static_cast<std::uint32_t>(letter);
      c.depth = static_cast<std::uint8_t>(t.nodes_[parent].depth + 1);
      c.type = t.intern(*rt);
      c.folded = rec.value("f", false);
      t.nodes_.push_back(c);
      if (expected.oe) {
        std::vector<Value> m;
        const json& mj = rec.at("m");
        for (std::size_t e = 0; e < mj.size(); ++e) {
          const json& x = mj[e];
          if (x.is_object() && x.contains("error")) {
            std::string kind = x["error"].get<std::string>();
            m.push_back(Value::error(kind == "TypeError"      ? ErrorKind::TypeError
                                     : kind == "RuntimeError" ? ErrorKind::RuntimeError
                                                              : ErrorKind::Timeout));
          } else {
            m.push_back(value_from_json(x, *rt, where));
          }
        }
        t.memo_.push_back(std::move(m));
      }
    }
    t.count_wellformed();
    return t;
  }

 private:
  EnumTree(std::shared_ptr<const Vocabulary> v, EnumConfig cfg) : vocab_(std::move(v)), cfg_(std::move(cfg)) {}

  std::uint32_t intern(const SemType& t) {
    for (std::uint32_t k = 0; k < types_.size(); ++k) {
      if (types_[k] == t) return k;
    }
    types_.push_back(t);
    applicable_.push_back(applicable_ids(*vocab_, t));
    results_.emplace_back(applicable_.back().size(), UINT32_MAX);
    return static_cast<std::uint32_t>(types_.size() - 1);
  }

  std::uint32_t result_type_index(std::uint32_t type, std::size_t slot) {
    if (results_[type][slot] == UINT32_MAX) {
      LetterId id = applicable_[type][slot];
      SemType r = *vocab_->letter(id).result_type(types_[type]);
      std::uint32_t ri = intern(r);
      results_[type][slot] = ri;
    }
    return results_[type][slot];
  }

  void count_wellformed() {
    // Programs per type, level by level; independent of folding.
    std::vector<std::uint64_t> cur(types_.size(), 0), next;
    cur[nodes_[0].type] = 1;
    total_wellformed_ = 1;
    for (std::size_t d = 1; d <= cfg_.max_length; ++d) {
      next.assign(types_.size(), 0);
      for (std::uint32_t t = 0; t < cur.size(); ++t) {
        if (cur[t] == 0) continue;
        for (std::size_t s = 0; s < applicable_[t].size(); ++s) {
          std::uint32_t r = result_type_index(t, s);
          if (r >= next.size()) next.resize(types_.size(), 0);
          next[r] += cur[t];
        }
      }
      for (auto c : next) total_wellformed_ += c;
      cur = std::move(next);
      cur.resize(types_.size(), 0);
    }
  }

  struct MemoKey {
    std::uint32_t type;
    std::uint64_t hash;
    bool operator==(const MemoKey&) const = default;
  };
  struct MemoKeyHash {
    std::size_t operator()(const MemoKey& k) const { return k.hash * 31u + k.type; }
  };

  static std::uint64_t memo_hash(const std::vector<Value>& m) {
    std::uint64_t h = 1469598103934665603ull;
    for (const auto& v : m) {
      std::uint64_t x = v.is_error() ? 0x9e3779b97f4a7c15ull * (1 + static_cast<unsigned>(v.error_kind()))
                                     : scala_hash::hash(v);
      h = (h ^ x) * 1099511628211ull;
    }
    return h;
  }

  void build_nodes() {
    nodes_.clear();
    Node root;
    root.type = intern(vocab_->input_type());
    nodes_.push_back(root);
    const bool oe = cfg_.oe;
    std::unordered_map<MemoKey, std::vector<NodeId>, MemoKeyHash> classes;
    if (oe) {
      memo_.emplace_back();
      memo_steps_.emplace_back();
      for (const auto& in : cfg_.example_inputs) {
        memo_[0].push_back(type_check(in, vocab_->input_type()) ? in : Value::error(ErrorKind::TypeError));
        memo_steps_[0].push_back(0);
      }
      classes[{root.type, memo_hash(memo_[0])}].push_back(0);
    }
    for (NodeId i = 0; i < nodes_.size(); ++i) {
      if (nodes_[i].depth >= cfg_.max_length || nodes_[i].folded) continue;
      std::uint32_t t = nodes_[i].type;
      nodes_[i].first_child = static_cast<NodeId>(nodes_.size());
      for (std::size_t s = 0; s < applicable_[t].size(); ++s) {
        if (nodes_.size() >= cfg_.node_cap) {
          throw ResourceExceeded("enumeration exceeds node cap of " + std::to_string(cfg_.node_cap));
        }
        Node c;
        c.parent = i;
        c.letter = static_cast<std::uint32_t>(applicable_[t][s]);
        c.type = result_type_index(t, s);
        c.depth = static_cast<std::uint8_t>(nodes_[i].depth + 1);
        nodes_.push_back(c);
        if (oe) {
          NodeId ci = static_cast<NodeId>(nodes_.size() - 1);
          std::vector<Value> m;
          std::vector<std::uint32_t> steps;
          for (std::size_t e = 0; e < cfg_.example_inputs.size(); ++e) {
            Budget b(cfg_.limits);
            b.set_used(memo_steps_[i][e]);
            m.push_back(apply_letter(*vocab_, c.letter, memo_[i][e], types_[t], types_[c.type],
                                     cfg_.example_inputs[e], b));
            steps.push_back(static_cast<std::uint32_t>(b.used()));
          }
          auto& cls = classes[{c.type, memo_hash(m)}];
          for (NodeId other : cls) {
            if (memo_[other] == m) {
              nodes_.back().folded = true;
              break;
            }
          }
          if (!nodes_.back().folded) cls.push_back(ci);
          memo_.push_back(std::move(m));
          memo_steps_.push_back(std::move(steps));
        }
      }
      nodes_[i].child_count = static_cast<std::uint32_t>(nodes_.size() - nodes_[i].first_child);
    }
    memo_steps_.clear();
    memo_steps_.shrink_to_fit();
    count_wellformed();
  }

  std::vector<LetterId> resolve(const std::vector<std::string>& toks) const {
    std::vector<LetterId> out;
    for (const auto& t : toks) out.push_back(vocab_->require(t));
    return out;
  }

  bool ends_with(NodeId i, const std::vector<LetterId>& seq) const {
    for (std::size_t k = seq.size(); k > 0; --k) {
      if (nodes_[i].letter != seq[k - 1]) return false;
      i = nodes_[i].parent;
    }
    return true;
  }

  void clear_subtree(NodeId i, std::vector<char>& mask) const {
    mask[i] = 0;
    const Node& n = nodes_[i];
    for (NodeId c = n.first_child; c < n.first_child + n.child_count; ++c) clear_subtree(c, mask);
  }

  void eval_subtree(NodeId i, const Value& val, std::size_t used, const Predicate& ex, std::vector<char>& mask) const {
    if (val.is_error()) {
      clear_subtree(i, mask);
      return;
    }
    mask[i] = val == ex.output ? 1 : 0;
    const Node& n = nodes_[i];
    for (NodeId c = n.first_child; c < n.first_child + n.child_count; ++c) {
      Budget b(cfg_.limits);
      b.set_used(used);
      Value cv = apply_letter(*vocab_, nodes_[c].letter, val, types_[n.type], types_[nodes_[c].type], ex.input, b);
      eval_subtree(c, cv, b.used(), ex, mask);
    }
  }

  std::shared_ptr<const Vocabulary> vocab_;
  EnumConfig cfg_;
  std::vector<Node> nodes_;
  std::vector<SemType> types_;
  std::vector<std::vector<LetterId>> applicable_;
  std::vector<std::vector<std::uint32_t>> results_;
  std::vector<std::vector<Value>> memo_;
  std::vector<std::vector<std::uint32_t>> memo_steps_;
  std::vector<Predicate> mask_keys_;
  std::deque<std::vector<char>> masks_;  // deque: references handed out stay valid
  std::size_t min_depth_ = 0;
  std::uint64_t total_wellformed_ = 0;
};

inline EnumTree build_tree(std::shared_ptr<const Vocabulary> v, std::size_t max_length, bool oe = false,
                           std::vector<Value> example_inputs = {}, EvalLimits limits = {},
                           std::size_t node_cap = 2'000'000) {
  EnumConfig cfg;
  cfg.max_length = max_length;
  cfg.oe = oe;
  cfg.example_inputs = std::move(example_inputs);
  cfg.limits = limits;
  cfg.node_cap = node_cap;
  return EnumTree::build(std::move(v), std::move(cfg));
}

namespace enum_detail {

/// Checks one node against every predicate. Syntactic predicates are
/// re-checked on the path, so the result does not depend on prior pruning.
class NodeFilter {
 public:
  NodeFilter(EnumTree& tree, std::span<const Predicate> preds, bool show_folded)
      : tree_(tree), show_folded_(show_folded) {
    const Vocabulary& v = tree.vocabulary();
    for (const auto& q : preds) {
      if (q.kind == PredicateKind::Example) {
        masks_.push_back(&tree.example_mask(q));
        continue;
      }
      std::vector<LetterId> ids;
      bool known = true;
      for (const auto& t : q.tokens) {
        auto id = v.find(t);
        if (!id) known = false;
        else ids.push_back(*id);
      }
      // A sequence with unknown tokens never occurs.
      if (!known && q.kind != PredicateKind::Remove) impossible_ = true;
      if (!known) continue;
      syntactic_.push_back({q.kind, std::move(ids)});
    }
  }

  bool matches_examples(NodeId i) const {
    for (const auto* m : masks_) {
      if (!(*m)[i]) return false;
    }
    return true;
  }

  bool accepts(NodeId i) {
    if (impossible_ || !tree_.selectable(i, show_folded_) || !matches_examples(i)) return false;
    if (syntactic_.empty()) return true;
    path_ = tree_.path(i);
    std::span<const LetterId> p(path_);
    for (const auto& [kind, seq] : syntactic_) {
      std::span<const LetterId> s(seq);
      bool ok = kind == PredicateKind::Remove   ? !occurs_contiguously(p, s)
                : kind == PredicateKind::Retain ? occurs_contiguously(p, s)
                                                : starts_with(p, s);
      if (!ok) return false;
    }
    return true;
  }

 private:
  EnumTree& tree_;
  bool show_folded_;
  bool impossible_ = false;
  std::vector<const std::vector<char>*> masks_;
  std::vector<std::pair<PredicateKind, std::vector<LetterId>>> syntactic_;
  std::vector<LetterId> path_;
};

}  // namespace enum_detail

/// Ids of all nodes satisfying every predicate, in tree order.
inline std::vector<NodeId> candidate_ids(EnumTree& tree, std::span<const Predicate> preds, bool show_folded = false) {
  enum_detail::NodeFilter f(tree, preds, show_folded);
  std::vector<NodeId> out;
  for (NodeId i = 0; i < tree.size(); ++i) {
    if (f.accepts(i)) out.push_back(i);
  }
  return out;
}

inline SpaceStats count_space(EnumTree& tree, std::span<const Predicate> preds, bool show_folded = false) {
  SpaceStats s;
  s.total_wellformed = tree.total_wellformed();
  enum_detail::NodeFilter f(tree, preds, show_folded);
  for (NodeId i = 0; i < tree.size(); ++i) {
    if (f.matches_examples(i)) ++s.matching_examples;
    if (f.accepts(i)) ++s.matching_all;
  }
  return s;
}

/// Lazily yields the programs that satisfy all predicates, in tree order.
class CandidateStream {
 public:
  CandidateStream(EnumTree& tree, std::vector<Predicate> preds, bool show_folded = false)
      : tree_(tree), preds_(std::move(preds)), filter_(tree, preds_, show_folded) {}

  std::optional<Program> next() {
    while (pos_ < tree_.size()) {
      NodeId i = pos_++;
      if (filter_.accepts(i)) return tree_.program(i);
    }
    return std::nullopt;
  }

 private:
  EnumTree& tree_;
  std::vector<Predicate> preds_;
  enum_detail::NodeFilter filter_;
  NodeId pos_ = 0;
};

inline CandidateStream iterate_candidates(EnumTree& tree, std::vector<Predicate> preds, bool show_folded = false) {
  return CandidateStream(tree, std::move(preds), show_folded);
}

// ---------------------------------------------------------------------------
// Persisted spaces: one JSON header line, then one line per node
// {"p": parent, "t": token, "f": folded, "m": [memo values]}.

inline void save_space(const EnumTree& tree, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  const auto& cfg = tree.config();
  json header{{"format", "gim-space"},
              {"format_version", kFormatVersion},
              {"vocabulary", tree.vocabulary().name()},
              {"max_length", cfg.max_length},
              {"oe", cfg.oe},
              {"nodes", tree.size()}};
  json inputs = json::array();
  for (const auto& in : cfg.example_inputs) inputs.push_back(value_to_json(in));
  header["example_inputs"] = inputs;
  out << header.dump() << '\n';
  for (NodeId i = 1; i < tree.size(); ++i) {
    const auto& n = tree.node(i);
    json rec{{"p", n.parent}, {"t", tree.vocabulary().letter(n.letter).token_id}, {"f", n.folded}};
    if (cfg.oe) {
      json m = json::array();
      for (const auto& v : tree.memo(i)) m.push_back(value_to_json(v));
      rec["m"] = m;
    }
    out << rec.dump() << '\n';
  }
}

/// Loads a persisted space written by save_space for the same vocabulary and
/// configuration. Returns nullopt if the file is missing or describes a
/// different configuration.
inline std::optional<EnumTree> load_space(std::shared_ptr<const Vocabulary> v, const std::filesystem::path& path,
                                          const EnumConfig& expected) {
  return EnumTree::load(std::move(v), path, expected);
}

}  // namespace gim
