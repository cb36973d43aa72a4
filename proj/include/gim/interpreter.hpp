#pragma once

#include <span>
#include <string>
#include <vector>

#include "gim/builtins.hpp"
#include "gim/program.hpp"
#include "gim/render.hpp"

namespace gim {

/// Applies one letter to a receiver of (static) type `recv_type`. Failures
/// come back as error values; the budget accumulates across calls.
inline Value apply_letter(const Vocabulary& v, LetterId id, const Value& recv, const SemType& recv_type,
                          const SemType& result_type, const Value& input, Budget& budget) {
  if (recv.is_error()) return recv;
  const MethodDescriptor& m = v.letter(id);
  EvalContext ctx{v, input, budget};
  try {
    budget.charge(1);
    Value out = letter_catalog()[m.builtin_index].fn(recv, recv_type, result_type, m.bound_args, ctx);
    budget.check_cells(out);
    return out;
  } catch (const EvalFailure& f) {
    return Value::error(f.kind);
  } catch (const TypeMismatch&) {
    return Value::error(ErrorKind::TypeError);
  }
}

/// Runs `ids` starting from `start` (of type `start_type`). `capture` is the
/// value letters such as zip(input.tail) see as `input`. When `steps` is
/// non-null it receives the value of every prefix, stopping at the first error.
inline Value run_pipeline(std::span<const LetterId> ids, const Value& start, const SemType& start_type,
                          const Value& capture, const Vocabulary& v, const EvalLimits& lim,
                          std::vector<Value>* steps = nullptr) {
  Budget budget(lim);
  Value cur = type_check(start, start_type) ? start : Value::error(ErrorKind::TypeError);
  SemType cur_type = start_type;
  if (steps) steps->push_back(cur);
  for (LetterId id : ids) {
    if (cur.is_error()) break;
    auto next_type = v.letter(id).result_type(cur_type);
    if (!next_type) {
      cur = Value::error(ErrorKind::TypeError);
    } else {
      cur = apply_letter(v, id, cur, cur_type, *next_type, capture, budget);
      cur_type = std::move(*next_type);
    }
    if (steps) steps->push_back(cur);
  }
  return cur;
}

inline Value evaluate_ids(std::span<const LetterId> ids, const Value& input, const Vocabulary& v,
                          const EvalLimits& lim = {}) {
  return run_pipeline(ids, input, v.input_type(), input, v, lim);
}

/// Value of the whole pipeline on `input`, or an error value.
inline Value evaluate(const Program& p, const Value& input, const Vocabulary& v, const EvalLimits& lim = {}) {
  return evaluate_ids(letter_ids(p, v), input, v, lim);
}

struct TraceStep {
  std::size_t prefix_len = 0;
  std::string rendered;
  bool truncated = false;
  Value value;
};

struct DebugTrace {
  std::vector<TraceStep> steps;

  const Value& final_value() const { return steps.back().value; }
};

/// Value of every prefix of `p` on `input`; each letter is applied once.
inline DebugTrace trace(const Program& p, const Value& input, const Vocabulary& v, const EvalLimits& lim = {},
                        std::size_t width = 60) {
  std::vector<Value> values;
  auto ids = letter_ids(p, v);
  run_pipeline(ids, input, v.input_type(), input, v, lim, &values);
  DebugTrace t;
  t.steps.reserve(values.size());
  for (std::size_t k = 0; k < values.size(); ++k) {
    auto r = render_value(values[k], width);
    t.steps.push_back({k, std::move(r.text), r.truncated, std::move(values[k])});
  }
  return t;
}

}  // namespace gim
