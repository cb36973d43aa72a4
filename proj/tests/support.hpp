#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "gim/gim.hpp"

namespace gt {

inline std::filesystem::path data_dir() { return GIM_TEST_DATA; }
inline std::filesystem::path tasks_dir() { return GIM_TASKS_DIR; }

inline gim::TaskDefinition data_task(const std::string& id) { return gim::find_task(data_dir(), id); }
inline gim::TaskDefinition corpus_task(const std::string& id) { return gim::find_task(tasks_dir(), id); }

inline gim::Value S(std::string_view s) { return gim::Value::str(s); }
inline gim::Value I(std::int64_t i) { return gim::Value::integer(i); }
inline gim::Value C(char32_t c) { return gim::Value::character(c); }
inline gim::Value B(bool b) { return gim::Value::boolean(b); }
inline gim::Value ints(std::vector<std::int64_t> xs) {
  std::vector<gim::Value> out;
  for (auto x : xs) out.push_back(I(x));
  return gim::Value::list(std::move(out), gim::SemType::integer());
}
inline gim::Value strs(std::vector<std::string> xs) {
  std::vector<gim::Value> out;
  for (const auto& x : xs) out.push_back(S(x));
  return gim::Value::list(std::move(out), gim::SemType::str());
}

inline gim::Program P(std::vector<std::string> toks) { return gim::Program{std::move(toks)}; }

/// Runs `tokens` from a value of type `t`; letters capturing `input` see `x`.
inline gim::Value run(const gim::Vocabulary& v, const std::vector<std::string>& tokens, const gim::Value& x,
                      const gim::SemType& t, const gim::EvalLimits& lim = {}) {
  std::vector<gim::LetterId> ids;
  for (const auto& tok : tokens) ids.push_back(v.require(tok));
  return gim::run_pipeline(ids, x, t, x, v, lim);
}

inline std::string show(const gim::Value& v) { return gim::render_full(v); }

}  // namespace gt
