#ifndef CANSEG_EXPERT_H_
#define CANSEG_EXPERT_H_

#include <compare>
#include <functional>
#include <string>
#include <vector>

#include "canseg/rng.h"
#include "nlohmann/json.hpp"

namespace canseg {

// Edit actions of the transducer, encoded as integers:
//   0 COPY, 1 DELETE, 2 STOP, 3 + v INSERT(v) for vocabulary index v.
using Action = int;
inline constexpr Action kCopy = 0;
inline constexpr Action kDelete = 1;
inline constexpr Action kStop = 2;
inline constexpr int kInsertBase = 3;

inline Action insert_action(int symbol) { return kInsertBase + symbol; }
inline bool is_insert(Action a) { return a >= kInsertBase; }
inline int inserted_symbol(Action a) { return a - kInsertBase; }
inline int action_count(int vocab_size) { return kInsertBase + vocab_size; }

// INSERT may emit any content symbol or the boundary, but never pad, begin,
// end or unknown.
bool insertable(int symbol);

std::string action_name(Action a);

// Decoding state as seen by the expert.
struct Configuration {
  int cursor = 0;
  std::vector<int> emitted;
};

// Validity of `a` for a source of length n, with COPY and INSERT disabled
// once the output reaches `cap` (cap < 0 disables the limit).
bool action_valid(Action a, const Configuration& config, int source_length, int cap,
                  int vocab_size);
std::vector<Action> valid_actions(const Configuration& config, int source_length, int cap,
                                  int vocab_size);
// Returns the successor configuration. Throws InvalidArgument for STOP or an
// action that is invalid at `config`.
Configuration apply_action(const Configuration& config, Action a, const std::vector<int>& source);

// Unit costs: DELETE and INSERT cost 1, COPY and STOP are free.
inline int action_cost(Action a) { return a == kDelete || is_insert(a) ? 1 : 0; }

// D[i][j]: minimal action cost transducing source[i:] into target[j:] with
// copy = 0, delete = 1, insert = 1.
class CostToGo {
 public:
  CostToGo(const std::vector<int>& source, const std::vector<int>& target);

  int operator()(int i, int j) const { return d_[static_cast<size_t>(i) * cols_ + j]; }
  int total() const { return (*this)(0, 0); }
  int source_length() const { return static_cast<int>(rows_ - 1); }
  int target_length() const { return static_cast<int>(cols_ - 1); }

 private:
  size_t rows_;
  size_t cols_;
  std::vector<int> d_;
};

// Sequence-level cost of a completed action sequence, ordered
// lexicographically: first the Levenshtein distance of the output to the
// target, then the number of unit-cost actions.
struct SequenceCost {
  int distance = 0;
  int actions = 0;

  auto operator<=>(const SequenceCost&) const = default;
};

struct ExpertAdvice {
  // Smallest target prefix length j minimizing (Lev(emitted, target[:j]),
  // D[cursor][j]).
  int anchor = 0;
  // Best achievable cost of the remainder from this configuration.
  SequenceCost cost_to_go;
  // Valid actions a minimizing action_cost(a) + cost_to_go(a(config)).
  std::vector<Action> actions;
};

class Expert {
 public:
  Expert(std::vector<int> source, std::vector<int> target, int vocab_size, int cap = -1);

  const std::vector<int>& source() const { return source_; }
  const std::vector<int>& target() const { return target_; }
  const CostToGo& table() const { return table_; }
  int cap() const { return cap_; }

  // Best achievable (distance, unit actions) of any completion.
  SequenceCost value(const Configuration& config) const;
  ExpertAdvice advise(const Configuration& config) const;
  std::vector<Action> optimal_actions(const Configuration& config) const {
    return advise(config).actions;
  }

  // Completes `config` by always taking the first optimal action.
  // `actions_taken` receives the number of unit-cost actions used.
  std::vector<int> complete(Configuration config, int* actions_taken = nullptr) const;

  // For every valid action: execute it, then follow the expert greedily to
  // STOP. Cost = (Lev(final output, target), unit actions including a).
  std::vector<std::pair<Action, SequenceCost>> rollout_costs(const Configuration& config) const;

 private:
  SequenceCost value_from_row(const std::vector<int>& row, int cursor, int* anchor) const;

  std::vector<int> source_;
  std::vector<int> target_;
  int vocab_size_;
  int cap_;
  CostToGo table_;
  std::vector<int> target_symbols_;  // distinct insertable target symbols
};

// Actions of the rollout minimum.
std::vector<Action> rollout_argmin(const std::vector<std::pair<Action, SequenceCost>>& costs);

// One configuration visited during roll-in.
struct TraceStep {
  Configuration config;
  std::vector<Action> optimal;
  Action chosen = kStop;
  bool from_expert = true;
};

struct Trace {
  std::vector<int> source;
  std::vector<int> target;
  std::vector<TraceStep> steps;
  std::vector<int> output;
  bool stopped = false;  // false if the cap forced termination

  // {source, target, steps: [{cursor, emitted, optimal_actions, chosen}]},
  // symbols rendered through `render` (vocabulary index -> text).
  nlohmann::json to_json(const std::function<std::string(int)>& render) const;
};

// Roll-in following only the expert, choosing uniformly among optimal
// actions.
Trace expert_rollin(const Expert& expert, Rng& rng, int max_steps = -1);

}  // namespace canseg

#endif  // CANSEG_EXPERT_H_
