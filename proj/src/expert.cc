#include "canseg/expert.h"

#include <algorithm>
#include <climits>
#include <span>

#include "canseg/data.h"
#include "canseg/errors.h"
#include "canseg/levenshtein.h"

namespace canseg {

namespace {

std::span<const int> view(const std::vector<int>& v) { return {v.data(), v.size()}; }

}  // namespace

bool insertable(int symbol) { return symbol == kBoundary || symbol >= kNumReserved; }

std::string action_name(Action a) {
  switch (a) {
    case kCopy:
      return "COPY";
    case kDelete:
      return "DELETE";
    case kStop:
      return "STOP";
    default:
      return "INSERT(" + std::to_string(inserted_symbol(a)) + ")";
  }
}

bool action_valid(Action a, const Configuration& config, int source_length, int cap,
                  int vocab_size) {
  const bool room = cap < 0 || static_cast<int>(config.emitted.size()) < cap;
  switch (a) {
    case kCopy:
      return config.cursor < source_length && room;
    case kDelete:
      return config.cursor < source_length;
    case kStop:
      return config.cursor == source_length;
    default:
      return room && inserted_symbol(a) < vocab_size && insertable(inserted_symbol(a));
  }
}

std::vector<Action> valid_actions(const Configuration& config, int source_length, int cap,
                                  int vocab_size) {
  std::vector<Action> out;
  for (Action a = 0; a < action_count(vocab_size); ++a)
    if (action_valid(a, config, source_length, cap, vocab_size)) out.push_back(a);
  return out;
}

Configuration apply_action(const Configuration& config, Action a, const std::vector<int>& source) {
  Configuration next = config;
  const int n = static_cast<int>(source.size());
  if (a == kCopy) {
    if (config.cursor >= n) throw InvalidArgument("COPY past the end of the source");
    next.emitted.push_back(source[static_cast<size_t>(config.cursor)]);
    ++next.cursor;
  } else if (a == kDelete) {
    if (config.cursor >= n) throw InvalidArgument("DELETE past the end of the source");
    ++next.cursor;
  } else if (is_insert(a)) {
    if (!insertable(inserted_symbol(a)))
      throw InvalidArgument("cannot insert reserved symbol " + std::to_string(inserted_symbol(a)));
    next.emitted.push_back(inserted_symbol(a));
  } else {
    throw InvalidArgument("STOP has no successor configuration");
  }
  return next;
}

CostToGo::CostToGo(const std::vector<int>& source, const std::vector<int>& target)
    : rows_(source.size() + 1), cols_(target.size() + 1), d_(rows_ * cols_) {
  const int n = static_cast<int>(source.size());
  const int m = static_cast<int>(target.size());
  auto at = [&](int i, int j) -> int& { return d_[static_cast<size_t>(i) * cols_ + j]; };
  for (int i = n; i >= 0; --i) {
    for (int j = m; j >= 0; --j) {
      if (i == n) {
        at(i, j) = m - j;
      } else if (j == m) {
        at(i, j) = n - i;
      } else {
        int best = std::min(at(i + 1, j), at(i, j + 1)) + 1;
        if (source[static_cast<size_t>(i)] == target[static_cast<size_t>(j)])
          best = std::min(best, at(i + 1, j + 1));
        at(i, j) = best;
      }
    }
  }
}

Expert::Expert(std::vector<int> source, std::vector<int> target, int vocab_size, int cap)
    : source_(std::move(source)),
      target_(std::move(target)),
      vocab_size_(vocab_size),
      cap_(cap),
      table_(source_, target_) {
  for (int s : target_) {
    if (!insertable(s)) throw InvalidArgument("target contains reserved symbol " + std::to_string(s));
    if (std::find(target_symbols_.begin(), target_symbols_.end(), s) == target_symbols_.end())
      target_symbols_.push_back(s);
  }
  std::sort(target_symbols_.begin(), target_symbols_.end());
}

SequenceCost Expert::value_from_row(const std::vector<int>& row, int cursor, int* anchor) const {
  SequenceCost best{INT_MAX, INT_MAX};
  int best_j = 0;
  for (int j = 0; j < static_cast<int>(row.size()); ++j) {
    const SequenceCost c{row[static_cast<size_t>(j)], table_(cursor, j)};
    if (c < best) {
      best = c;
      best_j = j;
    }
  }
  if (anchor) *anchor = best_j;
  return best;
}

SequenceCost Expert::value(const Configuration& config) const {
  return value_from_row(levenshtein_prefix_row(view(config.emitted), view(target_)),
                        config.cursor, nullptr);
}

ExpertAdvice Expert::advise(const Configuration& config) const {
  const int n = static_cast<int>(source_.size());
  if (config.cursor < 0 || config.cursor > n)
    throw InvalidArgument("cursor " + std::to_string(config.cursor) + " outside source of length " +
                          std::to_string(n));
  const auto row = levenshtein_prefix_row(view(config.emitted), view(target_));
  ExpertAdvice advice;
  advice.cost_to_go = value_from_row(row, config.cursor, &advice.anchor);

  SequenceCost best{INT_MAX, INT_MAX};
  auto consider = [&](Action a, SequenceCost c) {
    c.actions += action_cost(a);
    if (c < best) {
      best = c;
      advice.actions.clear();
    }
    if (c == best) advice.actions.push_back(a);
  };
  auto valid = [&](Action a) { return action_valid(a, config, n, cap_, vocab_size_); };

  if (valid(kCopy)) {
    const int c = config.cursor;
    consider(kCopy, value_from_row(
                        levenshtein_extend_row(row, source_[static_cast<size_t>(c)], view(target_)),
                        c + 1, nullptr));
  }
  if (valid(kDelete)) consider(kDelete, value_from_row(row, config.cursor + 1, nullptr));
  if (valid(kStop)) consider(kStop, SequenceCost{row.back(), 0});
  // Inserting a symbol absent from the target never lowers the cost, so only
  // target symbols are candidates.
  for (int s : target_symbols_) {
    const Action a = insert_action(s);
    if (!valid(a)) continue;
    consider(a, value_from_row(levenshtein_extend_row(row, s, view(target_)), config.cursor,
                               nullptr));
  }
  std::sort(advice.actions.begin(), advice.actions.end());
  return advice;
}

std::vector<int> Expert::complete(Configuration config, int* actions_taken) const {
  int taken = 0;
  const size_t limit = 4 * (source_.size() + target_.size() + config.emitted.size()) + 16;
  for (size_t step = 0;; ++step) {
    if (step > limit) throw Error("expert completion did not terminate");
    const Action a = advise(config).actions.front();
    taken += action_cost(a);
    if (a == kStop) break;
    config = apply_action(config, a, source_);
  }
  if (actions_taken) *actions_taken = taken;
  return config.emitted;
}

std::vector<std::pair<Action, SequenceCost>> Expert::rollout_costs(
    const Configuration& config) const {
  std::vector<std::pair<Action, SequenceCost>> out;
  const int n = static_cast<int>(source_.size());
  for (Action a : valid_actions(config, n, cap_, vocab_size_)) {
    if (a == kStop) {
      out.emplace_back(a, SequenceCost{levenshtein(config.emitted, target_), 0});
      continue;
    }
    int taken = 0;
    const auto output = complete(apply_action(config, a, source_), &taken);
    out.emplace_back(a, SequenceCost{levenshtein(output, target_), taken + action_cost(a)});
  }
  return out;
}

std::vector<Action> rollout_argmin(const std::vector<std::pair<Action, SequenceCost>>& costs) {
  std::vector<Action> out;
  if (costs.empty()) return out;
  SequenceCost best = costs.front().second;
  for (const auto& [a, c] : costs) best = std::min(best, c);
  for (const auto& [a, c] : costs)
    if (c == best) out.push_back(a);
  std::sort(out.begin(), out.end());
  return out;
}

nlohmann::json Trace::to_json(const std::function<std::string(int)>& render) const {
  auto text = [&](const std::vector<int>& symbols) {
    std::string s;
    for (int v : symbols) s += render(v);
    return s;
  };
  auto name = [&](Action a) {
    return is_insert(a) ? "INSERT(" + render(inserted_symbol(a)) + ")" : action_name(a);
  };
  nlohmann::json doc = {{"source", text(source)}, {"target", text(target)}};
  nlohmann::json steps_doc = nlohmann::json::array();
  for (const auto& s : steps) {
    nlohmann::json optimal = nlohmann::json::array();
    for (Action a : s.optimal) optimal.push_back(name(a));
    steps_doc.push_back({{"cursor", s.config.cursor},
                         {"emitted", text(s.config.emitted)},
                         {"optimal_actions", optimal},
                         {"chosen", name(s.chosen)},
                         {"from_expert", s.from_expert}});
  }
  doc["steps"] = std::move(steps_doc);
  doc["output"] = text(output);
  return doc;
}

Trace expert_rollin(const Expert& expert, Rng& rng, int max_steps) {
  Trace trace;
  trace.source = expert.source();
  trace.target = expert.target();
  Configuration config;
  const int limit = max_steps >= 0
                        ? max_steps
                        : 2 * static_cast<int>(expert.source().size() + expert.target().size()) + 2;
  for (int step = 0; step < limit; ++step) {
    TraceStep s;
    s.config = config;
    s.optimal = expert.optimal_actions(config);
    s.chosen = s.optimal[rng.uniform_int(s.optimal.size())];
    trace.steps.push_back(s);
    if (s.chosen == kStop) {
      trace.stopped = true;
      break;
    }
    config = apply_action(config, s.chosen, expert.source());
  }
  trace.output = config.emitted;
  return trace;
}

}  // namespace canseg
