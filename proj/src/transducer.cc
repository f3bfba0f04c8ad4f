#include "canseg/transducer.h"

#include <algorithm>
#include <cmath>

#include "canseg/errors.h"
#include "canseg/ndiff/ops.h"

namespace canseg {

using ndiff::Tape;
using ndiff::Tensor;
using ndiff::Var;

TransducerModel::TransducerModel(Vocabulary vocab, TrainConfig config)
    : Model(std::move(vocab), std::move(config)) {
  if (config_.kind != ModelKind::kTransducer)
    throw InvalidArgument("TransducerModel needs a transducer configuration");
  Rng rng = Rng(config_.seed).fork(0);
  const int enc = config_.encoder_hidden;
  char_embedding_ =
      ndiff::Embedding::create(params_, "embedding", vocab_.size(), config_.embedding_size, rng);
  // One extra row for the "no previous action" start symbol.
  action_embedding_ = ndiff::Embedding::create(params_, "action_embedding", num_actions() + 1,
                                               config_.action_embedding_size, rng);
  encoder_ = ndiff::BiLstm::create(params_, "encoder", config_.embedding_size, enc, rng);
  decoder_ = ndiff::LstmCell::create(params_, "decoder", 2 * enc + config_.action_embedding_size,
                                     config_.decoder_hidden, rng);
  output_ = ndiff::Linear::create(params_, "output", config_.decoder_hidden, num_actions(), rng);
}

int TransducerModel::output_cap(size_t source_length) const {
  return static_cast<int>(source_length) + max_target_length_ + config_.cap_margin;
}

std::vector<int> TransducerModel::target_symbols(const Morphemes& morphemes) const {
  const auto framed = encode_target(morphemes, vocab_).symbols;
  return {framed.begin() + 1, framed.end() - 1};
}

void TransducerModel::prepare(const Corpus& train) {
  int longest = 0;
  for (const auto& ex : train.examples)
    longest = std::max(longest, static_cast<int>(join_morphemes(ex.morphemes).size()));
  max_target_length_ = longest;
}

TransducerModel::Encoding TransducerModel::encode(Tape& tape, const std::vector<int>& source,
                                                  Rng* dropout) const {
  std::vector<Var> inputs;
  inputs.reserve(source.size() + 1);
  for (int s : source) {
    if (s < 0 || s >= vocab_.size())
      throw InvalidArgument("source symbol " + std::to_string(s) + " outside vocabulary of size " +
                            std::to_string(vocab_.size()));
    inputs.push_back(ndiff::dropout(char_embedding_.lookup(tape, s), config_.dropout, dropout));
  }
  inputs.push_back(ndiff::dropout(char_embedding_.lookup(tape, kEnd), config_.dropout, dropout));
  Encoding enc;
  enc.source = source;
  enc.states = encoder_.encode(tape, inputs);
  return enc;
}

TransducerModel::State TransducerModel::initial_state(Tape& tape) const {
  State s;
  s.lstm = decoder_.zero_state(tape);
  return s;
}

TransducerModel::Step TransducerModel::step(Tape& tape, const Encoding& enc, const State& state,
                                            int cap, Rng* dropout) const {
  const int n = static_cast<int>(enc.source.size());
  if (state.config.cursor < 0 || state.config.cursor > n)
    throw InvalidArgument("cursor outside the source");
  const int prev = state.previous < 0 ? num_actions() : state.previous;
  Var act = ndiff::dropout(action_embedding_.lookup(tape, prev), config_.dropout, dropout);
  Step out;
  out.lstm = decoder_.step(
      tape, ndiff::concat({enc.states[static_cast<size_t>(state.config.cursor)], act}), state.lstm);
  Var hidden = ndiff::dropout(out.lstm.h, config_.dropout, dropout);
  out.logits = output_.apply(tape, hidden);
  out.valid.resize(static_cast<size_t>(num_actions()));
  for (Action a = 0; a < num_actions(); ++a)
    out.valid[static_cast<size_t>(a)] = action_valid(a, state.config, n, cap, vocab_.size());
  out.distribution = ndiff::softmax(out.logits, out.valid);
  return out;
}

Var TransducerModel::run(Tape& tape, const std::vector<int>& source,
                         const std::vector<int>& target, double p_expert, Rng* sampler,
                         Rng* dropout, const Trace* forced, Trace* record) const {
  const int cap = output_cap(source.size());
  const Expert expert(source, target, vocab_.size(), cap);
  const Encoding enc = encode(tape, source, dropout);
  State state = initial_state(tape);
  std::vector<Var> terms;
  if (record) {
    record->source = source;
    record->target = target;
    record->steps.clear();
    record->stopped = false;
  }
  const size_t limit = forced ? forced->steps.size() : 2 * (source.size() + static_cast<size_t>(cap)) + 2;
  for (size_t t = 0; t < limit; ++t) {
    Step s = step(tape, enc, state, cap, dropout);
    TraceStep ts;
    ts.config = state.config;
    ts.optimal = forced ? forced->steps[t].optimal : expert.optimal_actions(state.config);
    if (ts.optimal.empty()) throw Error("expert returned no optimal action");
    std::vector<int> valid_ids;
    for (Action a = 0; a < num_actions(); ++a)
      if (s.valid[static_cast<size_t>(a)]) valid_ids.push_back(a);
    for (Action a : ts.optimal)
      if (!s.valid[static_cast<size_t>(a)]) throw Error("optimal action " + action_name(a) + " is invalid");
    terms.push_back(ndiff::sub(ndiff::logsumexp(s.logits, valid_ids),
                               ndiff::logsumexp(s.logits, ts.optimal)));

    if (forced) {
      ts.chosen = forced->steps[t].chosen;
      ts.from_expert = forced->steps[t].from_expert;
    } else if (sampler->bernoulli(p_expert)) {
      ts.chosen = ts.optimal[sampler->uniform_int(ts.optimal.size())];
      ts.from_expert = true;
    } else {
      const Tensor& p = s.distribution.value();
      const double u = sampler->uniform01();
      double cum = 0;
      ts.chosen = valid_ids.back();
      for (int a : valid_ids) {
        cum += p[a];
        if (u < cum) {
          ts.chosen = a;
          break;
        }
      }
      ts.from_expert = false;
    }
    if (record) record->steps.push_back(ts);
    if (ts.chosen == kStop) {
      if (record) record->stopped = true;
      break;
    }
    state.config = apply_action(state.config, ts.chosen, source);
    state.lstm = s.lstm;
    state.previous = ts.chosen;
  }
  if (record) record->output = state.config.emitted;
  return ndiff::add_n(terms);
}

Trace TransducerModel::roll_in(const std::vector<int>& source, const std::vector<int>& target,
                               double p_expert, Rng& rng) const {
  if (p_expert < 0 || p_expert > 1) throw InvalidArgument("p_expert must lie in [0, 1]");
  Tape tape(false);
  Trace trace;
  run(tape, source, target, p_expert, &rng, nullptr, nullptr, &trace);
  return trace;
}

Var TransducerModel::il_loss(Tape& tape, const Trace& trace, Rng* dropout) const {
  if (trace.steps.empty()) throw InvalidArgument("empty roll-in trace");
  return run(tape, trace.source, trace.target, 1.0, nullptr, dropout, &trace, nullptr);
}

Var TransducerModel::training_loss(Tape& tape, const SegmentationExample& example,
                                   TrainContext& ctx) const {
  Rng* rng = ctx.rng;
  Rng fallback(config_.seed);
  if (!rng) rng = &fallback;
  return run(tape, vocab_.encode(example.surface), target_symbols(example.morphemes),
             ctx.p_expert, rng, ctx.rng, nullptr, nullptr);
}

char32_t emitted_char(const Vocabulary& vocab, const std::u32string& surface, int cursor,
                      Action a) {
  if (a == kCopy) return surface[static_cast<size_t>(cursor)];
  if (is_insert(a)) return vocab.symbol(inserted_symbol(a));
  return 0;
}

TransducerModel::ActionDecode TransducerModel::decode_actions(const std::u32string& surface,
                                                              int beam_width) const {
  if (beam_width < 1) throw InvalidArgument("beam width must be positive");
  const auto source = vocab_.encode(surface);
  ActionDecode g = greedy(surface, source);
  if (beam_width == 1) return g;
  ActionDecode b = beam(surface, source, beam_width);
  const bool take_greedy =
      (g.result.complete && !b.result.complete) ||
      (g.result.complete == b.result.complete && g.result.score > b.result.score);
  return take_greedy ? g : b;
}

TransducerModel::ActionDecode TransducerModel::greedy(const std::u32string& surface,
                                                      const std::vector<int>& source) const {
  Tape tape(false);
  const int cap = output_cap(source.size());
  const Encoding enc = encode(tape, source, nullptr);
  State state = initial_state(tape);
  ActionDecode out;
  const size_t limit = 2 * (source.size() + static_cast<size_t>(cap)) + 2;
  out.result.complete = false;
  for (size_t t = 0; t < limit; ++t) {
    Step s = step(tape, enc, state, cap, nullptr);
    const Tensor& p = s.distribution.value();
    int best = -1;
    for (Action a = 0; a < num_actions(); ++a)
      if (s.valid[static_cast<size_t>(a)] && (best < 0 || p[a] > p[best])) best = a;
    out.result.score += std::log(p[best]);
    out.actions.push_back(best);
    out.cursors.push_back(state.config.cursor);
    if (best == kStop) {
      out.result.complete = true;
      break;
    }
    if (char32_t c = emitted_char(vocab_, surface, state.config.cursor, best)) out.result.output += c;
    state.config = apply_action(state.config, best, source);
    state.lstm = s.lstm;
    state.previous = best;
  }
  return out;
}

TransducerModel::ActionDecode TransducerModel::beam(const std::u32string& surface,
                                                    const std::vector<int>& source,
                                                    int width) const {
  Tape tape(false);
  const int cap = output_cap(source.size());
  const Encoding enc = encode(tape, source, nullptr);
  struct Hyp {
    State state;
    ActionDecode dec;
  };
  std::vector<Hyp> open(1);
  open[0].state = initial_state(tape);
  std::vector<ActionDecode> done;
  const size_t limit = 2 * (source.size() + static_cast<size_t>(cap)) + 2;
  for (size_t t = 0; t < limit && !open.empty(); ++t) {
    struct Cand {
      size_t hyp;
      Action action;
      double score;
    };
    std::vector<Cand> cands;
    std::vector<ndiff::LstmState> next_lstm;
    for (size_t h = 0; h < open.size(); ++h) {
      Step s = step(tape, enc, open[h].state, cap, nullptr);
      next_lstm.push_back(s.lstm);
      const Tensor& p = s.distribution.value();
      for (Action a = 0; a < num_actions(); ++a) {
        if (!s.valid[static_cast<size_t>(a)] || p[a] <= 0) continue;
        cands.push_back({h, a, open[h].dec.result.score + std::log(p[a])});
      }
    }
    std::stable_sort(cands.begin(), cands.end(),
                     [](const Cand& a, const Cand& b) { return a.score > b.score; });
    if (cands.size() > static_cast<size_t>(width)) cands.resize(static_cast<size_t>(width));
    std::vector<Hyp> next;
    for (const auto& c : cands) {
      Hyp h = open[c.hyp];
      h.dec.result.score = c.score;
      h.dec.actions.push_back(c.action);
      h.dec.cursors.push_back(h.state.config.cursor);
      if (c.action == kStop) {
        h.dec.result.complete = true;
        done.push_back(std::move(h.dec));
        continue;
      }
      if (char32_t ch = emitted_char(vocab_, surface, h.state.config.cursor, c.action))
        h.dec.result.output += ch;
      h.state.config = apply_action(h.state.config, c.action, source);
      h.state.lstm = next_lstm[c.hyp];
      h.state.previous = c.action;
      next.push_back(std::move(h));
    }
    open = std::move(next);
    double best_done = -INFINITY;
    for (const auto& d : done) best_done = std::max(best_done, d.result.score);
    double best_open = -INFINITY;
    for (const auto& h : open) best_open = std::max(best_open, h.dec.result.score);
    if (best_done >= best_open) break;
  }
  for (auto& h : open) {
    h.dec.result.complete = false;
    done.push_back(std::move(h.dec));
  }
  const ActionDecode* best = nullptr;
  for (const auto& d : done) {
    if (!best || (d.result.complete && !best->result.complete) ||
        (d.result.complete == best->result.complete && d.result.score > best->result.score))
      best = &d;
  }
  if (!best) {
    ActionDecode empty;
    empty.result.complete = false;
    empty.result.score = -INFINITY;
    return empty;
  }
  return *best;
}

nlohmann::json TransducerModel::extra_metadata() const {
  return {{"max_target_length", max_target_length_}};
}

void TransducerModel::load_extra_metadata(const nlohmann::json& doc) {
  max_target_length_ = doc.value("max_target_length", 0);
}

}  // namespace canseg
