#include "canseg/attention_model.h"

#include <algorithm>
#include <cmath>

#include "canseg/errors.h"
#include "canseg/ndiff/ops.h"

namespace canseg {

using ndiff::Tape;
using ndiff::Tensor;
using ndiff::Var;

namespace {

constexpr double kProbabilityFloor = 1e-12;

bool emittable(int v) { return v != kPad && v != kBegin; }

}  // namespace

AttentionModel::AttentionModel(Vocabulary vocab, TrainConfig config)
    : Model(std::move(vocab), std::move(config)) {
  if (config_.kind == ModelKind::kTransducer)
    throw InvalidArgument("AttentionModel built with a transducer configuration");
  Rng rng = Rng(config_.seed).fork(0);
  const int v = vocab_.size();
  const int emb = config_.embedding_size;
  const int enc = config_.encoder_hidden;
  const int dec = config_.decoder_hidden;
  const int ctx = 2 * enc;
  if (copies()) {
    source_embedding_ = ndiff::Embedding::create(params_, "embedding", v, emb, rng);
    target_embedding_ = source_embedding_;
  } else {
    source_embedding_ = ndiff::Embedding::create(params_, "source_embedding", v, emb, rng);
    target_embedding_ = ndiff::Embedding::create(params_, "target_embedding", v, emb, rng);
  }
  encoder_ = ndiff::BiLstm::create(params_, "encoder", emb, enc, rng);
  bridge_ = ndiff::Linear::create(params_, "bridge", ctx, dec, rng);
  decoder_ = ndiff::LstmCell::create(params_, "decoder", emb + ctx, dec, rng);
  attention_ =
      ndiff::AdditiveAttention::create(params_, "attention", ctx, dec, config_.attention_size, rng);
  combine_ = ndiff::Linear::create(params_, "combine", dec + ctx, dec, rng);
  output_ = ndiff::Linear::create(params_, "output", dec, v, rng);
  if (copies()) gate_ = ndiff::Linear::create(params_, "gate", dec + ctx + emb, 1, rng);

  output_mask_.assign(static_cast<size_t>(v), true);
  output_mask_[kPad] = false;
  output_mask_[kBegin] = false;
  output_mask_[kUnknown] = false;
}

std::vector<int> AttentionModel::source_symbols(const std::u32string& surface) const {
  std::vector<int> ids = vocab_.encode(surface);
  ids.push_back(kEnd);
  return ids;
}

int AttentionModel::output_cap(size_t surface_length) const {
  return config_.cap_factor * static_cast<int>(surface_length) + config_.cap_offset;
}

AttentionModel::Encoding AttentionModel::encode(Tape& tape, const std::vector<int>& source,
                                                Rng* dropout) const {
  if (source.empty()) throw InvalidArgument("empty source sequence");
  std::vector<Var> inputs;
  inputs.reserve(source.size());
  for (int s : source) {
    if (s < 0 || s >= vocab_.size())
      throw InvalidArgument("source symbol " + std::to_string(s) + " outside vocabulary of size " +
                            std::to_string(vocab_.size()));
    inputs.push_back(ndiff::dropout(source_embedding_.lookup(tape, s), config_.dropout, dropout));
  }
  const auto states = encoder_.encode(tape, inputs);
  Encoding enc;
  enc.source = source;
  enc.memory = attention_.prepare(tape, states);
  const int h = config_.encoder_hidden;
  Var summary = ndiff::concat({ndiff::slice(states.back(), 0, h), ndiff::slice(states.front(), h, h)});
  enc.initial.h = ndiff::tanh(bridge_.apply(tape, summary));
  enc.initial.c = tape.constant(Tensor({config_.decoder_hidden}));
  return enc;
}

AttentionModel::DecoderState AttentionModel::initial_state(Tape& tape, const Encoding& enc) const {
  DecoderState s;
  s.lstm = enc.initial;
  s.context = tape.constant(Tensor({2 * config_.encoder_hidden}));
  s.previous = kBegin;
  return s;
}

AttentionModel::Step AttentionModel::step(Tape& tape, const Encoding& enc,
                                          const DecoderState& state, Rng* dropout,
                                          std::optional<double> forced_p_gen) const {
  if (state.previous < 0 || state.previous >= vocab_.size())
    throw InvalidArgument("target symbol " + std::to_string(state.previous) +
                          " outside vocabulary of size " + std::to_string(vocab_.size()));
  Var emb = ndiff::dropout(target_embedding_.lookup(tape, state.previous), config_.dropout, dropout);
  Step out;
  out.next.lstm = decoder_.step(tape, ndiff::concat({emb, state.context}), state.lstm);
  const auto att = attention_.attend(tape, enc.memory, out.next.lstm.h);
  out.attention = att.weights;
  out.next.context = att.context;
  Var hidden = ndiff::tanh(combine_.apply(tape, ndiff::concat({out.next.lstm.h, att.context})));
  hidden = ndiff::dropout(hidden, config_.dropout, dropout);
  out.vocab_distribution = ndiff::softmax(output_.apply(tape, hidden), output_mask_);
  if (!copies()) {
    out.distribution = out.vocab_distribution;
    return out;
  }
  if (forced_p_gen) {
    out.p_gen = tape.constant(Tensor::scalar(*forced_p_gen));
  } else {
    out.p_gen = ndiff::sigmoid(gate_.apply(tape, ndiff::concat({out.next.lstm.h, att.context, emb})));
  }
  Var copy = ndiff::scatter_add(att.weights, enc.source, vocab_.size());
  out.distribution = ndiff::add(ndiff::scale_by(out.vocab_distribution, out.p_gen),
                                ndiff::scale_by(copy, ndiff::one_minus(out.p_gen)));
  return out;
}

AttentionModel::Forward AttentionModel::forward(Tape& tape, const std::vector<int>& source,
                                                const std::vector<int>& target, Rng* dropout,
                                                std::optional<double> forced_p_gen) const {
  if (target.size() < 2) throw InvalidArgument("target must contain at least <begin> and <end>");
  for (int s : target)
    if (s < 0 || s >= vocab_.size())
      throw InvalidArgument("target symbol " + std::to_string(s) + " outside vocabulary of size " +
                            std::to_string(vocab_.size()));
  const Encoding enc = encode(tape, source, dropout);
  DecoderState state = initial_state(tape, enc);
  Forward fwd;
  std::vector<Var> terms;
  for (size_t t = 0; t + 1 < target.size(); ++t) {
    state.previous = target[t];
    Step s = step(tape, enc, state, dropout, forced_p_gen);
    terms.push_back(ndiff::cross_entropy(s.distribution, target[t + 1], kProbabilityFloor));
    fwd.attention.push_back(s.attention.value());
    fwd.distributions.push_back(s.distribution.value());
    fwd.vocab_distributions.push_back(s.vocab_distribution.value());
    if (s.p_gen.valid()) fwd.p_gen.push_back(s.p_gen.value().item());
    state = s.next;
  }
  fwd.loss = ndiff::scale(ndiff::add_n(terms), 1.0 / static_cast<double>(terms.size()));
  return fwd;
}

Var AttentionModel::training_loss(Tape& tape, const SegmentationExample& example,
                                  TrainContext& ctx) const {
  const auto target = encode_target(example, vocab_);
  return forward(tape, source_symbols(example.surface), target.symbols, ctx.rng).loss;
}

DecodeResult AttentionModel::render(const std::vector<int>& symbols, double score,
                                    bool complete) const {
  DecodeResult r;
  r.score = score;
  r.complete = complete;
  for (int v : symbols) r.output.push_back(v == kUnknown ? U'\uFFFD' : vocab_.symbol(v));
  return r;
}

DecodeResult AttentionModel::decode(const std::u32string& surface, int beam_width) const {
  return decode_source(source_symbols(surface), beam_width, output_cap(surface.size()));
}

DecodeResult AttentionModel::decode_source(const std::vector<int>& source, int beam_width,
                                           int cap, std::vector<int>* symbols) const {
  if (beam_width < 1) throw InvalidArgument("beam width must be positive");
  DecodeResult g = greedy(source, cap, symbols);
  if (beam_width == 1) return g;
  std::vector<int> beam_symbols;
  DecodeResult b = beam(source, beam_width, cap, &beam_symbols);
  // The greedy path is one of the hypotheses a wider beam could have kept;
  // keeping it as a candidate makes the result never worse than greedy.
  const bool take_greedy = (g.complete && !b.complete) || (g.complete == b.complete && g.score > b.score);
  if (take_greedy) return g;
  if (symbols) *symbols = beam_symbols;
  return b;
}

DecodeResult AttentionModel::greedy(const std::vector<int>& source, int cap,
                                    std::vector<int>* symbols) const {
  Tape tape(false);
  const Encoding enc = encode(tape, source, nullptr);
  DecoderState state = initial_state(tape, enc);
  std::vector<int> out;
  double score = 0;
  bool complete = false;
  while (true) {
    if (static_cast<int>(out.size()) >= cap) break;
    Step s = step(tape, enc, state, nullptr);
    const Tensor& p = s.distribution.value();
    int best = -1;
    for (int v = 0; v < vocab_.size(); ++v)
      if (emittable(v) && (best < 0 || p[v] > p[best])) best = v;
    score += std::log(std::max(p[best], kProbabilityFloor));
    if (best == kEnd) {
      complete = true;
      break;
    }
    out.push_back(best);
    state = s.next;
    state.previous = best;
  }
  if (symbols) *symbols = out;
  return render(out, score, complete);
}

DecodeResult AttentionModel::beam(const std::vector<int>& source, int width, int cap,
                                  std::vector<int>* symbols) const {
  Tape tape(false);
  const Encoding enc = encode(tape, source, nullptr);
  struct Hyp {
    DecoderState state;
    std::vector<int> out;
    double score = 0;
  };
  struct Done {
    std::vector<int> out;
    double score;
    bool complete;
  };
  std::vector<Hyp> open{{initial_state(tape, enc), {}, 0.0}};
  std::vector<Done> done;
  while (!open.empty()) {
    struct Cand {
      size_t hyp;
      int symbol;
      double score;
    };
    std::vector<Cand> cands;
    std::vector<DecoderState> next_states;
    for (size_t h = 0; h < open.size(); ++h) {
      Step s = step(tape, enc, open[h].state, nullptr);
      next_states.push_back(s.next);
      const Tensor& p = s.distribution.value();
      for (int v = 0; v < vocab_.size(); ++v) {
        if (!emittable(v) || p[v] <= 0) continue;
        cands.push_back({h, v, open[h].score + std::log(p[v])});
      }
    }
    std::stable_sort(cands.begin(), cands.end(),
                     [](const Cand& a, const Cand& b) { return a.score > b.score; });
    if (cands.size() > static_cast<size_t>(width)) cands.resize(static_cast<size_t>(width));
    std::vector<Hyp> next;
    for (const auto& c : cands) {
      if (c.symbol == kEnd) {
        done.push_back({open[c.hyp].out, c.score, true});
        continue;
      }
      Hyp h{next_states[c.hyp], open[c.hyp].out, c.score};
      h.state.previous = c.symbol;
      h.out.push_back(c.symbol);
      if (static_cast<int>(h.out.size()) >= cap) {
        done.push_back({h.out, h.score, false});
      } else {
        next.push_back(std::move(h));
      }
    }
    open = std::move(next);
    // Scores only decrease, so no open hypothesis can beat a finished one
    // that already scores at least as well.
    double best_done = -INFINITY;
    for (const auto& d : done)
      if (d.complete) best_done = std::max(best_done, d.score);
    double best_open = -INFINITY;
    for (const auto& h : open) best_open = std::max(best_open, h.score);
    if (best_done >= best_open) break;
  }
  const Done* best = nullptr;
  for (const auto& d : done) {
    if (!best || (d.complete && !best->complete) ||
        (d.complete == best->complete && d.score > best->score))
      best = &d;
  }
  if (!best) return render({}, -INFINITY, false);
  if (symbols) *symbols = best->out;
  return render(best->out, best->score, best->complete);
}

std::vector<double> pointer_mixture(double p_gen, const std::vector<double>& vocab,
                                    const std::vector<double>& attention,
                                    const std::vector<int>& source) {
  if (attention.size() != source.size())
    throw InvalidArgument("attention has " + std::to_string(attention.size()) +
                          " weights for a source of length " + std::to_string(source.size()));
  std::vector<double> out(vocab.size());
  for (size_t v = 0; v < vocab.size(); ++v) out[v] = p_gen * vocab[v];
  for (size_t i = 0; i < source.size(); ++i) {
    if (source[i] < 0 || static_cast<size_t>(source[i]) >= vocab.size())
      throw InvalidArgument("source symbol outside vocabulary");
    out[static_cast<size_t>(source[i])] += (1 - p_gen) * attention[i];
  }
  return out;
}

}  // namespace canseg
