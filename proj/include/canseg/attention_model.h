#ifndef CANSEG_ATTENTION_MODEL_H_
#define CANSEG_ATTENTION_MODEL_H_

#include <optional>
#include <vector>

#include "canseg/model.h"
#include "canseg/ndiff/layers.h"

namespace canseg {

// Character-level attention encoder-decoder. With kind s2s it is the plain
// baseline (separate source and target embeddings); with kind pgnet every
// step mixes the vocabulary distribution with a copy distribution over the
// source through a learned gate, and embeddings are shared.
//
// The source is the surface followed by the end symbol. The decoder is
// initialized from the final encoder states and fed [embedding of previous
// output; previous context] at each step.
class AttentionModel : public Model {
 public:
  AttentionModel(Vocabulary vocab, TrainConfig config);

  ModelKind kind() const override { return config_.kind; }
  bool copies() const { return config_.kind == ModelKind::kPGNet; }

  // Vocabulary indices of the surface plus the end symbol.
  std::vector<int> source_symbols(const std::u32string& surface) const;
  // cap_factor * |surface| + cap_offset content symbols.
  int output_cap(size_t surface_length) const;

  struct Encoding {
    std::vector<int> source;
    ndiff::AdditiveAttention::Memory memory;
    ndiff::LstmState initial;
  };
  // `dropout` null means inference.
  Encoding encode(ndiff::Tape& tape, const std::vector<int>& source, Rng* dropout) const;

  struct DecoderState {
    ndiff::LstmState lstm;
    ndiff::Var context;
    int previous = kBegin;
  };
  DecoderState initial_state(ndiff::Tape& tape, const Encoding& enc) const;

  struct Step {
    ndiff::Var distribution;        // final distribution over the vocabulary
    ndiff::Var vocab_distribution;  // generation distribution
    ndiff::Var attention;           // over source positions
    ndiff::Var p_gen;               // size-1 gate value (pgnet only)
    DecoderState next;
  };
  // One decoder step consuming state.previous. For pgnet, `forced_p_gen`
  // replaces the gate output.
  Step step(ndiff::Tape& tape, const Encoding& enc, const DecoderState& state, Rng* dropout,
            std::optional<double> forced_p_gen = std::nullopt) const;

  struct Forward {
    ndiff::Var loss;  // mean per-step cross-entropy
    std::vector<ndiff::Tensor> attention;
    std::vector<ndiff::Tensor> distributions;
    std::vector<ndiff::Tensor> vocab_distributions;
    std::vector<double> p_gen;
  };
  // Teacher-forced pass over a framed target (<begin> ... <end>). Throws
  // InvalidArgument for indices outside the vocabulary.
  Forward forward(ndiff::Tape& tape, const std::vector<int>& source,
                  const std::vector<int>& target, Rng* dropout,
                  std::optional<double> forced_p_gen = std::nullopt) const;

  ndiff::Var training_loss(ndiff::Tape& tape, const SegmentationExample& example,
                           TrainContext& ctx) const override;

  DecodeResult decode(const std::u32string& surface, int beam_width) const override;
  // Decodes vocabulary indices; `symbols` receives the content indices.
  DecodeResult decode_source(const std::vector<int>& source, int beam_width, int cap,
                             std::vector<int>* symbols = nullptr) const;

 private:
  DecodeResult greedy(const std::vector<int>& source, int cap, std::vector<int>* symbols) const;
  DecodeResult beam(const std::vector<int>& source, int width, int cap,
                    std::vector<int>* symbols) const;
  DecodeResult render(const std::vector<int>& symbols, double score, bool complete) const;

  ndiff::Embedding source_embedding_;
  ndiff::Embedding target_embedding_;
  ndiff::BiLstm encoder_;
  ndiff::Linear bridge_;
  ndiff::LstmCell decoder_;
  ndiff::AdditiveAttention attention_;
  ndiff::Linear combine_;
  ndiff::Linear output_;
  ndiff::Linear gate_;
  std::vector<bool> output_mask_;
};

// final[v] = p_gen * vocab[v] + (1 - p_gen) * sum_{i: source[i] = v} attention[i].
std::vector<double> pointer_mixture(double p_gen, const std::vector<double>& vocab,
                                    const std::vector<double>& attention,
                                    const std::vector<int>& source);

}  // namespace canseg

#endif  // CANSEG_ATTENTION_MODEL_H_
