#ifndef CANSEG_TRANSDUCER_H_
#define CANSEG_TRANSDUCER_H_

#include <vector>

#include "canseg/expert.h"
#include "canseg/model.h"
#include "canseg/ndiff/layers.h"

namespace canseg {

// Hard-monotonic-attention transducer over edit actions. The encoder reads
// the surface followed by the end symbol, so it yields |x| + 1 states; the
// decoder consumes [encoder state at the cursor; embedding of the previous
// action] and scores every action, invalid ones masked to probability 0.
class TransducerModel : public Model {
 public:
  TransducerModel(Vocabulary vocab, TrainConfig config);

  ModelKind kind() const override { return ModelKind::kTransducer; }
  int num_actions() const { return action_count(vocab_.size()); }

  // Longest training target in content symbols (boundaries included).
  int max_target_length() const { return max_target_length_; }
  void set_max_target_length(int n) { max_target_length_ = n; }
  // |x| + max target length + cap margin.
  int output_cap(size_t source_length) const;

  void prepare(const Corpus& train) override;

  // Content indices of the target morphemes joined by boundaries.
  std::vector<int> target_symbols(const Morphemes& morphemes) const;

  struct Encoding {
    std::vector<int> source;        // content indices, no end symbol
    std::vector<ndiff::Var> states; // |source| + 1 rows
  };
  Encoding encode(ndiff::Tape& tape, const std::vector<int>& source, Rng* dropout) const;

  struct State {
    ndiff::LstmState lstm;
    Action previous = -1;  // -1 before the first action
    Configuration config;
  };
  State initial_state(ndiff::Tape& tape) const;

  struct Step {
    ndiff::Var logits;
    ndiff::Var distribution;  // masked softmax
    std::vector<bool> valid;
    ndiff::LstmState lstm;
  };
  Step step(ndiff::Tape& tape, const Encoding& enc, const State& state, int cap,
            Rng* dropout) const;

  // Roll-in without dropout: at every step, with probability p_expert take a
  // uniformly drawn expert-optimal action, otherwise sample the model.
  Trace roll_in(const std::vector<int>& source, const std::vector<int>& target, double p_expert,
                Rng& rng) const;

  // Sum over trace steps of -log sum_{a optimal} pi(a | config), replaying
  // the trace's chosen actions.
  ndiff::Var il_loss(ndiff::Tape& tape, const Trace& trace, Rng* dropout) const;

  // Roll-in and loss in one pass, with dropout.
  ndiff::Var training_loss(ndiff::Tape& tape, const SegmentationExample& example,
                           TrainContext& ctx) const override;

  struct ActionDecode {
    DecodeResult result;
    std::vector<Action> actions;
    std::vector<int> cursors;  // cursor before each action
  };
  ActionDecode decode_actions(const std::u32string& surface, int beam_width) const;
  DecodeResult decode(const std::u32string& surface, int beam_width) const override {
    return decode_actions(surface, beam_width).result;
  }

  nlohmann::json extra_metadata() const override;
  void load_extra_metadata(const nlohmann::json& doc) override;

 private:
  ndiff::Var run(ndiff::Tape& tape, const std::vector<int>& source,
                 const std::vector<int>& target, double p_expert, Rng* sampler, Rng* dropout,
                 const Trace* forced, Trace* record) const;
  ActionDecode greedy(const std::u32string& surface, const std::vector<int>& source) const;
  ActionDecode beam(const std::u32string& surface, const std::vector<int>& source,
                    int width) const;

  ndiff::Embedding char_embedding_;
  ndiff::Embedding action_embedding_;
  ndiff::BiLstm encoder_;
  ndiff::LstmCell decoder_;
  ndiff::Linear output_;
  int max_target_length_ = 0;
};

// Output symbol produced by an action at a cursor, or 0 for none.
char32_t emitted_char(const Vocabulary& vocab, const std::u32string& surface, int cursor,
                      Action a);

}  // namespace canseg

#endif  // CANSEG_TRANSDUCER_H_
