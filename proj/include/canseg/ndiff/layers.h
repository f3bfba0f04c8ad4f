#ifndef CANSEG_NDIFF_LAYERS_H_
#define CANSEG_NDIFF_LAYERS_H_

#include <string>
#include <vector>

#include "canseg/ndiff/graph.h"
#include "canseg/ndiff/ops.h"

namespace canseg::ndiff {

struct LstmState {
  Var h;
  Var c;
};

// One LSTM cell with separate input, forget, output and candidate gates.
// Each gate has a (hidden x (input + hidden)) weight and a (hidden) bias.
struct LstmCell {
  int input_size = 0;
  int hidden_size = 0;
  Parameter* w_input = nullptr;
  Parameter* w_forget = nullptr;
  Parameter* w_output = nullptr;
  Parameter* w_candidate = nullptr;
  Parameter* b_input = nullptr;
  Parameter* b_forget = nullptr;
  Parameter* b_output = nullptr;
  Parameter* b_candidate = nullptr;

  // Glorot weights, zero biases except the forget bias, which starts at 1.
  static LstmCell create(ParameterSet& params, const std::string& prefix, int input_size,
                         int hidden_size, Rng& rng);

  LstmState zero_state(Tape& tape) const;
  LstmState step(Tape& tape, Var x, const LstmState& prev) const;
};

// Forward and backward cells over the same inputs.
struct BiLstm {
  LstmCell forward;
  LstmCell backward;

  static BiLstm create(ParameterSet& params, const std::string& prefix, int input_size,
                       int hidden_size, Rng& rng);
  int output_size() const { return forward.hidden_size + backward.hidden_size; }

  // Output t is [forward h_t ; backward h_t]. Throws for empty input.
  std::vector<Var> encode(Tape& tape, const std::vector<Var>& inputs) const;
};

struct Linear {
  Parameter* weight = nullptr;
  Parameter* bias = nullptr;

  static Linear create(ParameterSet& params, const std::string& prefix, int in, int out,
                       Rng& rng);
  Var apply(Tape& tape, Var x) const;
};

struct Embedding {
  Parameter* table = nullptr;

  static Embedding create(ParameterSet& params, const std::string& name, int count, int dim,
                          Rng& rng);
  int dim() const { return table->value.cols(); }
  Var lookup(Tape& tape, int index) const { return tape.lookup(*table, index); }
};

// Additive attention: score_i = v . tanh(K_i + W_q q + b), K = H W_k^T
// precomputed once per source.
struct AdditiveAttention {
  Parameter* w_key = nullptr;    // (attn x key_size)
  Parameter* w_query = nullptr;  // (attn x query_size)
  Parameter* bias = nullptr;     // (attn)
  Parameter* v = nullptr;        // (attn)

  static AdditiveAttention create(ParameterSet& params, const std::string& prefix,
                                  int key_size, int query_size, int attn_size, Rng& rng);

  struct Memory {
    Var states;             // (L x key_size)
    Var states_transposed;  // (key_size x L)
    Var keys;               // (L x attn)
  };
  Memory prepare(Tape& tape, const std::vector<Var>& states) const;

  struct Result {
    Var weights;  // (L), a distribution
    Var context;  // (key_size)
  };
  Result attend(Tape& tape, const Memory& memory, Var query) const;
};

}  // namespace canseg::ndiff

#endif  // CANSEG_NDIFF_LAYERS_H_
