#include "canseg/ndiff/layers.h"

#include "canseg/errors.h"

namespace canseg::ndiff {

LstmCell LstmCell::create(ParameterSet& params, const std::string& prefix, int input_size,
                          int hidden_size, Rng& rng) {
  LstmCell cell;
  cell.input_size = input_size;
  cell.hidden_size = hidden_size;
  const int fan_in = input_size + hidden_size;
  auto weight = [&](const char* gate) {
    return &params.add_glorot(prefix + ".w_" + gate, {hidden_size, fan_in}, fan_in,
                              hidden_size, rng);
  };
  auto bias = [&](const char* gate) {
    return &params.add(prefix + ".b_" + gate, {hidden_size});
  };
  cell.w_input = weight("input");
  cell.w_forget = weight("forget");
  cell.w_output = weight("output");
  cell.w_candidate = weight("candidate");
  cell.b_input = bias("input");
  cell.b_forget = bias("forget");
  cell.b_output = bias("output");
  cell.b_candidate = bias("candidate");
  cell.b_forget->value.fill(1.0);
  return cell;
}

LstmState LstmCell::zero_state(Tape& tape) const {
  return {tape.constant(Tensor({hidden_size})), tape.constant(Tensor({hidden_size}))};
}

LstmState LstmCell::step(Tape& tape, Var x, const LstmState& prev) const {
  if (x.value().rank() != 1 || x.value().rows() != input_size) {
    throw ShapeError("lstm_step: input shape " + shape_string(x.value().shape()) +
                     " does not match input size " + std::to_string(input_size));
  }
  if (prev.h.value().rows() != hidden_size || prev.c.value().rows() != hidden_size) {
    throw ShapeError("lstm_step: state shape " + shape_string(prev.h.value().shape()) +
                     " does not match hidden size " + std::to_string(hidden_size));
  }
  Var z = concat({x, prev.h});
  Var i = sigmoid(affine(tape.param(*w_input), z, tape.param(*b_input)));
  Var f = sigmoid(affine(tape.param(*w_forget), z, tape.param(*b_forget)));
  Var o = sigmoid(affine(tape.param(*w_output), z, tape.param(*b_output)));
  Var g = tanh(affine(tape.param(*w_candidate), z, tape.param(*b_candidate)));
  Var c = add(mul(f, prev.c), mul(i, g));
  Var h = mul(o, tanh(c));
  return {h, c};
}

BiLstm BiLstm::create(ParameterSet& params, const std::string& prefix, int input_size,
                      int hidden_size, Rng& rng) {
  BiLstm bi;
  bi.forward = LstmCell::create(params, prefix + ".fwd", input_size, hidden_size, rng);
  bi.backward = LstmCell::create(params, prefix + ".bwd", input_size, hidden_size, rng);
  return bi;
}

std::vector<Var> BiLstm::encode(Tape& tape, const std::vector<Var>& inputs) const {
  if (inputs.empty()) throw InvalidArgument("bilstm_encode of an empty sequence");
  const size_t n = inputs.size();
  std::vector<Var> fwd(n), bwd(n);
  LstmState s = forward.zero_state(tape);
  for (size_t t = 0; t < n; ++t) {
    s = forward.step(tape, inputs[t], s);
    fwd[t] = s.h;
  }
  s = backward.zero_state(tape);
  for (size_t t = n; t-- > 0;) {
    s = backward.step(tape, inputs[t], s);
    bwd[t] = s.h;
  }
  std::vector<Var> out(n);
  for (size_t t = 0; t < n; ++t) out[t] = concat({fwd[t], bwd[t]});
  return out;
}

Linear Linear::create(ParameterSet& params, const std::string& prefix, int in, int out,
                      Rng& rng) {
  Linear l;
  l.weight = &params.add_glorot(prefix + ".weight", {out, in}, in, out, rng);
  l.bias = &params.add(prefix + ".bias", {out});
  return l;
}

Var Linear::apply(Tape& tape, Var x) const {
  return affine(tape.param(*weight), x, tape.param(*bias));
}

Embedding Embedding::create(ParameterSet& params, const std::string& name, int count,
                            int dim, Rng& rng) {
  Embedding e;
  e.table = &params.add_glorot(name, {count, dim}, count, dim, rng);
  return e;
}

AdditiveAttention AdditiveAttention::create(ParameterSet& params, const std::string& prefix,
                                            int key_size, int query_size, int attn_size,
                                            Rng& rng) {
  AdditiveAttention a;
  a.w_key = &params.add_glorot(prefix + ".w_key", {attn_size, key_size}, key_size, attn_size,
                               rng);
  a.w_query = &params.add_glorot(prefix + ".w_query", {attn_size, query_size}, query_size,
                                 attn_size, rng);
  a.bias = &params.add(prefix + ".bias", {attn_size});
  a.v = &params.add_glorot(prefix + ".v", {attn_size}, attn_size, 1, rng);
  return a;
}

AdditiveAttention::Memory AdditiveAttention::prepare(Tape& tape,
                                                     const std::vector<Var>& states) const {
  Memory m;
  m.states = stack_rows(states);
  m.states_transposed = transpose(m.states);
  m.keys = matmul(m.states, transpose(tape.param(*w_key)));
  return m;
}

AdditiveAttention::Result AdditiveAttention::attend(Tape& tape, const Memory& memory,
                                                    Var query) const {
  Var q = affine(tape.param(*w_query), query, tape.param(*bias));
  Var scores = matmul(tanh(add(memory.keys, q)), tape.param(*v));
  Result r;
  r.weights = softmax(scores);
  r.context = matmul(memory.states_transposed, r.weights);
  return r;
}

}  // namespace canseg::ndiff
