#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "canseg/errors.h"
#include "canseg/ndiff/graph.h"
#include "canseg/ndiff/layers.h"
#include "canseg/ndiff/ops.h"
#include "canseg/ndiff/optim.h"
#include "canseg/ndiff/params_io.h"
#include "test_util.h"

namespace canseg::ndiff {
namespace {

using canseg::testing::check_gradients;

Parameter& random_param(ParameterSet& ps, const std::string& name, Shape shape, Rng& rng) {
  Parameter& p = ps.add(name, shape);
  for (size_t i = 0; i < p.value.size(); ++i) p.value[i] = rng.uniform(-1, 1);
  return p;
}

TEST(Ops, SoftmaxOfConstantIsUniform) {
  Tape tape;
  const Var s = softmax(tape.constant(Tensor({5}, 3.7)));
  for (size_t i = 0; i < 5; ++i) EXPECT_NEAR(s.value()[i], 0.2, 1e-15);
}

TEST(Ops, SoftmaxSumsToOneAndIsPositive) {
  Rng rng(1);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> v(1 + rng.uniform_int(20));
    for (auto& x : v) x = rng.uniform(-50, 50);
    Tape tape;
    const Var s = softmax(tape.constant(Tensor::vector(v)));
    double sum = 0;
    for (size_t i = 0; i < v.size(); ++i) {
      EXPECT_GT(s.value()[i], 0.0);
      sum += s.value()[i];
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(Ops, MaskedSoftmaxZeroesMaskedEntries) {
  Tape tape;
  const Var s = softmax(tape.constant(Tensor::vector({1, 2, 3})), {true, false, true});
  EXPECT_EQ(s.value()[1], 0.0);
  EXPECT_NEAR(s.value()[0] + s.value()[2], 1.0, 1e-15);
}

TEST(Ops, CrossEntropyGradientIsSoftmaxMinusOneHot) {
  ParameterSet ps;
  Rng rng(2);
  Parameter& logits = random_param(ps, "logits", {6}, rng);
  Tape tape;
  const Var l = tape.param(logits);
  const Var p = softmax(l);
  tape.backward(cross_entropy(p, 4));
  for (int i = 0; i < 6; ++i) EXPECT_NEAR(logits.grad[i], p.value()[i] - (i == 4 ? 1.0 : 0.0), 1e-12);
}

TEST(Ops, FanOutAccumulates) {
  ParameterSet ps;
  Parameter& x = ps.add("x", {1});
  x.value[0] = 3.0;
  Tape tape;
  const Var v = tape.param(x);
  tape.backward(add(v, v));
  EXPECT_DOUBLE_EQ(x.grad[0], 2.0);
}

TEST(Ops, ShapeErrorNamesBothShapes) {
  Tape tape;
  try {
    matmul(tape.constant(Tensor({2, 3})), tape.constant(Tensor({2})));
    FAIL();
  } catch (const ShapeError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("(2, 3)"), std::string::npos) << what;
    EXPECT_NE(what.find("(2)"), std::string::npos) << what;
  }
}

TEST(Ops, RandomCompositeGraphGradient) {
  for (uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(seed);
    ParameterSet ps;
    Parameter& w = random_param(ps, "w", {4, 3}, rng);
    Parameter& b = random_param(ps, "b", {4}, rng);
    Parameter& x = random_param(ps, "x", {3}, rng);
    Parameter& m = random_param(ps, "m", {2, 4}, rng);
    Parameter& s = random_param(ps, "s", {1}, rng);
    const std::vector<int> idx = {0, 2, 2};
    auto loss = [&](Tape& t) {
      const Var h = tanh(affine(t.param(w), t.param(x), t.param(b)));
      const Var g = sigmoid(matmul(t.param(m), h));
      const Var r = relu(mul(h, scale_by(h, t.param(s))));
      const Var c = concat({g, slice(r, 1, 2), one_minus(g)});
      const Var p = softmax(c);
      const Var mat = stack_rows({h, sub(h, r)});
      const Var extra = sum(matmul(transpose(mat), g));
      const Var sc = scatter_add(slice(h, 0, 3), idx, 3);
      return add_n({cross_entropy(p, 2), scale(extra, 0.3), logsumexp(c, std::vector<int>{0, 3}),
                    pick(log(softmax(sc)), 2), scale(sum(row(mat, 1)), -0.5)});
    };
    const auto res = check_gradients(ps, loss);
    EXPECT_LT(res.max_relative_error, 1e-4) << res.worst;
  }
}

TEST(Lstm, ZeroWeightsGiveZeroState) {
  ParameterSet ps;
  Rng rng(0);
  const LstmCell cell = LstmCell::create(ps, "l", 3, 4, rng);
  for (const auto& p : ps.all()) p->value.fill(0.0);
  Tape tape;
  const LstmState s = cell.step(tape, tape.constant(Tensor::vector({1, 2, 3})), cell.zero_state(tape));
  for (size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(s.h.value()[i], 0.0);
    EXPECT_EQ(s.c.value()[i], 0.0);
  }
}

TEST(Lstm, InitialForgetBiasIsOne) {
  ParameterSet ps;
  Rng rng(0);
  const LstmCell cell = LstmCell::create(ps, "l", 3, 4, rng);
  for (size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(cell.b_forget->value[i], 1.0);
    EXPECT_EQ(cell.b_input->value[i], 0.0);
  }
  EXPECT_EQ(cell.w_input->value.shape(), (Shape{4, 7}));
}

TEST(Lstm, SaturatedForgetGateKeepsCell) {
  ParameterSet ps;
  Rng rng(3);
  const LstmCell cell = LstmCell::create(ps, "l", 2, 3, rng);
  cell.b_forget->value.fill(50.0);
  Tape tape;
  const Var x = tape.constant(Tensor::vector({0.3, -0.7}));
  LstmState prev{tape.constant(Tensor::vector({0.1, 0.2, -0.3})),
                 tape.constant(Tensor::vector({0.5, -1.0, 2.0}))};
  const LstmState next = cell.step(tape, x, prev);
  // Oracle: i and g computed by hand from [x; h_prev].
  std::vector<double> z = {0.3, -0.7, 0.1, 0.2, -0.3};
  for (int r = 0; r < 3; ++r) {
    double ai = cell.b_input->value[r], ag = cell.b_candidate->value[r];
    for (int k = 0; k < 5; ++k) {
      ai += cell.w_input->value.at(r, k) * z[k];
      ag += cell.w_candidate->value.at(r, k) * z[k];
    }
    const double expected = prev.c.value()[r] + 1.0 / (1.0 + std::exp(-ai)) * std::tanh(ag);
    EXPECT_NEAR(next.c.value()[r], expected, 1e-9);
  }
}

TEST(Lstm, GradientCheck) {
  ParameterSet ps;
  Rng rng(4);
  const LstmCell cell = LstmCell::create(ps, "l", 3, 4, rng);
  Parameter& x = random_param(ps, "x", {3}, rng);
  auto loss = [&](Tape& t) {
    LstmState s = cell.zero_state(t);
    s = cell.step(t, t.param(x), s);
    s = cell.step(t, tanh(t.param(x)), s);
    return add(sum(s.h), scale(sum(s.c), 0.5));
  };
  const auto res = check_gradients(ps, loss);
  EXPECT_LT(res.max_relative_error, 1e-4) << res.worst;
}

TEST(BiLstm, LengthOneIsBothDirectionsOnSameToken) {
  ParameterSet ps;
  Rng rng(5);
  const BiLstm bi = BiLstm::create(ps, "b", 2, 3, rng);
  Tape tape;
  const Var x = tape.constant(Tensor::vector({0.4, -0.2}));
  const auto out = bi.encode(tape, {x});
  ASSERT_EQ(out.size(), 1u);
  const auto f = bi.forward.step(tape, x, bi.forward.zero_state(tape));
  const auto b = bi.backward.step(tape, x, bi.backward.zero_state(tape));
  for (int i = 0; i < 3; ++i) {
    EXPECT_DOUBLE_EQ(out[0].value()[i], f.h.value()[i]);
    EXPECT_DOUBLE_EQ(out[0].value()[3 + i], b.h.value()[i]);
  }
  EXPECT_THROW(bi.encode(tape, {}), InvalidArgument);
}

TEST(BiLstm, PalindromeWithTiedDirections) {
  ParameterSet ps;
  Rng rng(6);
  const BiLstm bi = BiLstm::create(ps, "b", 2, 3, rng);
  const auto& all = ps.all();
  const size_t half = all.size() / 2;
  for (size_t i = 0; i < half; ++i) all[half + i]->value = all[i]->value;
  Tape tape;
  const Var a = tape.constant(Tensor::vector({0.1, 0.9}));
  const Var b = tape.constant(Tensor::vector({-0.5, 0.3}));
  const auto out = bi.encode(tape, {a, b, a});
  for (int t = 0; t < 3; ++t)
    for (int i = 0; i < 3; ++i)
      EXPECT_NEAR(out[t].value()[i], out[2 - t].value()[3 + i], 1e-14);
}

TEST(BiLstm, GradientCheckLengthThree) {
  ParameterSet ps;
  Rng rng(7);
  const BiLstm bi = BiLstm::create(ps, "b", 2, 3, rng);
  Parameter& x = random_param(ps, "x", {3, 2}, rng);
  auto loss = [&](Tape& t) {
    const Var xs = t.param(x);
    const auto out = bi.encode(t, {row(xs, 0), row(xs, 1), row(xs, 2)});
    return sum(mul(add(out[0], out[2]), out[1]));
  };
  const auto res = check_gradients(ps, loss);
  EXPECT_LT(res.max_relative_error, 1e-4) << res.worst;
}

TEST(Attention, WeightsFormDistributionAndGradientCheck) {
  ParameterSet ps;
  Rng rng(8);
  const AdditiveAttention att = AdditiveAttention::create(ps, "a", 4, 3, 5, rng);
  Parameter& h = random_param(ps, "h", {3, 4}, rng);
  Parameter& q = random_param(ps, "q", {3}, rng);
  auto loss = [&](Tape& t) {
    const Var hs = t.param(h);
    const auto mem = att.prepare(t, {row(hs, 0), row(hs, 1), row(hs, 2)});
    const auto r = att.attend(t, mem, t.param(q));
    return add(sum(mul(r.context, r.context)), pick(log(r.weights), 1));
  };
  {
    Tape t;
    const Var hs = t.param(h);
    const auto r = att.attend(t, att.prepare(t, {row(hs, 0), row(hs, 1), row(hs, 2)}), t.param(q));
    double s = 0;
    for (size_t i = 0; i < 3; ++i) s += r.weights.value()[i];
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
  const auto res = check_gradients(ps, loss);
  EXPECT_LT(res.max_relative_error, 1e-4) << res.worst;
}

TEST(Dropout, ExpectationPreserved) {
  Rng rng(9);
  const int n = 100000;
  const Tensor mask = dropout_mask({n}, 0.3, rng);
  double mean = 0;
  for (int i = 0; i < n; ++i) {
    EXPECT_TRUE(mask[i] == 0.0 || std::abs(mask[i] - 1.0 / 0.7) < 1e-12);
    mean += mask[i];
  }
  EXPECT_NEAR(mean / n, 1.0, 0.01);
}

TEST(Dropout, IdentityWithoutRngOrProbability) {
  Tape tape;
  const Var x = tape.constant(Tensor::vector({1, 2, 3}));
  Rng rng(1);
  EXPECT_EQ(dropout(x, 0.5, nullptr).value(), x.value());
  EXPECT_EQ(dropout(x, 0.0, &rng).value(), x.value());
}

TEST(Optim, AdamFirstStepIsSignedLearningRate) {
  for (double g : {0.5, -3.0, 1e-3}) {
    ParameterSet ps;
    Parameter& w = ps.add("w", {1});
    w.value[0] = 1.0;
    w.grad[0] = g;
    Optimizer opt(ps, AdamOptions{});
    opt.step(ps);
    EXPECT_NEAR(w.value[0] - 1.0, -0.001 * (g > 0 ? 1 : -1), 1e-6);
    EXPECT_EQ(opt.step_count(), 1);
  }
}

TEST(Optim, ZeroGradientLeavesParametersAndDecaysAccumulators) {
  ParameterSet ps;
  Parameter& w = ps.add("w", {2});
  w.value[0] = 1.0;
  w.grad[0] = 1.0;
  Optimizer opt(ps, AdamOptions{});
  opt.step(ps);
  const double m1 = opt.first_accumulators()[0][0];
  const double after_first = w.value[0];
  w.grad.fill(0.0);
  const double before = w.value[1];
  opt.step(ps);
  EXPECT_EQ(w.value[1], before);
  EXPECT_NEAR(opt.first_accumulators()[0][0], 0.9 * m1, 1e-15);
  // Momentum still moves the first coordinate; the zero-gradient one is fixed.
  EXPECT_NE(w.value[0], after_first);
  EXPECT_EQ(opt.first_accumulators()[0].shape(), w.value.shape());
}

TEST(Optim, AdadeltaDecreasesQuadratic) {
  ParameterSet ps;
  Parameter& w = ps.add("w", {1});
  w.value[0] = 1.0;
  Optimizer opt(ps, AdadeltaOptions{});
  double f = 1.0;
  for (int i = 0; i < 100; ++i) {
    w.grad[0] = 2 * w.value[0];
    opt.step(ps);
    const double next = w.value[0] * w.value[0];
    ASSERT_LT(next, f) << "step " << i;
    f = next;
  }
}

TEST(Optim, AdadeltaMatchesRecurrence) {
  ParameterSet ps;
  Parameter& w = ps.add("w", {1});
  w.value[0] = 0.7;
  const double rho = 0.95, eps = 1e-6, lr = 0.5;
  Optimizer opt(ps, AdadeltaOptions{lr, rho, eps});
  double x = 0.7, eg = 0, ex = 0;
  for (int i = 0; i < 10; ++i) {
    const double g = 3 * x * x - 1;
    w.grad[0] = g;
    opt.step(ps);
    eg = rho * eg + (1 - rho) * g * g;
    const double dx = -std::sqrt(ex + eps) / std::sqrt(eg + eps) * g;
    ex = rho * ex + (1 - rho) * dx * dx;
    x += lr * dx;
    EXPECT_NEAR(w.value[0], x, 1e-12);
  }
}

TEST(Optim, NonFiniteGradientThrowsAndLeavesParameters) {
  ParameterSet ps;
  Parameter& w = ps.add("w", {2});
  w.value[0] = 1.0;
  w.grad[0] = 0.5;
  w.grad[1] = std::nan("");
  Optimizer opt(ps, AdamOptions{});
  EXPECT_THROW(opt.step(ps), Error);
  EXPECT_EQ(w.value[0], 1.0);
}

TEST(Params, ClipGlobalNorm) {
  ParameterSet ps;
  Parameter& a = ps.add("a", {2});
  Parameter& b = ps.add("b", {1});
  a.grad[0] = 3;
  a.grad[1] = 4;
  b.grad[0] = 12;
  EXPECT_DOUBLE_EQ(ps.clip_grad_norm(5.0), 13.0);
  EXPECT_NEAR(ps.grad_norm(), 5.0, 1e-12);
  EXPECT_NEAR(b.grad[0], 12.0 * 5 / 13, 1e-12);
}

TEST(Params, GlorotBounds) {
  ParameterSet ps;
  Rng rng(1);
  const Parameter& p = ps.add_glorot("w", {30, 20}, 20, 30, rng);
  const double a = std::sqrt(6.0 / 50);
  for (double v : p.value.values()) EXPECT_LE(std::abs(v), a);
}

class ParamFileTest : public ::testing::Test {
 protected:
  void SetUp() override {
    Rng rng(10);
    random_param(ps_, "alpha", {3, 2}, rng);
    random_param(ps_, "beta", {4}, rng);
  }
  ParameterSet ps_;
  canseg::testing::TempDir dir_{"params"};
};

TEST_F(ParamFileTest, RoundTripIsBitExact) {
  const std::string path = dir_.file("p.bin");
  save_params(path, ps_, {{"model", "x"}});
  const ParamFile f = load_param_file(path);
  EXPECT_EQ(f.header["model"], "x");
  ParameterSet other;
  other.add("alpha", {3, 2});
  other.add("beta", {4});
  assign_params(other, f);
  for (size_t i = 0; i < ps_.size(); ++i) EXPECT_EQ(other.all()[i]->value, ps_.all()[i]->value);
  const std::string bytes = serialize_params(ps_, {{"model", "x"}});
  EXPECT_EQ(bytes.substr(0, 8), "CSEGPRM1");
  EXPECT_EQ(bytes.substr(bytes.size() - 8), "CSEGEND\n");
}

TEST_F(ParamFileTest, TruncatedFileThrows) {
  const std::string bytes = serialize_params(ps_, {});
  for (size_t cut : {size_t{4}, size_t{20}, bytes.size() / 2, bytes.size() - 1})
    EXPECT_THROW(parse_params(bytes.substr(0, cut)), Error) << cut;
}

TEST_F(ParamFileTest, WrongVersionThrows) {
  std::string bytes = serialize_params(ps_, {});
  bytes[8] = 9;
  EXPECT_THROW(parse_params(bytes), Error);
}

TEST_F(ParamFileTest, ShapeMismatchLeavesTargetUnchanged) {
  const ParamFile f = parse_params(serialize_params(ps_, {}));
  ParameterSet other;
  other.add("alpha", {3, 2});
  Parameter& beta = other.add("beta", {5});
  beta.value.fill(7.0);
  EXPECT_THROW(assign_params(other, f), ShapeError);
  EXPECT_EQ(other.find("alpha")->value[0], 0.0);
  EXPECT_EQ(beta.value[0], 7.0);
}

}  // namespace
}  // namespace canseg::ndiff
