#include <gtest/gtest.h>

#include "canseg/attention_model.h"
#include "test_util.h"

namespace canseg {
namespace {

using testing::tiny_config;

TEST(PointerMixture, HandComputed) {
  // vocab of 6, source positions hold symbols 5, 3, 5.
  const std::vector<double> vocab = {0, 0, 0.1, 0.2, 0.3, 0.4};
  const std::vector<double> attn = {0.5, 0.25, 0.25};
  const auto p = pointer_mixture(0.6, vocab, attn, {5, 3, 5});
  const std::vector<double> want = {0, 0, 0.06, 0.12 + 0.4 * 0.25, 0.18, 0.24 + 0.4 * 0.75};
  ASSERT_EQ(p.size(), want.size());
  for (size_t v = 0; v < want.size(); ++v) EXPECT_NEAR(p[v], want[v], 1e-15) << v;
}

TEST(PointerMixture, Extremes) {
  const std::vector<double> vocab = {0.2, 0.3, 0.5};
  const std::vector<double> attn = {1.0, 0.0};
  EXPECT_EQ(pointer_mixture(1.0, vocab, attn, {1, 2}), vocab);
  EXPECT_EQ(pointer_mixture(0.0, vocab, attn, {1, 2}), (std::vector<double>{0, 1, 0}));
}

class PGNetTest : public ::testing::Test {
 protected:
  PGNetTest() : m_(Vocabulary(U"abcdef"), tiny_config(ModelKind::kPGNet, 5)) {}
  AttentionModel m_;
};

TEST_F(PGNetTest, SharesOneEmbedding) {
  EXPECT_NE(m_.params().find("embedding"), nullptr);
  EXPECT_EQ(m_.params().find("source_embedding"), nullptr);
  EXPECT_NE(m_.params().find("gate.weight"), nullptr);
}

TEST_F(PGNetTest, FinalDistributionIsTheMixture) {
  ndiff::Tape tape(false);
  const auto source = m_.source_symbols(U"abca");
  const auto target = encode_target(testing::ms({"ab", "ca"}), m_.vocab()).symbols;
  const auto f = m_.forward(tape, source, target, nullptr);
  ASSERT_EQ(f.p_gen.size(), f.distributions.size());
  for (size_t t = 0; t < f.distributions.size(); ++t) {
    EXPECT_GT(f.p_gen[t], 0.0);
    EXPECT_LT(f.p_gen[t], 1.0);
    const auto& vd = f.vocab_distributions[t];
    const auto& at = f.attention[t];
    const auto want = pointer_mixture(f.p_gen[t], {vd.values().begin(), vd.values().end()},
                                      {at.values().begin(), at.values().end()}, source);
    for (size_t v = 0; v < want.size(); ++v) EXPECT_NEAR(f.distributions[t][v], want[v], 1e-12);
  }
}

TEST_F(PGNetTest, ForcedGate) {
  const auto source = m_.source_symbols(U"bd");
  const auto target = encode_target(testing::ms({"b", "d"}), m_.vocab()).symbols;
  ndiff::Tape tape(false);
  const auto gen = m_.forward(tape, source, target, nullptr, 1.0);
  for (size_t t = 0; t < gen.distributions.size(); ++t)
    for (size_t v = 0; v < gen.distributions[t].size(); ++v)
      EXPECT_NEAR(gen.distributions[t][v], gen.vocab_distributions[t][v], 1e-15);
  const auto copy = m_.forward(tape, source, target, nullptr, 0.0);
  for (const auto& p : copy.distributions)
    for (int v = 0; v < m_.vocab().size(); ++v) {
      const bool in_source = std::find(source.begin(), source.end(), v) != source.end();
      if (!in_source) EXPECT_EQ(p[v], 0.0) << v;
    }
}

TEST_F(PGNetTest, GradientCheckWithRepeatedSourceSymbols) {
  const auto source = m_.source_symbols(U"aba");
  const auto target = encode_target(testing::ms({"ab", "e"}), m_.vocab()).symbols;
  const auto check = testing::check_gradients(m_.params(), [&](ndiff::Tape& tape) {
    return m_.forward(tape, source, target, nullptr).loss;
  });
  EXPECT_LT(check.max_relative_error, 1e-4) << check.worst;
}

}  // namespace
}  // namespace canseg
