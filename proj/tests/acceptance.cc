// Acceptance checks 1-11. Prints one PASS / FAIL / SKIP line per criterion
// and exits non-zero if any criterion fails.
//
//   canseg_acceptance [--only 1,2,...]
//
// Criterion 11 reads the English corpus from $CANSEG_ENGLISH_DATA (a
// `surface<TAB>segmentation` file) and is skipped when it is not set.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "canseg/attention_model.h"
#include "canseg/cli.h"
#include "canseg/eval.h"
#include "canseg/expert.h"
#include "canseg/harness.h"
#include "canseg/levenshtein.h"
#include "canseg/synthetic.h"
#include "canseg/transducer.h"
#include "canseg/unicode.h"
#include "test_util.h"

namespace canseg {
namespace {

enum class Status { kPass, kFail, kSkip };

struct Outcome {
  Status status;
  std::string detail;
};

Outcome pass_if(bool ok, std::string detail) {
  return {ok ? Status::kPass : Status::kFail, std::move(detail)};
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

constexpr int kA = kNumReserved;

std::vector<int> random_sequence(Rng& rng, size_t max_len, int alphabet) {
  std::vector<int> s(rng.uniform_int(max_len + 1));
  for (auto& v : s) v = kA + static_cast<int>(rng.uniform_int(static_cast<uint64_t>(alphabet)));
  return s;
}

// ---------------------------------------------------------------------------
// 1

Outcome gradients() {
  const Vocabulary vocab(U"abcde");
  const Morphemes gold = testing::ms({"ab", "e"});
  const std::u32string surface = U"abd";
  std::string detail;
  bool ok = true;
  for (auto kind : {ModelKind::kSeq2Seq, ModelKind::kPGNet, ModelKind::kTransducer}) {
    const TrainConfig c = testing::tiny_config(kind, 4);
    auto model = create_model(c, vocab);
    testing::GradCheck check;
    if (kind == ModelKind::kTransducer) {
      auto& m = dynamic_cast<TransducerModel&>(*model);
      m.set_max_target_length(4);
      Rng rng(1);
      // A mixed roll-in visits off-path configurations too.
      const Trace trace = m.roll_in(vocab.encode(surface), m.target_symbols(gold), 0.5, rng);
      check = testing::check_gradients(m.params(), [&](ndiff::Tape& tape) {
        return m.il_loss(tape, trace, nullptr);
      });
    } else {
      auto& m = dynamic_cast<AttentionModel&>(*model);
      const auto source = m.source_symbols(surface);
      const auto target = encode_target(gold, vocab).symbols;
      check = testing::check_gradients(m.params(), [&](ndiff::Tape& tape) {
        return m.forward(tape, source, target, nullptr).loss;
      });
    }
    ok &= check.max_relative_error < 1e-4;
    detail += fmt("%s max rel %.2e over %zu; ", to_string(kind).c_str(), check.max_relative_error,
                  check.checked);
  }
  return pass_if(ok, detail);
}

// ---------------------------------------------------------------------------
// 2

// Minimum unit cost over every action sequence whose output is the target.
// Output is append-only, so only target-prefix outputs can still succeed.
int exhaustive_cost(const std::vector<int>& x, const std::vector<int>& y, size_t i, size_t j) {
  if (i == x.size() && j == y.size()) return 0;
  int best = INT_MAX;
  if (i < x.size() && j < y.size() && x[i] == y[j]) best = std::min(best, exhaustive_cost(x, y, i + 1, j + 1));
  if (i < x.size()) best = std::min(best, 1 + exhaustive_cost(x, y, i + 1, j));
  if (j < y.size()) best = std::min(best, 1 + exhaustive_cost(x, y, i, j + 1));
  return best;
}

Outcome edit_cost_oracle() {
  std::vector<std::vector<int>> all = {{}};
  for (size_t start = 0, len = 1; len <= 5; ++len) {
    const size_t end = all.size();
    for (size_t k = start; k < end; ++k)
      for (int s = 0; s < 3; ++s) {
        auto next = all[k];
        next.push_back(kA + s);
        all.push_back(next);
      }
    start = end;
  }
  long pairs = 0, failures = 0;
  for (const auto& x : all)
    for (const auto& y : all) {
      ++pairs;
      failures += CostToGo(x, y).total() != exhaustive_cost(x, y, 0, 0);
    }
  return pass_if(failures == 0, fmt("%ld pairs, %ld mismatches", pairs, failures));
}

// ---------------------------------------------------------------------------
// 3

Outcome expert_optimality() {
  Rng rng(3);
  const int vocab = kA + 4;
  long failures = 0;
  for (int t = 0; t < 10000; ++t) {
    const auto x = random_sequence(rng, 7, 4), y = random_sequence(rng, 7, 4);
    const Expert e(x, y, vocab);
    const Trace trace = expert_rollin(e, rng);
    int units = 0;
    for (const auto& s : trace.steps) units += action_cost(s.chosen);
    failures += !(trace.stopped && trace.output == y && units == e.table().total());
  }
  return pass_if(failures == 0, fmt("10000 roll-ins, %ld failures", failures));
}

// ---------------------------------------------------------------------------
// 4

Outcome rollout_equivalence() {
  Rng rng(4);
  const int alphabet = 3;
  const int vocab = kA + alphabet;
  long failures = 0, off_path = 0;
  for (int t = 0; t < 10000; ++t) {
    const auto x = random_sequence(rng, 5, alphabet);
    auto y = random_sequence(rng, 5, alphabet);
    for (auto& v : y)
      if (rng.bernoulli(0.15)) v = kBoundary;
    Configuration c;
    c.cursor = static_cast<int>(rng.uniform_int(x.size() + 1));
    // Half on-path (expert prefix), half arbitrary emitted sequences.
    if (rng.bernoulli(0.5)) {
      c.emitted = random_sequence(rng, 5, alphabet);
    } else {
      const Expert e(x, y, vocab);
      Configuration walk;
      while (walk.cursor < c.cursor || rng.bernoulli(0.3)) {
        const auto acts = e.optimal_actions(walk);
        const Action a = acts[rng.uniform_int(acts.size())];
        if (a == kStop) break;
        walk = apply_action(walk, a, x);
      }
      c = walk;
    }
    const Expert e(x, y, vocab);
    off_path += e.value(c).distance > 0;
    auto expert = e.optimal_actions(c);
    auto rollout = rollout_argmin(e.rollout_costs(c));
    std::sort(expert.begin(), expert.end());
    std::sort(rollout.begin(), rollout.end());
    failures += expert != rollout;
  }
  return pass_if(failures == 0,
                 fmt("10000 configurations (%ld off-path), %ld mismatches", off_path, failures));
}

// ---------------------------------------------------------------------------
// 5

int memo_levenshtein(const std::u32string& a, const std::u32string& b, size_t i, size_t j,
                     std::map<std::pair<size_t, size_t>, int>& memo) {
  if (i == a.size()) return static_cast<int>(b.size() - j);
  if (j == b.size()) return static_cast<int>(a.size() - i);
  const auto key = std::make_pair(i, j);
  if (auto it = memo.find(key); it != memo.end()) return it->second;
  const int r = std::min({memo_levenshtein(a, b, i + 1, j, memo) + 1,
                          memo_levenshtein(a, b, i, j + 1, memo) + 1,
                          memo_levenshtein(a, b, i + 1, j + 1, memo) + (a[i] != b[j])});
  memo[key] = r;
  return r;
}

Outcome levenshtein_reference() {
  Rng rng(5);
  long failures = 0;
  for (int t = 0; t < 10000; ++t) {
    std::u32string a(rng.uniform_int(11), U'a'), b(rng.uniform_int(11), U'a');
    for (auto& ch : a) ch = U'a' + static_cast<char32_t>(rng.uniform_int(4));
    for (auto& ch : b) ch = U'a' + static_cast<char32_t>(rng.uniform_int(4));
    std::map<std::pair<size_t, size_t>, int> memo;
    failures += levenshtein(a, b) != memo_levenshtein(a, b, 0, 0, memo);
  }
  return pass_if(failures == 0, fmt("10000 pairs, %ld mismatches", failures));
}

// ---------------------------------------------------------------------------
// 6

McNemarResult mcnemar_counts(int b, int c) {
  std::vector<bool> x, y;
  for (int i = 0; i < b; ++i) x.push_back(true), y.push_back(false);
  for (int i = 0; i < c; ++i) x.push_back(false), y.push_back(true);
  for (int i = 0; i < 7; ++i) x.push_back(true), y.push_back(true);
  return mcnemar(x, y);
}

Outcome mcnemar_closed_form() {
  const auto r1 = mcnemar_counts(15, 5), r2 = mcnemar_counts(30, 2);
  const auto r3 = mcnemar_counts(10, 2);  // (8-1)^2/12 = 4.083..., not significant
  const bool ok = r1.statistic == 4.05 && r2.statistic == 22.78125 && !r1.significant_at_01 &&
                  r2.significant_at_01 && !r3.significant_at_01 && kChiSquare1DofP01 == 6.635;
  return pass_if(ok, fmt("(15,5) -> %.10g, (30,2) -> %.10g", r1.statistic.value_or(-1),
                         r2.statistic.value_or(-1)));
}

// ---------------------------------------------------------------------------
// 7

Outcome taxonomy_fixtures() {
  const std::u32string w = U"internationalisierung";
  const Morphemes gold = testing::ms({"internationale", "isier", "ung"});
  // "segmented wrongly into three morphemes"
  const auto over = classify_error(w, gold, testing::ms({"internationale", "is", "i", "er", "ung"}));
  // "lacking of a segmentation boundary"
  const auto under = classify_error(w, gold, testing::ms({"internationale", "isieung"}));
  // Commonly cited as overrestoration; the written rule needs the gold to be a
  // plain segmentation of the surface, so it is restoration but not
  // overrestoration (known divergence).
  const auto restore =
      classify_error(w, gold, testing::ms({"internationaler", "isierer", "ung"}));
  const bool ok = over.overseg && !over.underseg && under.underseg && !under.overseg &&
                  restore.restoration && !restore.overrestoration;
  return pass_if(ok, "overseg, underseg, overrestoration (known divergence) fixtures");
}

// ---------------------------------------------------------------------------
// 8

Outcome synthetic_experiment() {
  const SyntheticLanguageSpec spec;
  int holds = 0;
  std::string detail;
  double slowest = 0;
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    const Corpus all = generate_synthetic(spec, 400, seed);
    Corpus train, dev, test;
    train.examples.assign(all.examples.begin(), all.examples.begin() + 100);
    dev.examples.assign(all.examples.begin() + 100, all.examples.begin() + 200);
    test.examples.assign(all.examples.begin() + 200, all.examples.end());
    std::map<ModelKind, double> acc;
    for (auto kind : {ModelKind::kTransducer, ModelKind::kPGNet, ModelKind::kSeq2Seq}) {
      TrainConfig c = TrainConfig::defaults(kind, Regime::kLow);
      c.seed = seed;
      const auto t0 = std::chrono::steady_clock::now();
      auto model = create_model(c, build_vocabulary(train));
      train_model(*model, train, dev);
      std::vector<Morphemes> gold, pred;
      for (const auto& e : test.examples) {
        gold.push_back(e.morphemes);
        pred.push_back(model->predict(e.surface, c.beam_width));
      }
      acc[kind] = evaluate(gold, pred).accuracy;
      slowest = std::max(
          slowest, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    const double il = acc[ModelKind::kTransducer], pg = acc[ModelKind::kPGNet],
                 s2s = acc[ModelKind::kSeq2Seq];
    const bool ok = il >= 90 && pg >= 70 && s2s <= pg && il >= pg;
    holds += ok;
    detail += fmt("seed %d il %.1f pgnet %.1f s2s %.1f%s; ", static_cast<int>(seed), il, pg, s2s,
                  ok ? "" : " (ordering broken)");
    std::fprintf(stderr, "  criterion 8 seed %d: il %.1f pgnet %.1f s2s %.1f\n",
                 static_cast<int>(seed), il, pg, s2s);
  }
  detail += fmt("holds on %d/5 seeds, slowest run %.0fs", holds, slowest);
  return pass_if(holds >= 4 && slowest < 600, detail);
}

// ---------------------------------------------------------------------------
// 9

struct GreedyTrace {
  std::vector<int> symbols;  // attention: output ids; transducer: actions
  double score = 0;
};

GreedyTrace greedy_attention(const AttentionModel& m, const std::u32string& surface) {
  ndiff::Tape tape(false);
  const auto source = m.source_symbols(surface);
  const auto enc = m.encode(tape, source, nullptr);
  auto state = m.initial_state(tape, enc);
  GreedyTrace g;
  while (static_cast<int>(g.symbols.size()) < m.output_cap(surface.size())) {
    const auto s = m.step(tape, enc, state, nullptr);
    const auto& p = s.distribution.value();
    int best = -1;
    for (int v = 0; v < m.vocab().size(); ++v)
      if (v != kPad && v != kBegin && (best < 0 || p[v] > p[best])) best = v;
    g.score += std::log(std::max(p[best], 1e-12));
    if (best == kEnd) break;
    g.symbols.push_back(best);
    state = s.next;
    state.previous = best;
  }
  return g;
}

GreedyTrace greedy_transducer(const TransducerModel& m, const std::u32string& surface) {
  ndiff::Tape tape(false);
  const auto source = m.vocab().encode(surface);
  const int cap = m.output_cap(source.size());
  const auto enc = m.encode(tape, source, nullptr);
  auto state = m.initial_state(tape);
  GreedyTrace g;
  for (size_t t = 0; t < 2 * (source.size() + static_cast<size_t>(cap)) + 2; ++t) {
    const auto s = m.step(tape, enc, state, cap, nullptr);
    const auto& p = s.distribution.value();
    Action best = -1;
    for (Action a = 0; a < m.num_actions(); ++a)
      if (s.valid[a] && (best < 0 || p[a] > p[best])) best = a;
    g.score += std::log(p[best]);
    g.symbols.push_back(best);
    if (best == kStop) break;
    state.config = apply_action(state.config, best, source);
    state.lstm = s.lstm;
    state.previous = best;
  }
  return g;
}

Outcome decoding_properties() {
  Rng rng(9);
  const std::u32string letters = U"abcdef";
  long greedy_mismatch = 0, beam_worse = 0, cap_exceeded = 0, pairs = 0;
  for (int t = 0; t < 100; ++t) {
    const auto kind = std::vector<ModelKind>{ModelKind::kSeq2Seq, ModelKind::kPGNet,
                                             ModelKind::kTransducer}[t % 3];
    TrainConfig c = testing::tiny_config(kind, 8);
    c.seed = rng.next();
    auto model = create_model(c, Vocabulary(letters));
    std::u32string w;
    for (size_t k = 1 + rng.uniform_int(8); k > 0; --k) w += letters[rng.uniform_int(letters.size())];
    ++pairs;
    if (kind == ModelKind::kTransducer) {
      auto& m = dynamic_cast<TransducerModel&>(*model);
      m.set_max_target_length(static_cast<int>(rng.uniform_int(10)));
      const auto oracle = greedy_transducer(m, w);
      const auto g = m.decode_actions(w, 1), b = m.decode_actions(w, 4);
      greedy_mismatch += g.actions != oracle.symbols || std::abs(g.result.score - oracle.score) > 1e-9;
      beam_worse += g.result.complete && b.result.score < g.result.score - 1e-12;
      for (const auto* d : {&g, &b})
        cap_exceeded += static_cast<int>(d->result.output.size()) > m.output_cap(w.size());
    } else {
      auto& m = dynamic_cast<AttentionModel&>(*model);
      const auto oracle = greedy_attention(m, w);
      std::vector<int> symbols;
      const auto g = m.decode_source(m.source_symbols(w), 1, m.output_cap(w.size()), &symbols);
      greedy_mismatch += symbols != oracle.symbols || std::abs(g.score - oracle.score) > 1e-9;
      for (int width : {1, 4})
        cap_exceeded += static_cast<int>(m.decode(w, width).output.size()) > m.output_cap(w.size());
    }
  }
  return pass_if(greedy_mismatch == 0 && beam_worse == 0 && cap_exceeded == 0,
                 fmt("%ld model/input pairs: %ld greedy mismatches, %ld beam < greedy, %ld cap "
                     "violations",
                     pairs, greedy_mismatch, beam_worse, cap_exceeded));
}

// ---------------------------------------------------------------------------
// 10

Outcome cv_determinism() {
  testing::TempDir dir("acceptance_cv");
  std::ostringstream out, err;
  if (run_cli({"synth", "--n", "60", "--seed", "10", "--out", dir.file("c.tsv")}, out, err) != 0)
    return {Status::kFail, "synth failed: " + err.str()};
  auto cv = [&](const std::string& name) {
    return run_cli({"cv", "--model", "il", "--regime", "low", "--corpus", dir.file("c.tsv"),
                    "--plan", "3:20/20/20", "--seed", "10", "--epochs", "3", "-q", "--out",
                    dir.file(name)},
                   out, err);
  };
  if (cv("a.json") != 0 || cv("b.json") != 0) return {Status::kFail, "cv failed: " + err.str()};
  const std::string a = testing::read_file(dir.file("a.json"));
  const std::string b = testing::read_file(dir.file("b.json"));
  return pass_if(!a.empty() && a == b, fmt("two runs, %zu bytes each, identical: %s", a.size(),
                                           a == b ? "yes" : "no"));
}

// ---------------------------------------------------------------------------
// 11

Outcome english_tier() {
  const char* path = std::getenv("CANSEG_ENGLISH_DATA");
  if (!path || !std::filesystem::exists(path))
    return {Status::kSkip, "English dataset not present (set CANSEG_ENGLISH_DATA)"};
  const Corpus corpus = load_corpus(path);
  const char* plan_text = std::getenv("CANSEG_ENGLISH_PLAN");
  const FoldPlan plan = make_folds(corpus, FoldPlanSpec::parse(plan_text ? plan_text : "high"), 0);
  const auto folds = materialize_folds(corpus, plan);
  ExperimentOptions opts;
  opts.subsample = 100;
  const std::map<ModelKind, double> reference = {
      {ModelKind::kTransducer, 50.99}, {ModelKind::kSeq2Seq, 20.34}, {ModelKind::kPGNet, 44.0}};
  std::map<ModelKind, ExperimentResult> results;
  bool ok = true;
  std::string detail;
  for (const auto& [kind, want] : reference) {
    TrainConfig c = TrainConfig::defaults(kind, Regime::kLow);
    results[kind] = run_cross_validation(folds, c, opts, {}, corpus.name);
    const double got = results[kind].mean.accuracy;
    ok &= std::abs(got - want) <= 6.0;
    detail += fmt("%s %.2f (ref %.2f); ", to_string(kind).c_str(), got, want);
  }
  const auto test = mcnemar(results[ModelKind::kTransducer].correctness(),
                            results[ModelKind::kSeq2Seq].correctness());
  ok &= test.significant_at_01;
  detail += fmt("McNemar il vs s2s %.3f", test.statistic.value_or(0));
  return pass_if(ok, detail);
}

}  // namespace
}  // namespace canseg

int main(int argc, char** argv) {
  using namespace canseg;
  std::set<int> only;
  for (int i = 1; i + 1 < argc; ++i)
    if (std::string(argv[i]) == "--only") {
      std::stringstream in(argv[i + 1]);
      for (std::string item; std::getline(in, item, ',');) only.insert(std::stoi(item));
    }
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient correctness", gradients},
      {"edit-cost oracle", edit_cost_oracle},
      {"expert optimality", expert_optimality},
      {"roll-out/expert equivalence", rollout_equivalence},
      {"Levenshtein reference", levenshtein_reference},
      {"McNemar closed form", mcnemar_closed_form},
      {"error-taxonomy fixtures", taxonomy_fixtures},
      {"synthetic-language experiment", synthetic_experiment},
      {"decoding properties", decoding_properties},
      {"cv determinism", cv_determinism},
      {"English dataset tier", english_tier},
  };
  int failures = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {Status::kFail, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const char* label = o.status == Status::kPass ? "PASS" : o.status == Status::kFail ? "FAIL" : "SKIP";
    failures += o.status == Status::kFail;
    std::printf("%s %2d %s: %s [%.1fs]\n", label, id, criteria[i].first.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
