#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "canseg/cli.h"
#include "test_util.h"

namespace canseg {
namespace {

namespace fs = std::filesystem;
using testing::read_file;
using testing::write_file;

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> tiny_sets() {
  return {"--set", "embedding_size=4", "--set", "encoder_hidden=4", "--set", "decoder_hidden=4",
          "--set", "attention_size=4", "--set", "action_embedding_size=4"};
}

std::vector<std::string> operator+(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

class CliTest : public ::testing::Test {
 protected:
  CliTest() : dir_("cli") {}
  std::string path(const std::string& name) const { return dir_.file(name); }

  // 60-word synthetic corpus and a one-epoch il model trained on it.
  void synth_and_train() {
    ASSERT_EQ(cli({"synth", "--n", "60", "--seed", "1", "--out", path("c.tsv")}).code, 0);
    const CliRun r = cli(std::vector<std::string>{"train", "--model", "il", "--train", path("c.tsv"),
                                               "--dev", path("c.tsv"), "--out", path("m.bin"),
                                               "--epochs", "1", "-q"} +
                      tiny_sets());
    ASSERT_EQ(r.code, 0) << r.err;
  }

  testing::TempDir dir_;
};

TEST_F(CliTest, UsageErrorsExitTwo) {
  EXPECT_EQ(cli({}).code, 2);
  EXPECT_EQ(cli({"frobnicate"}).code, 2);
  EXPECT_EQ(cli({"train", "--model", "il", "--dev", "d", "--out", "o"}).code, 2);
  const CliRun bad = cli({"train", "--model", "lstm", "--train", "t", "--dev", "d", "--out", "o"});
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.err.find("s2s, pgnet, il"), std::string::npos) << bad.err;
  EXPECT_EQ(cli({"train", "--train", "t", "--dev", "d", "--out", "o"}).code, 2);
  EXPECT_EQ(cli({"stats", "--corpus", "x", "--top", "many"}).code, 2);
  EXPECT_EQ(cli({"--help"}).code, 0);
  EXPECT_EQ(cli({"--version"}).code, 0);
}

TEST_F(CliTest, RuntimeErrorsExitOne) {
  const CliRun r = cli({"stats", "--corpus", path("missing.tsv")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("canseg stats: error:"), std::string::npos) << r.err;
  write_file(path("w.txt"), "abc\n");
  EXPECT_EQ(cli({"predict", "-m", path("nope.bin"), "--input", path("w.txt"), "--out", path("p")}).code, 1);
}

TEST_F(CliTest, SynthIsDeterministicAndWritesManifest) {
  ASSERT_EQ(cli({"synth", "--n", "40", "--seed", "3", "--out", path("a.tsv")}).code, 0);
  ASSERT_EQ(cli({"synth", "--n", "40", "--seed", "3", "--out", path("b.tsv")}).code, 0);
  EXPECT_EQ(read_file(path("a.tsv")), read_file(path("b.tsv")));
  EXPECT_TRUE(fs::exists(path("a.tsv.manifest")));
  const auto m = nlohmann::json::parse(read_file(manifest_path(path("a.tsv"))));
  EXPECT_EQ(m["command"], "synth");
  EXPECT_EQ(m["seed"], 3);
  EXPECT_TRUE(m.contains("version"));
  EXPECT_TRUE(m["wall_clock"].contains("seconds"));
}

TEST_F(CliTest, TrainPredictEvaluateAnalyze) {
  synth_and_train();
  for (const char* f : {"m.bin", "m.bin.log.jsonl", "m.bin.manifest.json"})
    EXPECT_TRUE(fs::exists(path(f))) << f;
  const auto manifest = nlohmann::json::parse(read_file(path("m.bin.manifest.json")));
  EXPECT_EQ(manifest["seed"], 0);
  EXPECT_EQ(manifest["config"]["epochs"], 1);
  EXPECT_EQ(manifest["config"]["embedding_size"], 4);

  std::string words;
  for (const auto& e : load_corpus(path("c.tsv")).examples) words += u32_to_utf8(e.surface) + "\n";
  write_file(path("words.txt"), words);
  CliRun r = cli({"predict", "-m", path("m.bin"), "--input", path("words.txt"), "--out", path("p.tsv"),
               "--beam", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(path("p.tsv.manifest.json")));
  const std::string pred = read_file(path("p.tsv"));
  EXPECT_EQ(std::count(pred.begin(), pred.end(), '\n'), 60);

  r = cli({"evaluate", "--gold", path("c.tsv"), "--pred", path("p.tsv"), "--out", path("e.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto metrics = nlohmann::json::parse(read_file(path("e.json")));
  EXPECT_EQ(metrics["metrics"]["n"], 60);

  r = cli({"analyze-errors", "--gold", path("c.tsv"), "--pred", path("p.tsv"), "--flags",
           path("f.tsv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(read_file(path("f.tsv")).substr(0, 8), "surface\t");
}

TEST_F(CliTest, PredictEmptyInput) {
  synth_and_train();
  write_file(path("empty.txt"), "");
  const CliRun r = cli({"predict", "-m", path("m.bin"), "--input", path("empty.txt"), "--out", path("o.tsv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(read_file(path("o.tsv")), "");
}

TEST_F(CliTest, TracesOnlyForIl) {
  ASSERT_EQ(cli({"synth", "--n", "20", "--out", path("c.tsv")}).code, 0);
  const CliRun r = cli({"train", "--model", "pgnet", "--train", path("c.tsv"), "--dev", path("c.tsv"),
                     "--out", path("m.bin"), "--traces", path("t.jsonl")});
  EXPECT_EQ(r.code, 2);
  const CliRun ok = cli(std::vector<std::string>{"train", "--model", "il", "--train", path("c.tsv"), "--dev",
                                              path("c.tsv"), "--out", path("m.bin"), "--traces",
                                              path("t.jsonl"), "--epochs", "1", "-q"} +
                     tiny_sets());
  ASSERT_EQ(ok.code, 0) << ok.err;
  const std::string traces = read_file(path("t.jsonl"));
  EXPECT_EQ(std::count(traces.begin(), traces.end(), '\n'), 20);
  EXPECT_TRUE(nlohmann::json::parse(traces.substr(0, traces.find('\n'))).contains("steps"));
}

TEST_F(CliTest, ConfigPrecedence) {
  ASSERT_EQ(cli({"synth", "--n", "20", "--out", path("c.tsv")}).code, 0);
  write_file(path("cfg"), "model = il\nepochs = 3\npatience = 7\ndropout = 0.1\n");
  const CliRun r = cli(std::vector<std::string>{"train", "--config", path("cfg"), "--train",
                                             path("c.tsv"), "--dev", path("c.tsv"), "--out",
                                             path("m.bin"), "--epochs", "1", "--set",
                                             "patience=2", "--seed", "9", "-q"} +
                    tiny_sets());
  ASSERT_EQ(r.code, 0) << r.err;
  const auto cfg = nlohmann::json::parse(read_file(path("m.bin.manifest.json")))["config"];
  EXPECT_EQ(cfg["model"], "il");
  EXPECT_EQ(cfg["epochs"], 1);     // flag over config file
  EXPECT_EQ(cfg["patience"], 2);   // --set over config file
  EXPECT_EQ(cfg["dropout"], 0.1);  // config file over default
  EXPECT_EQ(cfg["batch_size"], 1); // default
  EXPECT_EQ(cfg["seed"], 9);
  write_file(path("bad.cfg"), "epochs: 3\n");
  EXPECT_EQ(cli({"train", "--config", path("bad.cfg"), "--model", "il", "--train", path("c.tsv"),
                 "--dev", path("c.tsv"), "--out", path("m2.bin")})
                .code,
            2);
}

TEST_F(CliTest, EvaluateMisalignmentExitsOne) {
  write_file(path("g.tsv"), "ab\ta+b\ncd\tcd\n");
  write_file(path("p.tsv"), "ab\ta+b\nxy\txy\n");
  const CliRun r = cli({"evaluate", "--gold", path("g.tsv"), "--pred", path("p.tsv")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("line 2"), std::string::npos) << r.err;
}

TEST_F(CliTest, StatsOnAllCanonicalCorpus) {
  write_file(path("s.tsv"), "collision\tcollide+ion\ndeletion\tdelete+ion\n");
  const CliRun r = cli({"stats", "--corpus", path("s.tsv"), "--out", path("s.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto doc = nlohmann::json::parse(read_file(path("s.json")));
  EXPECT_EQ(doc["stats"]["canonical_percent"], 100.0);
  EXPECT_EQ(doc["top_morphemes"][0]["morpheme"], "ion");
}

TEST_F(CliTest, CvIsReproducibleAndCurveHasRowPerFold) {
  ASSERT_EQ(cli({"synth", "--n", "30", "--out", path("c.tsv")}).code, 0);
  const auto base = std::vector<std::string>{"--model", "il", "--corpus", path("c.tsv"), "--plan",
                                             "3:10/10/10", "--epochs", "1", "-q"} +
                    tiny_sets();
  ASSERT_EQ(cli(std::vector<std::string>{"cv", "--out", path("a.json")} + base).code, 0);
  ASSERT_EQ(cli(std::vector<std::string>{"cv", "--out", path("b.json"), "--jobs", "2"} + base).code, 0);
  EXPECT_EQ(read_file(path("a.json")), read_file(path("b.json")));

  const CliRun c = cli({"curve", "--models", "il", "--sizes", "4,8", "--corpus", path("c.tsv"), "--plan",
                     "3:10/10/10", "--epochs", "1", "-q", "--out", path("curve.tsv")});
  ASSERT_EQ(c.code, 0) << c.err;
  const std::string tsv = read_file(path("curve.tsv"));
  EXPECT_EQ(std::count(tsv.begin(), tsv.end(), '\n'), 1 + 2 * 3);
  EXPECT_EQ(cli({"curve", "--sizes", "50", "--corpus", path("c.tsv"), "--plan", "3:10/10/10",
                 "--out", path("x.tsv")})
                .code,
            2);
}

}  // namespace
}  // namespace canseg
