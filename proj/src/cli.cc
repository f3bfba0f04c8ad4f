#include "canseg/cli.h"

#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "canseg/config.h"
#include "canseg/data.h"
#include "canseg/errors.h"
#include "canseg/eval.h"
#include "canseg/expert.h"
#include "canseg/harness.h"
#include "canseg/model.h"
#include "canseg/model_io.h"
#include "canseg/synthetic.h"
#include "canseg/transducer.h"
#include "canseg/unicode.h"

#ifndef CANSEG_VERSION
#define CANSEG_VERSION "0.0.0"
#endif

namespace canseg {

std::string version() { return CANSEG_VERSION; }

nlohmann::json RunManifest::to_json() const {
  return {{"command", command},
          {"arguments", arguments},
          {"config", config},
          {"inputs", inputs},
          {"outputs", outputs},
          {"seed", seed},
          {"version", version()},
          {"wall_clock", {{"started", started}, {"seconds", seconds}}}};
}

void RunManifest::write(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  out << to_json().dump(2) << "\n";
  if (!out) throw Error("cannot write " + path.string());
}

std::filesystem::path manifest_path(const std::filesystem::path& output) {
  auto p = output;
  p += ".manifest.json";
  return p;
}

namespace {

class UsageError : public Error {
 public:
  using Error::Error;
};

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

// Times a command and fills in the manifest's wall-clock fields.
class ManifestWriter {
 public:
  ManifestWriter(std::string command, std::vector<std::string> args) {
    m_.command = std::move(command);
    m_.arguments = std::move(args);
    m_.started = utc_now();
    start_ = std::chrono::steady_clock::now();
  }
  RunManifest& manifest() { return m_; }
  void write(const std::filesystem::path& primary_output) {
    m_.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    m_.write(manifest_path(primary_output));
  }

 private:
  RunManifest m_;
  std::chrono::steady_clock::time_point start_;
};

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error("cannot write " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    std::string line = text.substr(pos, eol - pos);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
    pos = eol + 1;
  }
  return lines;
}

char32_t parse_delimiter(const std::string& text) {
  std::u32string d;
  try {
    d = utf8_to_u32(text);
  } catch (const InvalidArgument&) {
    d.clear();
  }
  if (d.size() != 1 || d[0] == U'\t') throw UsageError("delimiter must be one character");
  return d[0];
}

Morphemes split_on(std::u32string_view text, char32_t delimiter) {
  Morphemes out(1);
  for (char32_t c : text) {
    if (c == delimiter) {
      out.emplace_back();
    } else {
      out.back().push_back(c);
    }
  }
  return out;
}

struct PredictionLine {
  std::u32string surface;
  Morphemes morphemes;
};

// Prediction files may hold empty morphemes, so they are read leniently.
std::vector<PredictionLine> read_predictions(const std::filesystem::path& path,
                                             char32_t delimiter) {
  std::vector<PredictionLine> out;
  int line_no = 0;
  for (const auto& line : split_lines(read_text(path))) {
    ++line_no;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw ParseError(line_no, path.string() + ": missing tab");
    try {
      out.push_back({utf8_to_u32(line.substr(0, tab)),
                     split_on(utf8_to_u32(line.substr(tab + 1)), delimiter)});
    } catch (const InvalidArgument& e) {
      throw ParseError(line_no, path.string() + ": " + e.what());
    }
  }
  return out;
}

// Fails with the first line at which the prediction file stops matching the
// gold corpus.
std::vector<Morphemes> align_predictions(const Corpus& gold, const std::vector<PredictionLine>& pred,
                                         const std::string& pred_name) {
  const size_t n = std::min(gold.size(), pred.size());
  for (size_t i = 0; i < n; ++i) {
    if (gold.examples[i].surface != pred[i].surface)
      throw Error(pred_name + " is misaligned with the gold corpus at line " +
                  std::to_string(i + 1) + ": '" + u32_to_utf8(pred[i].surface) + "' vs '" +
                  u32_to_utf8(gold.examples[i].surface) + "'");
  }
  if (gold.size() != pred.size())
    throw Error(pred_name + " is misaligned with the gold corpus at line " +
                std::to_string(n + 1) + ": " + std::to_string(pred.size()) +
                " predictions for " + std::to_string(gold.size()) + " gold examples");
  std::vector<Morphemes> out;
  for (const auto& p : pred) out.push_back(p.morphemes);
  return out;
}

std::vector<Morphemes> gold_morphemes(const Corpus& corpus) {
  std::vector<Morphemes> out;
  for (const auto& ex : corpus.examples) out.push_back(ex.morphemes);
  return out;
}

// ---------------------------------------------------------------------------
// Configuration: flags > config file > published defaults.

struct ConfigFlags {
  std::string config_file;
  std::string model;
  std::string regime;
  uint64_t seed = 0;
  std::vector<std::string> sets;
  int epochs = 0;
  int patience = 0;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* epochs_opt = nullptr;
  CLI::Option* patience_opt = nullptr;

  void add(CLI::App* app, bool with_model) {
    app->add_option("--config", config_file, "flat key = value hyperparameter file");
    if (with_model) app->add_option("--model", model, "model kind: s2s, pgnet, il");
    app->add_option("--regime", regime, "high or low (default high)");
    seed_opt = app->add_option("--seed", seed, "random seed (default 0)");
    app->add_option("--set", sets, "override one hyperparameter, key=value (repeatable)");
    epochs_opt = app->add_option("--epochs", epochs, "maximum training epochs");
    patience_opt = app->add_option("--patience", patience, "early-stopping patience");
  }
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

TrainConfig resolve_config(const ConfigFlags& f, const std::string& model_override = "") {
  std::map<std::string, std::string> file;
  if (!f.config_file.empty()) {
    try {
      file = read_key_value_file(f.config_file);
    } catch (const Error& e) {
      throw UsageError(f.config_file + ": " + e.what());
    }
  }
  std::string model = model_override.empty() ? f.model : model_override;
  if (model.empty() && file.count("model")) model = file["model"];
  if (model.empty()) throw UsageError("--model is required (valid: s2s, pgnet, il)");
  std::string regime = f.regime;
  if (regime.empty()) regime = file.count("regime") ? file["regime"] : "high";
  try {
    TrainConfig c = TrainConfig::defaults(parse_model_kind(model), parse_regime(regime));
    for (const auto& [key, value] : file)
      if (key != "model" && key != "regime") c.set(key, value);
    for (const auto& s : f.sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + s + "'");
      c.set(trim(s.substr(0, eq)), s.substr(eq + 1));
    }
    if (f.epochs_opt->count()) c.set("epochs", std::to_string(f.epochs));
    if (f.patience_opt->count()) c.set("patience", std::to_string(f.patience));
    if (f.seed_opt->count()) c.seed = f.seed;
    return c;
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
}

// ---------------------------------------------------------------------------
// Fold sources shared by cv and curve.

struct FoldFlags {
  std::string corpus;
  std::string fold_dir;
  std::string plan;
  uint64_t fold_seed = 0;
  int jobs = 1;
  CLI::Option* fold_seed_opt = nullptr;

  void add(CLI::App* app) {
    auto* c = app->add_option("--corpus", corpus, "corpus TSV to split into folds");
    auto* d = app->add_option("--fold-dir", fold_dir,
                              "directory with fold<k>/{train,dev,test}.tsv");
    c->excludes(d);
    app->add_option("--plan", plan, "fold plan: high, low or K:train/dev/test");
    fold_seed_opt = app->add_option("--fold-seed", fold_seed, "fold shuffling seed (default --seed)");
    app->add_option("--jobs", jobs, "folds trained concurrently")->check(CLI::PositiveNumber);
  }
};

std::vector<FoldData> load_folds(const FoldFlags& f, const std::string& default_plan,
                                 uint64_t seed, std::string* name,
                                 std::map<std::string, std::string>& inputs) {
  if (f.corpus.empty() && f.fold_dir.empty())
    throw UsageError("one of --corpus or --fold-dir is required");
  if (!f.fold_dir.empty()) {
    std::vector<FoldData> folds;
    const std::filesystem::path dir(f.fold_dir);
    for (int k = 0;; ++k) {
      const auto sub = dir / ("fold" + std::to_string(k));
      if (!std::filesystem::exists(sub / "train.tsv")) break;
      folds.push_back({load_corpus(sub / "train.tsv"), load_corpus(sub / "dev.tsv"),
                       load_corpus(sub / "test.tsv")});
    }
    if (folds.empty()) throw Error("no fold0/train.tsv under " + f.fold_dir);
    *name = dir.filename().string();
    inputs["fold_dir"] = f.fold_dir;
    return folds;
  }
  FoldPlanSpec spec;
  try {
    spec = FoldPlanSpec::parse(f.plan.empty() ? default_plan : f.plan);
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  const Corpus corpus = load_corpus(f.corpus);
  *name = corpus.name;
  inputs["corpus"] = f.corpus;
  const FoldPlan plan = make_folds(corpus, spec, f.fold_seed_opt->count() ? f.fold_seed : seed);
  return materialize_folds(corpus, plan);
}

// ---------------------------------------------------------------------------
// Commands

struct TrainArgs {
  ConfigFlags config;
  std::string train, dev, out, log, traces;
  bool quiet = false;
};

int cmd_train(const TrainArgs& a, ManifestWriter& mw, std::ostream& out, std::ostream& err) {
  const TrainConfig config = resolve_config(a.config);
  if (!a.traces.empty() && config.kind != ModelKind::kTransducer)
    throw UsageError("--traces is only available for the il model");
  const Corpus train = load_corpus(a.train);
  const Corpus dev = load_corpus(a.dev);
  auto model = create_model(config, build_vocabulary(train));
  const TrainingLog log = train_model(*model, train, dev, [&](const EpochRecord& r) {
    if (a.quiet) return;
    err << "epoch " << r.epoch << " loss " << std::fixed << std::setprecision(4) << r.train_loss
        << " dev " << std::setprecision(2) << r.dev_accuracy << " best " << r.best_so_far;
    if (r.has_p_expert) err << " p_expert " << std::setprecision(3) << r.p_expert;
    err << "\n" << std::defaultfloat;
  });
  save_model(a.out, *model);
  const std::string log_path = a.log.empty() ? a.out + ".log.jsonl" : a.log;
  write_text(log_path, log.to_jsonl());

  auto& m = mw.manifest();
  m.config = config.to_json();
  m.seed = config.seed;
  m.inputs = {{"train", a.train}, {"dev", a.dev}};
  if (!a.config.config_file.empty()) m.inputs["config"] = a.config.config_file;
  m.outputs = {{"model", a.out}, {"log", log_path}};

  if (!a.traces.empty()) {
    const auto& tm = static_cast<const TransducerModel&>(*model);
    const Vocabulary& v = tm.vocab();
    auto render = [&](int s) -> std::string {
      if (s == kBoundary) return u32_to_utf8(train.boundary_display);
      if (s < kNumReserved) return "<" + std::to_string(s) + ">";
      return u32_to_utf8(v.symbol(s));
    };
    Rng rng = Rng(config.seed).fork(3);
    std::string text;
    for (const auto& ex : train.examples) {
      Expert expert(v.encode(ex.surface), tm.target_symbols(ex.morphemes), v.size(),
                    tm.output_cap(ex.surface.size()));
      text += expert_rollin(expert, rng).to_json(render).dump() + "\n";
    }
    write_text(a.traces, text);
    m.outputs["traces"] = a.traces;
  }
  mw.write(a.out);
  out << "best epoch " << log.best_epoch << " of " << log.epochs.size() << ", dev accuracy "
      << log.best_dev_accuracy << "\n";
  return kExitOk;
}

struct PredictArgs {
  std::string model, input, out, delimiter = "+";
  int beam = 0;
  CLI::Option* beam_opt = nullptr;
};

int cmd_predict(const PredictArgs& a, ManifestWriter& mw) {
  const char32_t delimiter = parse_delimiter(a.delimiter);
  const auto model = load_model(a.model);
  const int beam = a.beam_opt->count() ? a.beam : model->config().beam_width;
  if (beam < 1) throw UsageError("--beam must be at least 1");
  std::string text;
  for (const auto& line : split_lines(read_text(a.input))) {
    const std::string word = line.substr(0, line.find('\t'));
    std::u32string surface;
    try {
      surface = utf8_to_u32(word);
    } catch (const InvalidArgument& e) {
      throw Error(a.input + ": " + e.what());
    }
    text += word + "\t";
    if (!surface.empty()) text += render_segmentation(model->predict(surface, beam), delimiter);
    text += "\n";
  }
  write_text(a.out, text);
  auto& m = mw.manifest();
  m.config = model->config().to_json();
  m.config["beam_width"] = beam;
  m.seed = model->config().seed;
  m.inputs = {{"model", a.model}, {"input", a.input}};
  m.outputs = {{"predictions", a.out}};
  mw.write(a.out);
  return kExitOk;
}

struct EvaluateArgs {
  std::string gold, pred, baseline, out, delimiter;
};

int cmd_evaluate(const EvaluateArgs& a, ManifestWriter& mw, std::ostream& out) {
  const Corpus gold = load_corpus(a.gold);
  const char32_t delimiter = a.delimiter.empty() ? gold.boundary_display : parse_delimiter(a.delimiter);
  const auto gm = gold_morphemes(gold);
  const auto pm = align_predictions(gold, read_predictions(a.pred, delimiter), a.pred);
  const MetricsReport report = evaluate(gm, pm);
  nlohmann::json doc = {{"metrics", report.to_json()}};
  std::vector<std::string> names = {"system"};
  std::vector<MetricsReport> reports = {report};
  std::vector<bool> significant = {false};
  if (!a.baseline.empty()) {
    const auto bm = align_predictions(gold, read_predictions(a.baseline, delimiter), a.baseline);
    const MetricsReport base = evaluate(gm, bm);
    const McNemarResult test = mcnemar(correctness(gm, pm), correctness(gm, bm));
    doc["baseline_metrics"] = base.to_json();
    doc["mcnemar"] = test.to_json();
    names.push_back("baseline");
    reports.push_back(base);
    significant = {test.significant_at_01, false};
  }
  out << format_metrics_table(names, reports, significant);
  if (!a.out.empty()) {
    write_text(a.out, doc.dump(2) + "\n");
    auto& m = mw.manifest();
    m.inputs = {{"gold", a.gold}, {"predictions", a.pred}};
    if (!a.baseline.empty()) m.inputs["baseline"] = a.baseline;
    m.outputs = {{"metrics", a.out}};
    mw.write(a.out);
  } else {
    out << doc.dump(2) << "\n";
  }
  return kExitOk;
}

struct AnalyzeArgs {
  std::string gold, pred, out, flags, delimiter;
};

int cmd_analyze(const AnalyzeArgs& a, ManifestWriter& mw, std::ostream& out) {
  const Corpus gold = load_corpus(a.gold);
  const char32_t delimiter = a.delimiter.empty() ? gold.boundary_display : parse_delimiter(a.delimiter);
  const auto gm = gold_morphemes(gold);
  const auto pm = align_predictions(gold, read_predictions(a.pred, delimiter), a.pred);
  std::vector<std::u32string> surfaces;
  for (const auto& ex : gold.examples) surfaces.push_back(ex.surface);
  std::vector<ErrorFlags> flags;
  const ErrorProfile profile = error_profile(surfaces, gm, pm, &flags);
  out << format_error_table({"system"}, {profile});

  auto& m = mw.manifest();
  m.inputs = {{"gold", a.gold}, {"predictions", a.pred}};
  if (!a.flags.empty()) {
    std::string text =
        "surface\tgold\tprediction\tcorrect\toverseg\tunderseg\trestoration\toverrestoration\t"
        "wrong_seg\n";
    for (size_t i = 0; i < flags.size(); ++i) {
      const auto& f = flags[i];
      text += u32_to_utf8(surfaces[i]) + "\t" + render_segmentation(gm[i], delimiter) + "\t" +
              render_segmentation(pm[i], delimiter) + "\t" + (gm[i] == pm[i] ? "1" : "0");
      for (bool b : {f.overseg, f.underseg, f.restoration, f.overrestoration, f.wrong_seg})
        text += b ? "\t1" : "\t0";
      text += "\n";
    }
    write_text(a.flags, text);
    m.outputs["flags"] = a.flags;
  }
  if (!a.out.empty()) {
    write_text(a.out, profile.to_json().dump(2) + "\n");
    m.outputs["profile"] = a.out;
    mw.write(a.out);
  } else {
    out << profile.to_json().dump(2) << "\n";
    if (!a.flags.empty()) mw.write(a.flags);
  }
  return kExitOk;
}

struct StatsArgs {
  std::string corpus, out;
  size_t top = 10;
};

int cmd_stats(const StatsArgs& a, ManifestWriter& mw, std::ostream& out) {
  const Corpus corpus = load_corpus(a.corpus);
  if (corpus.empty()) throw Error(a.corpus + " has no examples");
  nlohmann::json doc = {{"corpus", corpus.name}, {"stats", to_json(corpus_stats(corpus))}};
  nlohmann::json top = nlohmann::json::array();
  for (const auto& [morpheme, percent] : morpheme_frequencies(corpus, a.top))
    top.push_back({{"morpheme", u32_to_utf8(morpheme)}, {"percent", percent}});
  doc["top_morphemes"] = top;
  const std::string text = doc.dump(2) + "\n";
  if (a.out.empty()) {
    out << text;
    return kExitOk;
  }
  write_text(a.out, text);
  auto& m = mw.manifest();
  m.inputs = {{"corpus", a.corpus}};
  m.outputs = {{"stats", a.out}};
  mw.write(a.out);
  return kExitOk;
}

struct CvArgs {
  ConfigFlags config;
  FoldFlags folds;
  std::string baseline, out;
  bool quiet = false;
};

FoldCallback fold_progress(bool quiet, std::ostream& err, const std::string& label) {
  if (quiet) return {};
  return [&err, label](const FoldOutcome& f) {
    err << label << " fold " << f.fold << " (" << f.train_size << " train): accuracy "
        << std::fixed << std::setprecision(2) << f.metrics.accuracy << std::defaultfloat
        << "\n";
  };
}

int cmd_cv(const CvArgs& a, ManifestWriter& mw, std::ostream& out, std::ostream& err) {
  const TrainConfig config = resolve_config(a.config);
  std::optional<TrainConfig> baseline_config;
  if (!a.baseline.empty()) baseline_config = resolve_config(a.config, a.baseline);
  auto& m = mw.manifest();
  std::string name;
  const auto folds = load_folds(a.folds, to_string(config.regime), config.seed, &name, m.inputs);
  ExperimentOptions options;
  options.jobs = a.folds.jobs;
  ExperimentResult result = run_cross_validation(
      folds, config, options, fold_progress(a.quiet, err, to_string(config.kind)), name);
  nlohmann::json doc;
  std::vector<std::string> names = {to_string(config.kind)};
  std::vector<MetricsReport> reports = {result.mean};
  std::vector<bool> significant = {false};
  if (baseline_config) {
    const ExperimentResult base =
        run_cross_validation(folds, *baseline_config, options,
                             fold_progress(a.quiet, err, to_string(baseline_config->kind)), name);
    attach_baseline(result, base);
    doc = result.to_json();
    doc["baseline_result"] = base.to_json();
    names.push_back(to_string(base.config.kind));
    reports.push_back(base.mean);
    significant = {result.vs_baseline->significant_at_01, false};
  } else {
    doc = result.to_json();
  }
  write_text(a.out, doc.dump(2) + "\n");
  out << format_metrics_table(names, reports, significant);
  m.config = config.to_json();
  m.seed = config.seed;
  m.outputs = {{"result", a.out}};
  mw.write(a.out);
  return kExitOk;
}

struct CurveArgs {
  ConfigFlags config;
  FoldFlags folds;
  std::vector<std::string> models;
  std::vector<size_t> sizes;
  std::string out, json;
  bool quiet = false;
};

int cmd_curve(const CurveArgs& a, ManifestWriter& mw, std::ostream& out, std::ostream& err) {
  std::vector<std::string> models = a.models;
  if (models.empty()) models.push_back(a.config.model.empty() ? "il" : a.config.model);
  std::vector<TrainConfig> configs;
  for (const auto& name : models) configs.push_back(resolve_config(a.config, name));
  const std::vector<size_t> sizes = a.sizes.empty() ? kDefaultCurveSizes : a.sizes;
  auto& m = mw.manifest();
  std::string name;
  const auto folds = load_folds(a.folds, "high", configs.front().seed, &name, m.inputs);
  std::vector<ExperimentResult> points;
  nlohmann::json all = nlohmann::json::array();
  for (const auto& config : configs) {
    try {
      auto curve = learning_curve(folds, config, sizes, config.seed, a.folds.jobs,
                                  fold_progress(a.quiet, err, to_string(config.kind)), name);
      for (auto& p : curve) {
        all.push_back(p.to_json());
        points.push_back(std::move(p));
      }
    } catch (const InvalidArgument& e) {
      throw UsageError(e.what());
    }
  }
  write_text(a.out, curve_tsv(points));
  m.outputs = {{"curve", a.out}};
  if (!a.json.empty()) {
    write_text(a.json, all.dump(2) + "\n");
    m.outputs["results"] = a.json;
  }
  nlohmann::json cfgs = nlohmann::json::array();
  for (const auto& c : configs) cfgs.push_back(c.to_json());
  m.config = cfgs;
  m.seed = configs.front().seed;
  mw.write(a.out);
  out << points.size() << " curve points written to " << a.out << "\n";
  return kExitOk;
}

struct SynthArgs {
  std::string spec, out;
  size_t n = 0;
  uint64_t seed = 0;
};

int cmd_synth(const SynthArgs& a, ManifestWriter& mw, std::ostream& out) {
  SyntheticLanguageSpec spec;
  if (!a.spec.empty()) {
    try {
      spec = SyntheticLanguageSpec::load(a.spec);
    } catch (const InvalidArgument& e) {
      throw UsageError(a.spec + ": " + e.what());
    }
  }
  const Corpus corpus = generate_synthetic(spec, a.n, a.seed);
  write_corpus(a.out, corpus);
  auto& m = mw.manifest();
  m.config = spec.to_json();
  m.seed = a.seed;
  if (!a.spec.empty()) m.inputs = {{"spec", a.spec}};
  m.outputs = {{"corpus", a.out}, {"format", a.out + ".manifest"}};
  mw.write(a.out);
  out << corpus.size() << " words written to " << a.out << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Canonical morphological segmentation toolkit", "canseg"};
  app.set_version_flag("--version", version());
  app.require_subcommand(1);

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "train a segmentation model");
  train.config.add(train_cmd, true);
  train_cmd->add_option("--train", train.train, "training corpus TSV")->required();
  train_cmd->add_option("--dev", train.dev, "development corpus TSV")->required();
  train_cmd->add_option("--out", train.out, "model file to write")->required();
  train_cmd->add_option("--log", train.log, "training log (default <out>.log.jsonl)");
  train_cmd->add_option("--traces", train.traces, "write expert roll-in traces (il only)");
  train_cmd->add_flag("-q,--quiet", train.quiet, "no per-epoch progress");

  PredictArgs predict;
  auto* predict_cmd = app.add_subcommand("predict", "segment a word list");
  predict_cmd->add_option("-m,--model", predict.model, "model file")->required();
  predict_cmd->add_option("--input", predict.input, "one word per line")->required();
  predict_cmd->add_option("--out", predict.out, "predictions TSV")->required();
  predict.beam_opt =
      predict_cmd->add_option("--beam", predict.beam, "beam width (default from the model)");
  predict_cmd->add_option("--delimiter", predict.delimiter, "morpheme delimiter (default +)");

  EvaluateArgs evaluate_args;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "score predictions against gold");
  evaluate_cmd->add_option("--gold", evaluate_args.gold, "gold corpus TSV")->required();
  evaluate_cmd->add_option("--pred", evaluate_args.pred, "predictions TSV")->required();
  evaluate_cmd->add_option("--baseline", evaluate_args.baseline,
                           "baseline predictions for McNemar's test");
  evaluate_cmd->add_option("--out", evaluate_args.out, "metrics JSON");
  evaluate_cmd->add_option("--delimiter", evaluate_args.delimiter,
                           "prediction delimiter (default: the gold corpus's)");

  AnalyzeArgs analyze;
  auto* analyze_cmd = app.add_subcommand("analyze-errors", "error taxonomy of predictions");
  analyze_cmd->add_option("--gold", analyze.gold, "gold corpus TSV")->required();
  analyze_cmd->add_option("--pred", analyze.pred, "predictions TSV")->required();
  analyze_cmd->add_option("--out", analyze.out, "error profile JSON");
  analyze_cmd->add_option("--flags", analyze.flags, "per-example category flags TSV");
  analyze_cmd->add_option("--delimiter", analyze.delimiter,
                          "prediction delimiter (default: the gold corpus's)");

  StatsArgs stats;
  auto* stats_cmd = app.add_subcommand("stats", "corpus statistics");
  stats_cmd->add_option("--corpus", stats.corpus, "corpus TSV")->required();
  stats_cmd->add_option("--top", stats.top, "most frequent morphemes to list (default 10)");
  stats_cmd->add_option("--out", stats.out, "statistics JSON");

  CvArgs cv;
  auto* cv_cmd = app.add_subcommand("cv", "cross-validation experiment");
  cv.config.add(cv_cmd, true);
  cv.folds.add(cv_cmd);
  cv_cmd->add_option("--baseline", cv.baseline, "also run this model kind and compare");
  cv_cmd->add_option("--out", cv.out, "experiment result JSON")->required();
  cv_cmd->add_flag("-q,--quiet", cv.quiet, "no per-fold progress");

  CurveArgs curve;
  auto* curve_cmd = app.add_subcommand("curve", "learning curve over training sizes");
  curve.config.add(curve_cmd, false);
  curve.folds.add(curve_cmd);
  curve_cmd->add_option("--models", curve.models, "model kinds (default il)")->delimiter(',');
  curve_cmd->add_option("--sizes", curve.sizes, "training sizes (default 100,...,600)")
      ->delimiter(',');
  curve_cmd->add_option("--out", curve.out, "curve TSV")->required();
  curve_cmd->add_option("--json", curve.json, "full experiment results JSON");
  curve_cmd->add_flag("-q,--quiet", curve.quiet, "no per-fold progress");

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic corpus");
  synth_cmd->add_option("--spec", synth.spec, "language spec JSON (default built in)");
  synth_cmd->add_option("--n", synth.n, "number of words")->required();
  synth_cmd->add_option("--seed", synth.seed, "random seed (default 0)");
  synth_cmd->add_option("--out", synth.out, "corpus TSV")->required();

  std::vector<const char*> argv = {"canseg"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  CLI::App* chosen = app.get_subcommands().front();
  ManifestWriter mw(chosen->get_name(), args);
  try {
    if (chosen == train_cmd) return cmd_train(train, mw, out, err);
    if (chosen == predict_cmd) return cmd_predict(predict, mw);
    if (chosen == evaluate_cmd) return cmd_evaluate(evaluate_args, mw, out);
    if (chosen == analyze_cmd) return cmd_analyze(analyze, mw, out);
    if (chosen == stats_cmd) return cmd_stats(stats, mw, out);
    if (chosen == cv_cmd) return cmd_cv(cv, mw, out, err);
    if (chosen == curve_cmd) return cmd_curve(curve, mw, out, err);
    if (chosen == synth_cmd) return cmd_synth(synth, mw, out);
  } catch (const UsageError& e) {
    err << "canseg " << chosen->get_name() << ": " << e.what() << "\n"
        << "Run with --help for more information.\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "canseg " << chosen->get_name() << ": error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace canseg
