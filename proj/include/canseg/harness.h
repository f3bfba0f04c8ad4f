#ifndef CANSEG_HARNESS_H_
#define CANSEG_HARNESS_H_

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "canseg/config.h"
#include "canseg/data.h"
#include "canseg/eval.h"
#include "canseg/model.h"

namespace canseg {

// Materialized splits of one fold.
struct FoldData {
  Corpus train;
  Corpus dev;
  Corpus test;
};

std::vector<FoldData> materialize_folds(const Corpus& corpus, const FoldPlan& plan);

struct FoldOutcome {
  int fold = 0;
  size_t train_size = 0;
  MetricsReport metrics;
  std::vector<bool> correct;  // per test example
  TrainingLog log;
  std::vector<Morphemes> predictions;
};

struct ExperimentResult {
  std::string corpus;
  TrainConfig config;
  uint64_t seed = 0;
  size_t subsample_size = 0;  // 0: full training splits
  std::vector<FoldOutcome> folds;
  // Arithmetic means of the per-fold values; n is the total test size.
  MetricsReport mean;
  std::optional<McNemarResult> vs_baseline;
  std::string baseline;

  // Concatenated per-example correctness over all folds.
  std::vector<bool> correctness() const;
  // Deterministic: no timings, no paths.
  nlohmann::json to_json() const;
};

MetricsReport mean_report(const std::vector<MetricsReport>& reports);

struct ExperimentOptions {
  size_t subsample = 0;   // training examples per fold, 0 for all
  uint64_t subsample_seed = 0;
  int jobs = 1;           // folds trained concurrently
  bool keep_predictions = false;
};

using FoldCallback = std::function<void(const FoldOutcome&)>;

// Trains one model per fold (vocabulary from that fold's training split),
// evaluates on the fold's test split and aggregates. Fold f trains with
// seed config.seed + f. Errors are rethrown prefixed with "fold f: ".
ExperimentResult run_cross_validation(const std::vector<FoldData>& folds,
                                      const TrainConfig& config,
                                      const ExperimentOptions& options = {},
                                      const FoldCallback& on_fold = {},
                                      const std::string& corpus_name = "");
ExperimentResult run_cross_validation(const Corpus& corpus, const TrainConfig& config,
                                      const FoldPlan& plan, const ExperimentOptions& options = {},
                                      const FoldCallback& on_fold = {});

// Annotates `result` with McNemar's test against a baseline run on the same
// folds.
void attach_baseline(ExperimentResult& result, const ExperimentResult& baseline);

inline const std::vector<size_t> kDefaultCurveSizes = {100, 200, 300, 400, 500, 600};

// One cross-validation run per size on nested subsamples of every fold's
// training split (the size-200 sample contains the size-100 sample).
std::vector<ExperimentResult> learning_curve(const std::vector<FoldData>& folds,
                                             const TrainConfig& config,
                                             const std::vector<size_t>& sizes, uint64_t seed,
                                             int jobs = 1, const FoldCallback& on_fold = {},
                                             const std::string& corpus_name = "");

// Header plus one row per (size, model, fold):
// size, model, fold, accuracy, ed_total, ed_mean, f1.
std::string curve_tsv(const std::vector<ExperimentResult>& points);

}  // namespace canseg

#endif  // CANSEG_HARNESS_H_
