#include "canseg/harness.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>

#include "canseg/errors.h"
#include "canseg/unicode.h"

namespace canseg {

std::vector<FoldData> materialize_folds(const Corpus& corpus, const FoldPlan& plan) {
  std::vector<FoldData> out;
  for (size_t f = 0; f < plan.folds.size(); ++f) {
    const std::string tag = ".fold" + std::to_string(f);
    out.push_back({select(corpus, plan.folds[f].train, tag + ".train"),
                   select(corpus, plan.folds[f].dev, tag + ".dev"),
                   select(corpus, plan.folds[f].test, tag + ".test")});
  }
  return out;
}

MetricsReport mean_report(const std::vector<MetricsReport>& reports) {
  MetricsReport m;
  if (reports.empty()) return m;
  double ed_total = 0;
  for (const auto& r : reports) {
    m.n += r.n;
    m.accuracy += r.accuracy;
    ed_total += static_cast<double>(r.edit_distance_total);
    m.edit_distance_mean += r.edit_distance_mean;
    m.precision += r.precision;
    m.recall += r.recall;
    m.f1 += r.f1;
  }
  const double k = static_cast<double>(reports.size());
  m.accuracy /= k;
  m.edit_distance_mean /= k;
  m.precision /= k;
  m.recall /= k;
  m.f1 /= k;
  m.edit_distance_total = std::lround(ed_total / k);
  return m;
}

std::vector<bool> ExperimentResult::correctness() const {
  std::vector<bool> out;
  for (const auto& f : folds) out.insert(out.end(), f.correct.begin(), f.correct.end());
  return out;
}

nlohmann::json ExperimentResult::to_json() const {
  nlohmann::json per_fold = nlohmann::json::array();
  double ed_total_mean = 0;
  for (const auto& f : folds) {
    per_fold.push_back({{"fold", f.fold},
                        {"train_size", f.train_size},
                        {"best_epoch", f.log.best_epoch},
                        {"epochs_run", f.log.epochs.size()},
                        {"best_dev_accuracy", f.log.best_dev_accuracy},
                        {"metrics", f.metrics.to_json()}});
    ed_total_mean += static_cast<double>(f.metrics.edit_distance_total);
  }
  if (!folds.empty()) ed_total_mean /= static_cast<double>(folds.size());
  nlohmann::json mean_doc = mean.to_json();
  mean_doc["edit_distance_total"] = ed_total_mean;
  nlohmann::json doc = {{"corpus", corpus},
                        {"model", to_string(config.kind)},
                        {"regime", to_string(config.regime)},
                        {"config_hash", config.hash()},
                        {"config", config.to_json()},
                        {"seed", seed},
                        {"subsample_size", subsample_size},
                        {"folds", per_fold},
                        {"mean", mean_doc}};
  if (vs_baseline) {
    doc["baseline"] = baseline;
    doc["mcnemar"] = vs_baseline->to_json();
  }
  return doc;
}

namespace {

FoldOutcome run_fold(const FoldData& data, int fold, const TrainConfig& base,
                     const ExperimentOptions& options) {
  Corpus train = data.train;
  if (options.subsample > 0) train = subsample(data.train, options.subsample, options.subsample_seed);
  TrainConfig config = base;
  config.seed = base.seed + static_cast<uint64_t>(fold);
  auto model = create_model(config, build_vocabulary(train));
  FoldOutcome out;
  out.fold = fold;
  out.train_size = train.size();
  out.log = train_model(*model, train, data.dev);
  std::vector<Morphemes> gold;
  std::vector<Morphemes> pred;
  for (const auto& ex : data.test.examples) {
    gold.push_back(ex.morphemes);
    pred.push_back(model->predict(ex.surface, config.beam_width));
  }
  out.metrics = evaluate(gold, pred);
  out.correct = correctness(gold, pred);
  if (options.keep_predictions) out.predictions = std::move(pred);
  return out;
}

}  // namespace

ExperimentResult run_cross_validation(const std::vector<FoldData>& folds,
                                      const TrainConfig& config,
                                      const ExperimentOptions& options,
                                      const FoldCallback& on_fold,
                                      const std::string& corpus_name) {
  if (folds.empty()) throw InvalidArgument("no folds to run");
  ExperimentResult result;
  result.corpus = corpus_name;
  result.config = config;
  result.seed = config.seed;
  result.subsample_size = options.subsample;
  result.folds.resize(folds.size());

  std::vector<std::exception_ptr> errors(folds.size());
  std::mutex callback_mutex;
  auto work = [&](size_t f) {
    try {
      result.folds[f] = run_fold(folds[f], static_cast<int>(f), config, options);
      if (on_fold) {
        std::lock_guard<std::mutex> lock(callback_mutex);
        on_fold(result.folds[f]);
      }
    } catch (...) {
      errors[f] = std::current_exception();
    }
  };
  const size_t jobs = static_cast<size_t>(std::max(1, options.jobs));
  if (jobs == 1) {
    for (size_t f = 0; f < folds.size(); ++f) {
      work(f);
      if (errors[f]) break;
    }
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    for (size_t j = 0; j < std::min(jobs, folds.size()); ++j) {
      pool.emplace_back([&] {
        for (size_t f = next++; f < folds.size(); f = next++) work(f);
      });
    }
    for (auto& t : pool) t.join();
  }
  for (size_t f = 0; f < folds.size(); ++f) {
    if (!errors[f]) continue;
    try {
      std::rethrow_exception(errors[f]);
    } catch (const std::exception& e) {
      throw Error("fold " + std::to_string(f) + ": " + e.what());
    }
  }
  std::vector<MetricsReport> reports;
  for (const auto& f : result.folds) reports.push_back(f.metrics);
  result.mean = mean_report(reports);
  return result;
}

ExperimentResult run_cross_validation(const Corpus& corpus, const TrainConfig& config,
                                      const FoldPlan& plan, const ExperimentOptions& options,
                                      const FoldCallback& on_fold) {
  return run_cross_validation(materialize_folds(corpus, plan), config, options, on_fold,
                              corpus.name);
}

void attach_baseline(ExperimentResult& result, const ExperimentResult& baseline) {
  result.vs_baseline = mcnemar(result.correctness(), baseline.correctness());
  result.baseline = to_string(baseline.config.kind);
}

std::vector<ExperimentResult> learning_curve(const std::vector<FoldData>& folds,
                                             const TrainConfig& config,
                                             const std::vector<size_t>& sizes, uint64_t seed,
                                             int jobs, const FoldCallback& on_fold,
                                             const std::string& corpus_name) {
  if (sizes.empty()) throw InvalidArgument("no learning-curve sizes");
  for (size_t size : sizes) {
    if (size == 0) throw InvalidArgument("learning-curve sizes must be positive");
    for (size_t f = 0; f < folds.size(); ++f)
      if (size > folds[f].train.size())
        throw InvalidArgument("size " + std::to_string(size) + " exceeds the " +
                              std::to_string(folds[f].train.size()) +
                              " training examples of fold " + std::to_string(f));
  }
  std::vector<ExperimentResult> out;
  for (size_t size : sizes) {
    ExperimentOptions options;
    options.subsample = size;
    options.subsample_seed = seed;
    options.jobs = jobs;
    out.push_back(run_cross_validation(folds, config, options, on_fold, corpus_name));
  }
  return out;
}

std::string curve_tsv(const std::vector<ExperimentResult>& points) {
  std::string out = "size\tmodel\tfold\taccuracy\ted_total\ted_mean\tf1\n";
  char buf[256];
  for (const auto& p : points) {
    for (const auto& f : p.folds) {
      std::snprintf(buf, sizeof(buf), "%zu\t%s\t%d\t%.4f\t%ld\t%.6f\t%.4f\n", f.train_size,
                    to_string(p.config.kind).c_str(), f.fold, f.metrics.accuracy,
                    f.metrics.edit_distance_total, f.metrics.edit_distance_mean, f.metrics.f1);
      out += buf;
    }
  }
  return out;
}

}  // namespace canseg
