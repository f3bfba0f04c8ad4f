#ifndef CANSEG_EVAL_H_
#define CANSEG_EVAL_H_

#include <optional>
#include <string>
#include <vector>

#include "canseg/data.h"
#include "nlohmann/json.hpp"

namespace canseg {

// Gold and predicted segmentations are parallel lists of morpheme lists.
// Predictions may contain empty morphemes (raw model output split on
// boundaries). All functions throw InvalidArgument on length mismatch or
// empty input.

double word_accuracy(const std::vector<Morphemes>& gold, const std::vector<Morphemes>& pred);

struct EditDistance {
  long total = 0;
  double mean = 0;
};
// Per word, Levenshtein between the boundary-joined strings.
EditDistance edit_distance(const std::vector<Morphemes>& gold,
                           const std::vector<Morphemes>& pred);

struct PrecisionRecallF1 {
  double precision = 0;  // percent
  double recall = 0;
  double f1 = 0;
};
// Micro-averaged multiset morpheme overlap.
PrecisionRecallF1 morpheme_f1(const std::vector<Morphemes>& gold,
                              const std::vector<Morphemes>& pred);

struct MetricsReport {
  size_t n = 0;
  double accuracy = 0;
  long edit_distance_total = 0;
  double edit_distance_mean = 0;
  double precision = 0;
  double recall = 0;
  double f1 = 0;

  nlohmann::json to_json() const;
  static MetricsReport from_json(const nlohmann::json& doc);
};

MetricsReport evaluate(const std::vector<Morphemes>& gold, const std::vector<Morphemes>& pred);
// Per-word exact-match flags.
std::vector<bool> correctness(const std::vector<Morphemes>& gold,
                              const std::vector<Morphemes>& pred);

// ---------------------------------------------------------------------------

inline constexpr double kChiSquare1DofP01 = 6.635;

struct McNemarResult {
  long b = 0;  // A correct, B wrong
  long c = 0;  // A wrong, B correct
  // (|b - c| - 1)^2 / (b + c); empty when there are no discordant pairs.
  std::optional<double> statistic;
  bool significant_at_01 = false;

  nlohmann::json to_json() const;
};

McNemarResult mcnemar(const std::vector<bool>& correct_a, const std::vector<bool>& correct_b);

struct SystemComparison {
  MetricsReport a;
  MetricsReport b;
  double accuracy_delta = 0;  // a - b
  long edit_distance_delta = 0;
  double f1_delta = 0;
  McNemarResult mcnemar;

  nlohmann::json to_json() const;
};

SystemComparison compare_systems(const MetricsReport& a, const MetricsReport& b,
                                 const std::vector<bool>& correct_a,
                                 const std::vector<bool>& correct_b);

// ---------------------------------------------------------------------------

struct ErrorFlags {
  bool overseg = false;
  bool underseg = false;
  bool restoration = false;
  bool overrestoration = false;
  bool wrong_seg = false;
};

// Cumulative morpheme lengths, excluding the final one.
std::vector<size_t> boundary_indices(const Morphemes& morphemes);

// Category rules:
//   overseg          more boundaries than gold
//   underseg         fewer boundaries than gold
//   restoration      pred != gold and concat(pred) != surface
//   overrestoration  pred != gold, concat(gold) == surface, concat(pred) != surface
//   wrong_seg        boundary index lists differ
ErrorFlags classify_error(const std::u32string& surface, const Morphemes& gold,
                          const Morphemes& pred);

struct ErrorProfile {
  size_t n = 0;
  double overseg = 0;  // percent of examples
  double underseg = 0;
  double restoration = 0;
  double overrestoration = 0;
  double wrong_seg = 0;

  nlohmann::json to_json() const;
};

ErrorProfile error_profile(const std::vector<std::u32string>& surfaces,
                           const std::vector<Morphemes>& gold,
                           const std::vector<Morphemes>& pred,
                           std::vector<ErrorFlags>* per_example = nullptr);

// ---------------------------------------------------------------------------

// Aligned plain-text table: one row per system, columns Acc. / ED / F1.
std::string format_metrics_table(const std::vector<std::string>& systems,
                                 const std::vector<MetricsReport>& reports,
                                 const std::vector<bool>& significant = {});
// Rows per system, columns for the five error categories.
std::string format_error_table(const std::vector<std::string>& systems,
                               const std::vector<ErrorProfile>& profiles);

}  // namespace canseg

#endif  // CANSEG_EVAL_H_
