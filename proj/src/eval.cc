#include "canseg/eval.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "canseg/errors.h"
#include "canseg/levenshtein.h"

namespace canseg {

namespace {

void check_parallel(size_t gold, size_t pred) {
  if (gold != pred) {
    throw InvalidArgument("gold has " + std::to_string(gold) + " entries but prediction has " +
                          std::to_string(pred));
  }
  if (gold == 0) throw InvalidArgument("cannot evaluate an empty test set");
}

double percent(double num, double den) { return den > 0 ? 100.0 * num / den : 0.0; }

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string pad_right(const std::string& s, size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

std::string pad_left(const std::string& s, size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

std::string render_table(const std::vector<std::string>& header,
                         const std::vector<std::vector<std::string>>& rows) {
  std::vector<size_t> width(header.size());
  for (size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& r : rows)
    for (size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
  std::ostringstream out;
  auto emit = [&](const std::vector<std::string>& r) {
    for (size_t c = 0; c < r.size(); ++c) {
      if (c > 0) out << "  ";
      out << (c == 0 ? pad_right(r[c], width[c]) : pad_left(r[c], width[c]));
    }
    out << '\n';
  };
  emit(header);
  size_t total = 0;
  for (size_t c = 0; c < width.size(); ++c) total += width[c] + (c > 0 ? 2 : 0);
  out << std::string(total, '-') << '\n';
  for (const auto& r : rows) emit(r);
  return out.str();
}

}  // namespace

double word_accuracy(const std::vector<Morphemes>& gold, const std::vector<Morphemes>& pred) {
  check_parallel(gold.size(), pred.size());
  size_t correct = 0;
  for (size_t i = 0; i < gold.size(); ++i) correct += gold[i] == pred[i];
  return percent(static_cast<double>(correct), static_cast<double>(gold.size()));
}

std::vector<bool> correctness(const std::vector<Morphemes>& gold,
                              const std::vector<Morphemes>& pred) {
  check_parallel(gold.size(), pred.size());
  std::vector<bool> out(gold.size());
  for (size_t i = 0; i < gold.size(); ++i) out[i] = gold[i] == pred[i];
  return out;
}

EditDistance edit_distance(const std::vector<Morphemes>& gold,
                           const std::vector<Morphemes>& pred) {
  check_parallel(gold.size(), pred.size());
  EditDistance ed;
  for (size_t i = 0; i < gold.size(); ++i)
    ed.total += levenshtein(join_morphemes(gold[i]), join_morphemes(pred[i]));
  ed.mean = static_cast<double>(ed.total) / static_cast<double>(gold.size());
  return ed;
}

PrecisionRecallF1 morpheme_f1(const std::vector<Morphemes>& gold,
                              const std::vector<Morphemes>& pred) {
  check_parallel(gold.size(), pred.size());
  size_t overlap = 0, n_pred = 0, n_gold = 0;
  for (size_t i = 0; i < gold.size(); ++i) {
    std::map<std::u32string, int> counts;
    for (const auto& m : gold[i]) ++counts[m];
    for (const auto& m : pred[i]) {
      auto it = counts.find(m);
      if (it != counts.end() && it->second > 0) {
        --it->second;
        ++overlap;
      }
    }
    n_pred += pred[i].size();
    n_gold += gold[i].size();
  }
  PrecisionRecallF1 r;
  r.precision = percent(static_cast<double>(overlap), static_cast<double>(n_pred));
  r.recall = percent(static_cast<double>(overlap), static_cast<double>(n_gold));
  r.f1 = r.precision + r.recall > 0 ? 2 * r.precision * r.recall / (r.precision + r.recall) : 0;
  return r;
}

MetricsReport evaluate(const std::vector<Morphemes>& gold, const std::vector<Morphemes>& pred) {
  MetricsReport report;
  report.n = gold.size();
  report.accuracy = word_accuracy(gold, pred);
  const auto ed = edit_distance(gold, pred);
  report.edit_distance_total = ed.total;
  report.edit_distance_mean = ed.mean;
  const auto prf = morpheme_f1(gold, pred);
  report.precision = prf.precision;
  report.recall = prf.recall;
  report.f1 = prf.f1;
  return report;
}

nlohmann::json MetricsReport::to_json() const {
  return {{"n", n},
          {"accuracy", accuracy},
          {"edit_distance_total", edit_distance_total},
          {"edit_distance_mean", edit_distance_mean},
          {"precision", precision},
          {"recall", recall},
          {"f1", f1}};
}

MetricsReport MetricsReport::from_json(const nlohmann::json& doc) {
  MetricsReport r;
  r.n = doc.at("n").get<size_t>();
  r.accuracy = doc.at("accuracy").get<double>();
  r.edit_distance_total = doc.at("edit_distance_total").get<long>();
  r.edit_distance_mean = doc.at("edit_distance_mean").get<double>();
  r.precision = doc.at("precision").get<double>();
  r.recall = doc.at("recall").get<double>();
  r.f1 = doc.at("f1").get<double>();
  return r;
}

McNemarResult mcnemar(const std::vector<bool>& correct_a, const std::vector<bool>& correct_b) {
  if (correct_a.size() != correct_b.size())
    throw InvalidArgument("McNemar inputs differ in length: " + std::to_string(correct_a.size()) +
                          " vs " + std::to_string(correct_b.size()));
  McNemarResult r;
  for (size_t i = 0; i < correct_a.size(); ++i) {
    if (correct_a[i] && !correct_b[i]) ++r.b;
    if (!correct_a[i] && correct_b[i]) ++r.c;
  }
  if (r.b + r.c > 0) {
    const double d = std::abs(static_cast<double>(r.b - r.c)) - 1.0;
    r.statistic = d * d / static_cast<double>(r.b + r.c);
    r.significant_at_01 = *r.statistic > kChiSquare1DofP01;
  }
  return r;
}

nlohmann::json McNemarResult::to_json() const {
  nlohmann::json doc = {{"b", b}, {"c", c}, {"significant_at_0.01", significant_at_01}};
  doc["statistic"] = statistic ? nlohmann::json(*statistic) : nlohmann::json(nullptr);
  doc["defined"] = statistic.has_value();
  return doc;
}

SystemComparison compare_systems(const MetricsReport& a, const MetricsReport& b,
                                 const std::vector<bool>& correct_a,
                                 const std::vector<bool>& correct_b) {
  SystemComparison cmp;
  cmp.a = a;
  cmp.b = b;
  cmp.accuracy_delta = a.accuracy - b.accuracy;
  cmp.edit_distance_delta = a.edit_distance_total - b.edit_distance_total;
  cmp.f1_delta = a.f1 - b.f1;
  cmp.mcnemar = mcnemar(correct_a, correct_b);
  return cmp;
}

nlohmann::json SystemComparison::to_json() const {
  return {{"a", a.to_json()},
          {"b", b.to_json()},
          {"accuracy_delta", accuracy_delta},
          {"edit_distance_delta", edit_distance_delta},
          {"f1_delta", f1_delta},
          {"mcnemar", mcnemar.to_json()}};
}

std::vector<size_t> boundary_indices(const Morphemes& morphemes) {
  std::vector<size_t> out;
  size_t pos = 0;
  for (size_t i = 0; i + 1 < morphemes.size(); ++i) {
    pos += morphemes[i].size();
    out.push_back(pos);
  }
  return out;
}

ErrorFlags classify_error(const std::u32string& surface, const Morphemes& gold,
                          const Morphemes& pred) {
  ErrorFlags f;
  const size_t gb = gold.empty() ? 0 : gold.size() - 1;
  const size_t pb = pred.empty() ? 0 : pred.size() - 1;
  f.overseg = pb > gb;
  f.underseg = pb < gb;
  const bool wrong = pred != gold;
  const bool pred_copies = concat_morphemes(pred) == surface;
  f.restoration = wrong && !pred_copies;
  f.overrestoration = wrong && concat_morphemes(gold) == surface && !pred_copies;
  f.wrong_seg = boundary_indices(pred) != boundary_indices(gold);
  return f;
}

ErrorProfile error_profile(const std::vector<std::u32string>& surfaces,
                           const std::vector<Morphemes>& gold,
                           const std::vector<Morphemes>& pred,
                           std::vector<ErrorFlags>* per_example) {
  check_parallel(gold.size(), pred.size());
  if (surfaces.size() != gold.size())
    throw InvalidArgument("got " + std::to_string(surfaces.size()) + " surfaces for " +
                          std::to_string(gold.size()) + " gold segmentations");
  ErrorProfile p;
  p.n = gold.size();
  if (per_example) per_example->clear();
  size_t counts[5] = {0, 0, 0, 0, 0};
  for (size_t i = 0; i < gold.size(); ++i) {
    const auto f = classify_error(surfaces[i], gold[i], pred[i]);
    counts[0] += f.overseg;
    counts[1] += f.underseg;
    counts[2] += f.restoration;
    counts[3] += f.overrestoration;
    counts[4] += f.wrong_seg;
    if (per_example) per_example->push_back(f);
  }
  const double n = static_cast<double>(p.n);
  p.overseg = percent(static_cast<double>(counts[0]), n);
  p.underseg = percent(static_cast<double>(counts[1]), n);
  p.restoration = percent(static_cast<double>(counts[2]), n);
  p.overrestoration = percent(static_cast<double>(counts[3]), n);
  p.wrong_seg = percent(static_cast<double>(counts[4]), n);
  return p;
}

nlohmann::json ErrorProfile::to_json() const {
  return {{"n", n},
          {"overseg", overseg},
          {"underseg", underseg},
          {"restoration", restoration},
          {"overrestoration", overrestoration},
          {"wrong_seg", wrong_seg}};
}

std::string format_metrics_table(const std::vector<std::string>& systems,
                                 const std::vector<MetricsReport>& reports,
                                 const std::vector<bool>& significant) {
  if (systems.size() != reports.size()) throw InvalidArgument("one report per system required");
  std::vector<std::vector<std::string>> rows;
  for (size_t i = 0; i < systems.size(); ++i) {
    std::string acc = fixed(reports[i].accuracy, 2);
    if (i < significant.size() && significant[i]) acc += " *";
    rows.push_back({systems[i], acc, fixed(reports[i].edit_distance_mean, 3),
                    std::to_string(reports[i].edit_distance_total), fixed(reports[i].f1, 2)});
  }
  std::string out = render_table({"System", "Acc.", "ED/word", "ED", "F1"}, rows);
  if (std::find(significant.begin(), significant.end(), true) != significant.end())
    out += "* significant at p < 0.01 (McNemar)\n";
  return out;
}

std::string format_error_table(const std::vector<std::string>& systems,
                               const std::vector<ErrorProfile>& profiles) {
  if (systems.size() != profiles.size()) throw InvalidArgument("one profile per system required");
  std::vector<std::vector<std::string>> rows;
  for (size_t i = 0; i < systems.size(); ++i) {
    const auto& p = profiles[i];
    rows.push_back({systems[i], fixed(p.overseg, 2), fixed(p.underseg, 2),
                    fixed(p.restoration, 2), fixed(p.overrestoration, 2), fixed(p.wrong_seg, 2)});
  }
  return render_table({"System", "Overseg.", "Underseg.", "Restor.", "Overrestor.", "WrongSeg."},
                      rows);
}

}  // namespace canseg
