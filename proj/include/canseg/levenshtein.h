#ifndef CANSEG_LEVENSHTEIN_H_
#define CANSEG_LEVENSHTEIN_H_

#include <algorithm>
#include <span>
#include <vector>

namespace canseg {

// Classical Levenshtein distance (unit insert, delete, substitute). This is
// the single implementation shared by the metrics and the transducer's
// sequence-level loss.

// Distances from `a` to every prefix of `b`: out[j] = lev(a, b[0..j)).
template <typename T>
std::vector<int> levenshtein_prefix_row(std::span<const T> a, std::span<const T> b) {
  std::vector<int> row(b.size() + 1);
  for (size_t j = 0; j <= b.size(); ++j) row[j] = static_cast<int>(j);
  std::vector<int> next(b.size() + 1);
  for (size_t i = 0; i < a.size(); ++i) {
    next[0] = static_cast<int>(i + 1);
    for (size_t j = 0; j < b.size(); ++j) {
      next[j + 1] = std::min({row[j + 1] + 1, next[j] + 1, row[j] + (a[i] == b[j] ? 0 : 1)});
    }
    row.swap(next);
  }
  return row;
}

// Extends a prefix row for `a` to one for `a + symbol`.
template <typename T>
std::vector<int> levenshtein_extend_row(const std::vector<int>& row, const T& symbol,
                                        std::span<const T> b) {
  std::vector<int> next(row.size());
  next[0] = row[0] + 1;
  for (size_t j = 0; j < b.size(); ++j) {
    next[j + 1] = std::min({row[j + 1] + 1, next[j] + 1, row[j] + (symbol == b[j] ? 0 : 1)});
  }
  return next;
}

template <typename T>
int levenshtein(std::span<const T> a, std::span<const T> b) {
  return levenshtein_prefix_row(a, b).back();
}

template <typename Container>
int levenshtein(const Container& a, const Container& b) {
  using T = typename Container::value_type;
  return levenshtein<T>(std::span<const T>(a.data(), a.size()),
                        std::span<const T>(b.data(), b.size()));
}

}  // namespace canseg

#endif  // CANSEG_LEVENSHTEIN_H_
