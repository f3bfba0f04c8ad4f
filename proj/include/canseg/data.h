#ifndef CANSEG_DATA_H_
#define CANSEG_DATA_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "nlohmann/json.hpp"

namespace canseg {

using Morphemes = std::vector<std::u32string>;

// A surface word and its ordered gold morphemes.
struct SegmentationExample {
  std::u32string surface;
  Morphemes morphemes;

  bool operator==(const SegmentationExample&) const = default;
};

// Throws ValidationError (line 0) if an invariant is broken: empty surface,
// empty morpheme list, empty morpheme, a tab, or a reserved symbol.
void validate_example(const SegmentationExample& example);

// How a corpus file renders segmentations. The delimiter is per corpus
// because '+' is ordinary alphabet material in some orthographies.
struct CorpusFormat {
  std::string name = "corpus";
  char32_t delimiter = U'+';
};

struct Corpus {
  std::string name;
  char32_t boundary_display = U'+';
  std::vector<SegmentationExample> examples;

  size_t size() const { return examples.size(); }
  bool empty() const { return examples.empty(); }
};

// Reads `surface<TAB>segmentation` lines. Errors carry 1-based line numbers:
// ParseError for structural problems (missing tab, empty field), and
// ValidationError for delimiters that would yield empty morphemes.
Corpus parse_corpus(const std::filesystem::path& path, const CorpusFormat& format);
Corpus parse_corpus_text(std::string_view text, const CorpusFormat& format);

// Reads the sidecar manifest `<path>.manifest` (keys `name`, `delimiter`)
// when present; otherwise name = file stem, delimiter = '+'.
CorpusFormat read_corpus_format(const std::filesystem::path& corpus_path);
void write_corpus_format(const std::filesystem::path& corpus_path,
                         const CorpusFormat& format);
Corpus load_corpus(const std::filesystem::path& path);

std::string serialize_corpus(const Corpus& corpus);
void write_corpus(const std::filesystem::path& path, const Corpus& corpus);

// Joins morphemes with `delimiter` (UTF-8).
std::string render_segmentation(const Morphemes& morphemes, char32_t delimiter);

// ---------------------------------------------------------------------------
// Vocabulary

// Reserved symbols occupy the first five indices. Their code points lie
// above U+10FFFF, so no valid UTF-8 text can contain them.
enum ReservedSymbol : int {
  kPad = 0,
  kBegin = 1,
  kEnd = 2,
  kUnknown = 3,
  kBoundary = 4,
};
inline constexpr int kNumReserved = 5;
inline constexpr char32_t kReservedBase = 0x110000;
inline constexpr char32_t kBoundaryChar = kReservedBase + kBoundary;

class Vocabulary {
 public:
  // Only the reserved symbols.
  Vocabulary();
  // Reserved symbols followed by `chars` in order (duplicates ignored).
  explicit Vocabulary(const std::u32string& chars);

  int size() const { return static_cast<int>(index_to_char_.size()); }
  // Returns kUnknown for characters outside the vocabulary.
  int index(char32_t c) const;
  bool contains(char32_t c) const { return char_to_index_.count(c) > 0; }
  char32_t symbol(int index) const;
  const std::vector<char32_t>& symbols() const { return index_to_char_; }

  // Content characters (everything after the reserved block).
  std::u32string characters() const;

  // Encodes characters; `unknown_count` receives the number of substitutions.
  std::vector<int> encode(std::u32string_view text, int* unknown_count = nullptr) const;

  bool operator==(const Vocabulary& other) const {
    return index_to_char_ == other.index_to_char_;
  }

 private:
  void add(char32_t c);

  std::unordered_map<char32_t, int> char_to_index_;
  std::vector<char32_t> index_to_char_;
};

// Characters of every surface and morpheme, first-occurrence order over the
// corpora in the given order. Throws InvalidArgument for an empty list.
Vocabulary build_vocabulary(const std::vector<const Corpus*>& corpora);
Vocabulary build_vocabulary(const Corpus& corpus);

// ---------------------------------------------------------------------------
// Targets

// <begin> m1 <boundary> m2 ... <end>
struct CanonicalTarget {
  std::vector<int> symbols;
  // True if at least one character was replaced by the unknown symbol.
  bool has_unknown = false;
};

CanonicalTarget encode_target(const SegmentationExample& example, const Vocabulary& vocab);
CanonicalTarget encode_target(const Morphemes& morphemes, const Vocabulary& vocab);

// Strict inverse of encode_target: requires framing and a well-formed
// boundary layout, throws ValidationError otherwise.
Morphemes decode_target(const CanonicalTarget& target, const Vocabulary& vocab);

// Splits raw model output (no framing) on boundary symbols, keeping empty
// pieces so that joining reproduces the output exactly.
Morphemes split_prediction(const std::vector<int>& content, const Vocabulary& vocab);
Morphemes split_prediction(std::u32string_view content);

// Morphemes joined by the reserved boundary character.
std::u32string join_morphemes(const Morphemes& morphemes,
                              char32_t boundary = kBoundaryChar);
std::u32string concat_morphemes(const Morphemes& morphemes);

// ---------------------------------------------------------------------------
// Sampling, statistics, folds

// Uniform sample without replacement, returned in corpus order. The draw is
// a prefix of one seeded permutation, so samples with the same seed nest.
Corpus subsample(const Corpus& corpus, size_t n, uint64_t seed);
std::vector<size_t> subsample_indices(size_t size, size_t n, uint64_t seed);

struct CorpusStats {
  size_t words = 0;
  double more_than_three_percent = 0;  // > 3 morphemes
  double surface_percent = 0;          // >= 2 morphemes, concat == surface
  double canonical_percent = 0;        // concat != surface
  double unsegmented_percent = 0;      // 1 morpheme equal to the surface
  double morphemes_per_word = 0;
  double chars_per_word = 0;
};

CorpusStats corpus_stats(const Corpus& corpus);
nlohmann::json to_json(const CorpusStats& stats);

// Top-k morphemes by token count; ties in lexicographic code-point order.
std::vector<std::pair<std::u32string, double>> morpheme_frequencies(
    const Corpus& corpus, size_t k);

// Per-fold split sizes, e.g. 100/100/700 for nine folds over 900 words.
struct FoldPlanSpec {
  int fold_count = 10;
  size_t train = 8000;
  size_t dev = 1000;
  size_t test = 1000;

  static FoldPlanSpec high_resource() { return {10, 8000, 1000, 1000}; }
  static FoldPlanSpec low_resource() { return {9, 100, 100, 700}; }
  // "K:train/dev/test", or the presets "high" and "low".
  static FoldPlanSpec parse(std::string_view text);
  std::string to_string() const;
};

struct Fold {
  std::vector<size_t> train;
  std::vector<size_t> dev;
  std::vector<size_t> test;
};

// Examples are shuffled with the seed and cut into fold_count equal blocks;
// fold f takes consecutive blocks starting at f (cyclically) as train, then
// dev, then test.
struct FoldPlan {
  FoldPlanSpec spec;
  uint64_t seed = 0;
  std::vector<int> assignments;  // block index of every example
  std::vector<Fold> folds;

  nlohmann::json to_json() const;
  static FoldPlan from_json(const nlohmann::json& doc);
};

FoldPlan make_folds(const Corpus& corpus, const FoldPlanSpec& spec, uint64_t seed);

// Materializes one split as a corpus.
Corpus select(const Corpus& corpus, const std::vector<size_t>& indices,
              const std::string& suffix);

}  // namespace canseg

#endif  // CANSEG_DATA_H_
