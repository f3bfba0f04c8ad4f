#include "canseg/data.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "canseg/errors.h"
#include "canseg/rng.h"
#include "canseg/unicode.h"

namespace canseg {

namespace {

bool is_reserved(char32_t c) { return c >= kReservedBase; }

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

}  // namespace

void validate_example(const SegmentationExample& example) {
  if (example.surface.empty()) throw ValidationError(0, "empty surface");
  if (example.morphemes.empty()) throw ValidationError(0, "no morphemes");
  for (char32_t c : example.surface) {
    if (c == U'\t' || is_reserved(c))
      throw ValidationError(0, "surface contains a reserved character");
  }
  for (const auto& m : example.morphemes) {
    if (m.empty()) throw ValidationError(0, "empty morpheme");
    for (char32_t c : m) {
      if (c == U'\t' || is_reserved(c))
        throw ValidationError(0, "morpheme contains a reserved character");
    }
  }
}

Corpus parse_corpus_text(std::string_view text, const CorpusFormat& format) {
  Corpus corpus;
  corpus.name = format.name;
  corpus.boundary_display = format.delimiter;
  int line_no = 0;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    const size_t tab = line.find('\t');
    if (tab == std::string_view::npos) throw ParseError(line_no, "missing tab");
    if (line.find('\t', tab + 1) != std::string_view::npos)
      throw ParseError(line_no, "more than one tab");
    std::u32string surface;
    std::u32string segmentation;
    try {
      surface = utf8_to_u32(line.substr(0, tab));
      segmentation = utf8_to_u32(line.substr(tab + 1));
    } catch (const InvalidArgument& e) {
      throw ParseError(line_no, e.what());
    }
    if (surface.empty()) throw ParseError(line_no, "empty surface field");
    if (segmentation.empty()) throw ParseError(line_no, "empty segmentation field");

    SegmentationExample example;
    example.surface = std::move(surface);
    std::u32string current;
    for (char32_t c : segmentation) {
      if (c == format.delimiter) {
        if (current.empty())
          throw ValidationError(line_no, "delimiter produces an empty morpheme");
        example.morphemes.push_back(std::move(current));
        current.clear();
      } else {
        current.push_back(c);
      }
    }
    if (current.empty())
      throw ValidationError(line_no, "delimiter produces an empty morpheme");
    example.morphemes.push_back(std::move(current));
    try {
      validate_example(example);
    } catch (const ValidationError& e) {
      throw ValidationError(line_no, e.what());
    }
    corpus.examples.push_back(std::move(example));
  }
  return corpus;
}

Corpus parse_corpus(const std::filesystem::path& path, const CorpusFormat& format) {
  return parse_corpus_text(read_file(path), format);
}

CorpusFormat read_corpus_format(const std::filesystem::path& corpus_path) {
  CorpusFormat format;
  format.name = corpus_path.stem().string();
  auto manifest = corpus_path;
  manifest += ".manifest";
  if (!std::filesystem::exists(manifest)) return format;
  std::istringstream in(read_file(manifest));
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = trim(line);
    if (view.empty() || view.front() == '#') continue;
    const size_t eq = view.find('=');
    if (eq == std::string_view::npos)
      throw ParseError(line_no, "manifest line without '='");
    const std::string_view key = trim(view.substr(0, eq));
    const std::string_view value = trim(view.substr(eq + 1));
    if (key == "name") {
      format.name = std::string(value);
    } else if (key == "delimiter") {
      const std::u32string d = utf8_to_u32(value);
      if (d.size() != 1)
        throw ParseError(line_no, "delimiter must be a single character");
      format.delimiter = d[0];
    } else {
      throw ParseError(line_no, "unknown manifest key '" + std::string(key) + "'");
    }
  }
  return format;
}

void write_corpus_format(const std::filesystem::path& corpus_path,
                         const CorpusFormat& format) {
  auto manifest = corpus_path;
  manifest += ".manifest";
  std::ofstream out(manifest, std::ios::binary);
  out << "name = " << format.name << "\n"
      << "delimiter = " << u32_to_utf8(format.delimiter) << "\n";
  if (!out) throw Error("cannot write " + manifest.string());
}

Corpus load_corpus(const std::filesystem::path& path) {
  return parse_corpus(path, read_corpus_format(path));
}

std::string render_segmentation(const Morphemes& morphemes, char32_t delimiter) {
  return u32_to_utf8(join_morphemes(morphemes, delimiter));
}

std::string serialize_corpus(const Corpus& corpus) {
  std::string out;
  for (const auto& ex : corpus.examples) {
    out += u32_to_utf8(ex.surface);
    out += '\t';
    out += render_segmentation(ex.morphemes, corpus.boundary_display);
    out += '\n';
  }
  return out;
}

void write_corpus(const std::filesystem::path& path, const Corpus& corpus) {
  std::ofstream out(path, std::ios::binary);
  out << serialize_corpus(corpus);
  if (!out) throw Error("cannot write " + path.string());
  write_corpus_format(path, {corpus.name, corpus.boundary_display});
}

// ---------------------------------------------------------------------------

Vocabulary::Vocabulary() {
  for (int i = 0; i < kNumReserved; ++i) add(kReservedBase + static_cast<char32_t>(i));
}

Vocabulary::Vocabulary(const std::u32string& chars) : Vocabulary() {
  for (char32_t c : chars) {
    if (is_reserved(c)) throw InvalidArgument("reserved symbol in vocabulary characters");
    if (!contains(c)) add(c);
  }
}

void Vocabulary::add(char32_t c) {
  char_to_index_.emplace(c, static_cast<int>(index_to_char_.size()));
  index_to_char_.push_back(c);
}

int Vocabulary::index(char32_t c) const {
  auto it = char_to_index_.find(c);
  return it == char_to_index_.end() ? kUnknown : it->second;
}

char32_t Vocabulary::symbol(int index) const {
  if (index < 0 || index >= size())
    throw InvalidArgument("symbol index " + std::to_string(index) + " out of vocabulary");
  return index_to_char_[static_cast<size_t>(index)];
}

std::u32string Vocabulary::characters() const {
  return std::u32string(index_to_char_.begin() + kNumReserved, index_to_char_.end());
}

std::vector<int> Vocabulary::encode(std::u32string_view text, int* unknown_count) const {
  std::vector<int> out;
  out.reserve(text.size());
  int unknown = 0;
  for (char32_t c : text) {
    const int idx = index(c);
    if (idx == kUnknown) ++unknown;
    out.push_back(idx);
  }
  if (unknown_count) *unknown_count = unknown;
  return out;
}

Vocabulary build_vocabulary(const std::vector<const Corpus*>& corpora) {
  if (corpora.empty()) throw InvalidArgument("build_vocabulary needs at least one corpus");
  std::u32string chars;
  for (const Corpus* corpus : corpora) {
    for (const auto& ex : corpus->examples) {
      for (char32_t c : ex.surface) chars.push_back(c);
      for (const auto& m : ex.morphemes)
        for (char32_t c : m) chars.push_back(c);
    }
  }
  return Vocabulary(chars);
}

Vocabulary build_vocabulary(const Corpus& corpus) { return build_vocabulary({&corpus}); }

// ---------------------------------------------------------------------------

CanonicalTarget encode_target(const Morphemes& morphemes, const Vocabulary& vocab) {
  CanonicalTarget target;
  target.symbols.push_back(kBegin);
  for (size_t i = 0; i < morphemes.size(); ++i) {
    if (i > 0) target.symbols.push_back(kBoundary);
    int unknown = 0;
    for (int s : vocab.encode(morphemes[i], &unknown)) target.symbols.push_back(s);
    if (unknown > 0) target.has_unknown = true;
  }
  target.symbols.push_back(kEnd);
  return target;
}

CanonicalTarget encode_target(const SegmentationExample& example, const Vocabulary& vocab) {
  return encode_target(example.morphemes, vocab);
}

Morphemes decode_target(const CanonicalTarget& target, const Vocabulary& vocab) {
  const auto& s = target.symbols;
  if (s.size() < 3 || s.front() != kBegin || s.back() != kEnd)
    throw ValidationError(0, "target is not framed by begin/end");
  Morphemes out(1);
  for (size_t i = 1; i + 1 < s.size(); ++i) {
    const int sym = s[i];
    if (sym == kBoundary) {
      if (out.back().empty()) throw ValidationError(0, "misplaced boundary in target");
      out.emplace_back();
    } else if (sym == kPad || sym == kBegin || sym == kEnd) {
      throw ValidationError(0, "framing symbol inside target");
    } else {
      out.back().push_back(vocab.symbol(sym));
    }
  }
  if (out.back().empty()) throw ValidationError(0, "misplaced boundary in target");
  return out;
}

Morphemes split_prediction(std::u32string_view content) {
  Morphemes out(1);
  for (char32_t c : content) {
    if (c == kBoundaryChar) {
      out.emplace_back();
    } else {
      out.back().push_back(c);
    }
  }
  return out;
}

Morphemes split_prediction(const std::vector<int>& content, const Vocabulary& vocab) {
  std::u32string text;
  for (int s : content) {
    text.push_back(s == kUnknown ? U'\uFFFD' : vocab.symbol(s));
  }
  return split_prediction(text);
}

std::u32string join_morphemes(const Morphemes& morphemes, char32_t boundary) {
  std::u32string out;
  for (size_t i = 0; i < morphemes.size(); ++i) {
    if (i > 0) out.push_back(boundary);
    out += morphemes[i];
  }
  return out;
}

std::u32string concat_morphemes(const Morphemes& morphemes) {
  std::u32string out;
  for (const auto& m : morphemes) out += m;
  return out;
}

// ---------------------------------------------------------------------------

std::vector<size_t> subsample_indices(size_t size, size_t n, uint64_t seed) {
  if (n > size) {
    throw InvalidArgument("cannot sample " + std::to_string(n) + " of " +
                          std::to_string(size) + " examples");
  }
  std::vector<size_t> perm(size);
  std::iota(perm.begin(), perm.end(), size_t{0});
  Rng rng(seed);
  // Partial forward Fisher-Yates: prefix of length n is a uniform sample, and
  // the prefix for n is contained in the prefix for any larger n.
  for (size_t i = 0; i < n; ++i) {
    const size_t j = i + rng.uniform_int(size - i);
    std::swap(perm[i], perm[j]);
  }
  perm.resize(n);
  std::sort(perm.begin(), perm.end());
  return perm;
}

Corpus subsample(const Corpus& corpus, size_t n, uint64_t seed) {
  return select(corpus, subsample_indices(corpus.size(), n, seed),
                "sub" + std::to_string(n));
}

Corpus select(const Corpus& corpus, const std::vector<size_t>& indices,
              const std::string& suffix) {
  Corpus out;
  out.name = suffix.empty() ? corpus.name : corpus.name + "." + suffix;
  out.boundary_display = corpus.boundary_display;
  out.examples.reserve(indices.size());
  for (size_t i : indices) {
    if (i >= corpus.size()) throw InvalidArgument("example index out of range");
    out.examples.push_back(corpus.examples[i]);
  }
  return out;
}

CorpusStats corpus_stats(const Corpus& corpus) {
  if (corpus.empty()) throw InvalidArgument("corpus_stats of an empty corpus");
  CorpusStats s;
  s.words = corpus.size();
  size_t many = 0, surface = 0, canonical = 0, noseg = 0, morphs = 0, chars = 0;
  for (const auto& ex : corpus.examples) {
    const bool concat_eq = concat_morphemes(ex.morphemes) == ex.surface;
    if (ex.morphemes.size() > 3) ++many;
    if (!concat_eq) {
      ++canonical;
    } else if (ex.morphemes.size() >= 2) {
      ++surface;
    } else {
      ++noseg;
    }
    morphs += ex.morphemes.size();
    chars += ex.surface.size();
  }
  const double n = static_cast<double>(s.words);
  s.more_than_three_percent = 100.0 * static_cast<double>(many) / n;
  s.surface_percent = 100.0 * static_cast<double>(surface) / n;
  s.canonical_percent = 100.0 * static_cast<double>(canonical) / n;
  s.unsegmented_percent = 100.0 * static_cast<double>(noseg) / n;
  s.morphemes_per_word = static_cast<double>(morphs) / n;
  s.chars_per_word = static_cast<double>(chars) / n;
  return s;
}

nlohmann::json to_json(const CorpusStats& s) {
  return {{"words", s.words},
          {"more_than_three_percent", s.more_than_three_percent},
          {"surface_percent", s.surface_percent},
          {"canonical_percent", s.canonical_percent},
          {"unsegmented_percent", s.unsegmented_percent},
          {"morphemes_per_word", s.morphemes_per_word},
          {"chars_per_word", s.chars_per_word}};
}

std::vector<std::pair<std::u32string, double>> morpheme_frequencies(const Corpus& corpus,
                                                                    size_t k) {
  if (corpus.empty()) throw InvalidArgument("morpheme_frequencies of an empty corpus");
  std::map<std::u32string, size_t> counts;
  size_t total = 0;
  for (const auto& ex : corpus.examples) {
    for (const auto& m : ex.morphemes) {
      ++counts[m];
      ++total;
    }
  }
  std::vector<std::pair<std::u32string, size_t>> ranked(counts.begin(), counts.end());
  // std::map iteration is already lexicographic; stable sort keeps it for ties.
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (ranked.size() > k) ranked.resize(k);
  std::vector<std::pair<std::u32string, double>> out;
  out.reserve(ranked.size());
  for (auto& [m, c] : ranked) {
    out.emplace_back(m, 100.0 * static_cast<double>(c) / static_cast<double>(total));
  }
  return out;
}

// ---------------------------------------------------------------------------

FoldPlanSpec FoldPlanSpec::parse(std::string_view text) {
  if (text == "high") return high_resource();
  if (text == "low") return low_resource();
  auto bad = [&] {
    return InvalidArgument("fold plan must be 'high', 'low' or K:train/dev/test, got '" +
                           std::string(text) + "'");
  };
  const size_t colon = text.find(':');
  if (colon == std::string_view::npos) throw bad();
  std::vector<size_t> nums;
  auto parse_num = [&](std::string_view s) {
    size_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || s.empty()) throw bad();
    return v;
  };
  const size_t k = parse_num(text.substr(0, colon));
  std::string_view rest = text.substr(colon + 1);
  while (true) {
    const size_t slash = rest.find('/');
    nums.push_back(parse_num(rest.substr(0, slash)));
    if (slash == std::string_view::npos) break;
    rest = rest.substr(slash + 1);
  }
  if (nums.size() != 3 || k == 0) throw bad();
  return {static_cast<int>(k), nums[0], nums[1], nums[2]};
}

std::string FoldPlanSpec::to_string() const {
  return std::to_string(fold_count) + ":" + std::to_string(train) + "/" +
         std::to_string(dev) + "/" + std::to_string(test);
}

FoldPlan make_folds(const Corpus& corpus, const FoldPlanSpec& spec, uint64_t seed) {
  const size_t n = corpus.size();
  const size_t k = static_cast<size_t>(spec.fold_count);
  auto incompatible = [&](const std::string& why) {
    return InvalidArgument("fold plan " + spec.to_string() + " incompatible with " +
                           std::to_string(n) + " examples: " + why);
  };
  if (k == 0) throw incompatible("no folds");
  if (spec.train + spec.dev + spec.test != n) throw incompatible("sizes do not sum");
  if (n % k != 0) throw incompatible("size not divisible by fold count");
  const size_t block = n / k;
  if (block == 0 || spec.train % block || spec.dev % block || spec.test % block ||
      spec.train == 0 || spec.dev == 0 || spec.test == 0) {
    throw incompatible("split sizes are not positive multiples of the block size");
  }

  std::vector<size_t> perm(n);
  std::iota(perm.begin(), perm.end(), size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span<size_t>(perm));

  FoldPlan plan;
  plan.spec = spec;
  plan.seed = seed;
  plan.assignments.assign(n, 0);
  for (size_t pos = 0; pos < n; ++pos) plan.assignments[perm[pos]] = static_cast<int>(pos / block);

  const size_t train_blocks = spec.train / block;
  const size_t dev_blocks = spec.dev / block;
  for (size_t f = 0; f < k; ++f) {
    Fold fold;
    for (size_t b = 0; b < k; ++b) {
      const size_t blk = (f + b) % k;
      auto& dst = b < train_blocks ? fold.train
                  : b < train_blocks + dev_blocks ? fold.dev
                                                  : fold.test;
      for (size_t pos = blk * block; pos < (blk + 1) * block; ++pos) dst.push_back(perm[pos]);
    }
    std::sort(fold.train.begin(), fold.train.end());
    std::sort(fold.dev.begin(), fold.dev.end());
    std::sort(fold.test.begin(), fold.test.end());
    plan.folds.push_back(std::move(fold));
  }
  return plan;
}

nlohmann::json FoldPlan::to_json() const {
  nlohmann::json doc;
  doc["fold_count"] = spec.fold_count;
  doc["sizes"] = {{"train", spec.train}, {"dev", spec.dev}, {"test", spec.test}};
  doc["seed"] = seed;
  doc["assignments"] = assignments;
  nlohmann::json folds = nlohmann::json::array();
  for (const auto& f : this->folds) {
    folds.push_back({{"train", f.train}, {"dev", f.dev}, {"test", f.test}});
  }
  doc["folds"] = std::move(folds);
  return doc;
}

FoldPlan FoldPlan::from_json(const nlohmann::json& doc) {
  FoldPlan plan;
  try {
    plan.spec.fold_count = doc.at("fold_count").get<int>();
    plan.spec.train = doc.at("sizes").at("train").get<size_t>();
    plan.spec.dev = doc.at("sizes").at("dev").get<size_t>();
    plan.spec.test = doc.at("sizes").at("test").get<size_t>();
    plan.seed = doc.at("seed").get<uint64_t>();
    plan.assignments = doc.at("assignments").get<std::vector<int>>();
    for (const auto& f : doc.at("folds")) {
      plan.folds.push_back({f.at("train").get<std::vector<size_t>>(),
                            f.at("dev").get<std::vector<size_t>>(),
                            f.at("test").get<std::vector<size_t>>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed fold plan: ") + e.what());
  }
  if (static_cast<int>(plan.folds.size()) != plan.spec.fold_count)
    throw InvalidArgument("fold plan lists the wrong number of folds");
  return plan;
}

}  // namespace canseg
