#include "canseg/synthetic.h"

#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "canseg/errors.h"
#include "canseg/rng.h"
#include "canseg/unicode.h"

namespace canseg {

namespace {

bool contains(const std::u32string& set, char32_t c) {
  return set.find(c) != std::u32string::npos;
}

std::u32string from_json_string(const nlohmann::json& v) {
  return utf8_to_u32(v.get<std::string>());
}

char32_t single_char(const nlohmann::json& v, const char* key) {
  const auto s = from_json_string(v);
  if (s.size() != 1) throw InvalidArgument(std::string(key) + " must be a single character");
  return s[0];
}

}  // namespace

void SyntheticLanguageSpec::validate() const {
  if (consonants.empty() || vowels.empty()) throw InvalidArgument("empty consonant or vowel set");
  for (char32_t c : consonants)
    if (contains(vowels, c)) throw InvalidArgument("consonants and vowels overlap");
  if (!contains(vowels, deleted_vowel)) throw InvalidArgument("deleted_vowel must be a vowel");
  if (min_syllables < 1 || max_syllables < min_syllables)
    throw InvalidArgument("bad syllable range");
  if (suffixes.empty()) throw InvalidArgument("no suffixes");
  std::set<std::u32string> seen;
  for (const auto& s : suffixes) {
    if (s.empty()) throw InvalidArgument("empty suffix");
    if (!seen.insert(s).second) throw InvalidArgument("duplicate suffix");
    if (contains(s, display_delimiter)) throw InvalidArgument("suffix contains the delimiter");
  }
  if (final_vowel_probability < 0 || final_vowel_probability > 1)
    throw InvalidArgument("final_vowel_probability must lie in [0, 1]");
  if (vowels.size() == 1 && final_vowel_probability < 1)
    throw InvalidArgument("final_vowel_probability < 1 needs a second vowel");
  if (unsegmented_fraction < 0 || unsegmented_fraction > 1)
    throw InvalidArgument("unsegmented_fraction must lie in [0, 1]");
  if (contains(consonants, display_delimiter) || contains(vowels, display_delimiter))
    throw InvalidArgument("delimiter is part of the alphabet");
}

nlohmann::json SyntheticLanguageSpec::to_json() const {
  std::vector<std::string> sfx;
  for (const auto& s : suffixes) sfx.push_back(u32_to_utf8(s));
  return {{"name", name},
          {"consonants", u32_to_utf8(consonants)},
          {"vowels", u32_to_utf8(vowels)},
          {"min_syllables", min_syllables},
          {"max_syllables", max_syllables},
          {"suffixes", sfx},
          {"deleted_vowel", u32_to_utf8(std::u32string(1, deleted_vowel))},
          {"final_vowel_probability", final_vowel_probability},
          {"unsegmented_fraction", unsegmented_fraction},
          {"display_delimiter", u32_to_utf8(std::u32string(1, display_delimiter))}};
}

SyntheticLanguageSpec SyntheticLanguageSpec::from_json(const nlohmann::json& doc) {
  SyntheticLanguageSpec s;
  try {
    for (const auto& [key, v] : doc.items()) {
      if (key == "name") {
        s.name = v.get<std::string>();
      } else if (key == "consonants") {
        s.consonants = from_json_string(v);
      } else if (key == "vowels") {
        s.vowels = from_json_string(v);
      } else if (key == "min_syllables") {
        s.min_syllables = v.get<int>();
      } else if (key == "max_syllables") {
        s.max_syllables = v.get<int>();
      } else if (key == "suffixes") {
        s.suffixes.clear();
        for (const auto& x : v) s.suffixes.push_back(from_json_string(x));
      } else if (key == "deleted_vowel") {
        s.deleted_vowel = single_char(v, "deleted_vowel");
      } else if (key == "final_vowel_probability") {
        s.final_vowel_probability = v.get<double>();
      } else if (key == "unsegmented_fraction") {
        s.unsegmented_fraction = v.get<double>();
      } else if (key == "display_delimiter") {
        s.display_delimiter = single_char(v, "display_delimiter");
      } else {
        throw InvalidArgument("unknown synthetic spec key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("bad synthetic spec: ") + e.what());
  }
  s.validate();
  return s;
}

SyntheticLanguageSpec SyntheticLanguageSpec::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidArgument(path.string() + ": " + e.what());
  }
}

std::u32string realize_surface(const SyntheticLanguageSpec& spec, const Morphemes& morphemes) {
  std::u32string out;
  for (const auto& m : morphemes) {
    if (!out.empty() && !m.empty() && out.back() == spec.deleted_vowel &&
        contains(spec.vowels, m.front()))
      out.pop_back();
    out += m;
  }
  return out;
}

Corpus generate_synthetic(const SyntheticLanguageSpec& spec, size_t n, uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  const size_t bare = static_cast<size_t>(std::llround(spec.unsegmented_fraction * static_cast<double>(n)));
  std::vector<char> is_bare(n, 0);
  for (size_t i = 0; i < bare; ++i) is_bare[i] = 1;
  rng.shuffle(std::span<char>(is_bare));

  std::u32string other_vowels;
  for (char32_t v : spec.vowels)
    if (v != spec.deleted_vowel) other_vowels.push_back(v);

  auto draw = [&](const std::u32string& set) { return set[rng.uniform_int(set.size())]; };
  auto make_stem = [&] {
    const int syllables = rng.uniform_range(spec.min_syllables, spec.max_syllables);
    std::u32string stem;
    for (int s = 0; s < syllables; ++s) {
      stem.push_back(draw(spec.consonants));
      if (s + 1 < syllables) {
        stem.push_back(draw(spec.vowels));
      } else if (other_vowels.empty() || rng.bernoulli(spec.final_vowel_probability)) {
        stem.push_back(spec.deleted_vowel);
      } else {
        stem.push_back(draw(other_vowels));
      }
    }
    return stem;
  };

  Corpus corpus;
  corpus.name = spec.name;
  corpus.boundary_display = spec.display_delimiter;
  std::map<std::u32string, Morphemes> analyses;
  constexpr int kMaxAttempts = 1000;
  for (size_t i = 0; i < n; ++i) {
    for (int attempt = 0;; ++attempt) {
      if (attempt == kMaxAttempts)
        throw Error("synthetic language too small for " + std::to_string(n) + " distinct words");
      Morphemes m{make_stem()};
      if (!is_bare[i]) m.push_back(spec.suffixes[rng.uniform_int(spec.suffixes.size())]);
      const std::u32string surface = realize_surface(spec, m);
      auto [it, fresh] = analyses.emplace(surface, m);
      if (!fresh) {
        if (it->second != m)
          throw Error("inconsistent synthetic spec: '" + u32_to_utf8(surface) +
                      "' realizes two different segmentations");
        continue;
      }
      corpus.examples.push_back({surface, m});
      break;
    }
  }
  return corpus;
}

}  // namespace canseg
