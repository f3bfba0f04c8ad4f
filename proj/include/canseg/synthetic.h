#ifndef CANSEG_SYNTHETIC_H_
#define CANSEG_SYNTHETIC_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "canseg/data.h"
#include "nlohmann/json.hpp"

namespace canseg {

// A toy suffixing language with one orthographic rule: a stem-final
// `deleted_vowel` is dropped before a vowel-initial suffix
// (collide + ion -> collidion). Stems are CV syllables and always end in a
// vowel, so the rule is invertible and every surface has one gold analysis.
struct SyntheticLanguageSpec {
  std::string name = "synthetic";
  std::u32string consonants = U"ptkbdgmnslrvz";
  std::u32string vowels = U"aeiou";
  int min_syllables = 2;
  int max_syllables = 3;
  std::vector<std::u32string> suffixes = {U"ion", U"ed", U"ing", U"al",   U"er",
                                          U"s",   U"ly", U"ment", U"ness", U"ful"};
  char32_t deleted_vowel = U'e';
  // Probability that a stem ends in deleted_vowel; other final vowels are
  // uniform over the rest.
  double final_vowel_probability = 0.5;
  // Exactly round(fraction * n) generated words are bare stems.
  double unsegmented_fraction = 0.2;
  char32_t display_delimiter = U'+';

  // Throws InvalidArgument for an unusable spec.
  void validate() const;

  nlohmann::json to_json() const;
  static SyntheticLanguageSpec from_json(const nlohmann::json& doc);
  static SyntheticLanguageSpec load(const std::filesystem::path& path);
};

// Applies the orthographic rule to a morpheme sequence.
std::u32string realize_surface(const SyntheticLanguageSpec& spec, const Morphemes& morphemes);

// n distinct words, deterministic in (spec, n, seed). Throws Error if two
// different analyses realize the same surface, or if the language is too
// small to yield n distinct words.
Corpus generate_synthetic(const SyntheticLanguageSpec& spec, size_t n, uint64_t seed);

}  // namespace canseg

#endif  // CANSEG_SYNTHETIC_H_
