#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace vcrank::text {

/// Lowercased word tokens. Never holds an empty token.
using TokenSeq = std::vector<std::string>;
using Ngram = std::vector<std::string>;

/// Lowercases, replaces punctuation with whitespace (hyphens and apostrophes
/// survive only between two word characters) and splits on whitespace.
/// Input is UTF-8; malformed bytes become U+FFFD.
TokenSeq tokenize(std::string_view text);

std::string join(const TokenSeq& tokens, std::string_view sep = " ");

/// Multiset of n-grams that iterates in order of first occurrence.
class NgramCounts {
 public:
  void add(Ngram gram, std::size_t times = 1);

  std::size_t count(const Ngram& gram) const;
  std::size_t unique() const { return items_.size(); }
  std::size_t total() const { return total_; }
  const std::vector<std::pair<Ngram, std::size_t>>& items() const { return items_; }

 private:
  std::vector<std::pair<Ngram, std::size_t>> items_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t total_ = 0;
};

/// All contiguous n-grams of `seq`; throws ValidationError when n == 0.
NgramCounts ngrams(const TokenSeq& seq, std::size_t n);

/// True when `needle` occurs as a contiguous run inside `haystack`.
bool contains_run(const TokenSeq& haystack, const TokenSeq& needle);

enum class Gender { man, woman, person };

/// Three disjoint gendered-word sets plus the subset of words that are plural
/// (used to pick "person" vs "people" when neutralizing).
class GenderLexicon {
 public:
  /// Throws ValidationError if a set is empty or two sets overlap.
  GenderLexicon(std::set<std::string> man, std::set<std::string> woman, std::set<std::string> person,
                std::set<std::string> plural);

  /// Parses {"man": [...], "woman": [...], "person": [...], "plural": [...]}.
  /// A missing "plural" falls back to the default plural list.
  static GenderLexicon from_json(std::string_view json_text);
  static GenderLexicon load(const std::string& path);

  std::optional<Gender> classify(std::string_view token) const;
  bool is_plural(std::string_view token) const;

  const std::set<std::string, std::less<>>& man_terms() const { return man_; }
  const std::set<std::string, std::less<>>& woman_terms() const { return woman_; }
  const std::set<std::string, std::less<>>& person_terms() const { return person_; }

 private:
  std::set<std::string, std::less<>> man_, woman_, person_, plural_;
};

GenderLexicon default_gender_lexicon();

}  // namespace vcrank::text
