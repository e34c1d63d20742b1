#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vcrank/corpus.hpp"
#include "vcrank/textnorm.hpp"

namespace vcrank::bias {

/// What one co-occurrence "pair" is counted over.
enum class CountUnit { caption, image };

CountUnit parse_count_unit(std::string_view name);

struct GenderCounts {
  std::string object;
  std::uint64_t with_person = 0;
  std::uint64_t with_man = 0;
  std::uint64_t with_woman = 0;
};

/// A unit contributes to a column when it mentions the object (token-level,
/// contiguous) and any word of that column's lexicon set. Columns are not
/// exclusive. Scans run on `jobs` OpenMP threads.
GenderCounts cooccurrence(std::span<const ImageRecord> corpus, std::string_view object_label,
                          const text::GenderLexicon& lexicon, CountUnit unit = CountUnit::caption, int jobs = 1);

/// man / (man + woman); empty when both are zero.
std::optional<double> bias_towards_men(const GenderCounts& c);

enum class Which { man, woman };
/// man or woman count / person count; empty when the person count is zero.
std::optional<double> ratio_to_person(const GenderCounts& c, Which which);

/// Exact num/den truncated (not rounded) to the precision used in published
/// bias tables: two decimals below 1, one decimal from 1 upward. Computed in
/// integer arithmetic, e.g. 240/50 -> "4.8", 1490/3950 -> ".37".
std::string format_ratio(std::uint64_t num, std::uint64_t den);

struct BiasRow {
  GenderCounts counts;
  std::optional<double> man_ratio;
  std::optional<double> woman_ratio;
  std::optional<double> to_men;
};

std::vector<BiasRow> bias_report(std::span<const ImageRecord> corpus, std::span<const std::string> objects,
                                 const text::GenderLexicon& lexicon, CountUnit unit = CountUnit::caption,
                                 int jobs = 1);

/// Display cells for a row: {m, w, to-m}, "-" where undefined.
std::vector<std::string> display_cells(const BiasRow& row);

}  // namespace vcrank::bias
