#include "vcrank/bias.hpp"

#include "vcrank/error.hpp"
#include "vcrank/parallel.hpp"

namespace vcrank::bias {

namespace {

struct Mentions {
  bool object = false, person = false, man = false, woman = false;

  void merge(const Mentions& o) {
    object |= o.object;
    person |= o.person;
    man |= o.man;
    woman |= o.woman;
  }
};

Mentions scan(const text::TokenSeq& tokens, const text::TokenSeq& object, const text::GenderLexicon& lexicon) {
  Mentions m;
  m.object = text::contains_run(tokens, object);
  for (const auto& t : tokens) {
    const auto g = lexicon.classify(t);
    if (!g) continue;
    m.man = m.man || *g == text::Gender::man;
    m.woman = m.woman || *g == text::Gender::woman;
    m.person = m.person || *g == text::Gender::person;
  }
  return m;
}

}  // namespace

CountUnit parse_count_unit(std::string_view name) {
  if (name == "caption") return CountUnit::caption;
  if (name == "image") return CountUnit::image;
  throw ValidationError("unknown count unit \"" + std::string(name) + "\" (expected caption or image)");
}

GenderCounts cooccurrence(std::span<const ImageRecord> corpus, std::string_view object_label,
                          const text::GenderLexicon& lexicon, CountUnit unit, int jobs) {
  GenderCounts out;
  out.object = std::string(object_label);
  const auto object = text::tokenize(object_label);
  if (object.empty()) return out;

  std::uint64_t person = 0, man = 0, woman = 0;
  const auto n = static_cast<std::ptrdiff_t>(corpus.size());
#pragma omp parallel for num_threads(resolve_jobs(jobs)) reduction(+ : person, man, woman) schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto& image = corpus[static_cast<std::size_t>(i)];
    auto tally = [&](const Mentions& m) {
      if (!m.object) return;
      person += m.person ? 1 : 0;
      man += m.man ? 1 : 0;
      woman += m.woman ? 1 : 0;
    };
    if (unit == CountUnit::caption) {
      for (const auto& cap : image.human_captions) tally(scan(text::tokenize(cap), object, lexicon));
    } else {
      Mentions any;
      for (const auto& cap : image.human_captions) any.merge(scan(text::tokenize(cap), object, lexicon));
      tally(any);
    }
  }
  out.with_person = person;
  out.with_man = man;
  out.with_woman = woman;
  return out;
}

std::optional<double> bias_towards_men(const GenderCounts& c) {
  const auto den = c.with_man + c.with_woman;
  if (den == 0) return std::nullopt;
  return static_cast<double>(c.with_man) / static_cast<double>(den);
}

std::optional<double> ratio_to_person(const GenderCounts& c, Which which) {
  if (c.with_person == 0) return std::nullopt;
  const auto num = which == Which::man ? c.with_man : c.with_woman;
  return static_cast<double>(num) / static_cast<double>(c.with_person);
}

std::string format_ratio(std::uint64_t num, std::uint64_t den) {
  if (den == 0) return "-";
  if (num >= den) {
    const std::uint64_t tenths = (num * 10) / den;
    return std::to_string(tenths / 10) + "." + std::to_string(tenths % 10);
  }
  const std::uint64_t hundredths = (num * 100) / den;
  return "." + std::string(hundredths < 10 ? "0" : "") + std::to_string(hundredths);
}

std::vector<BiasRow> bias_report(std::span<const ImageRecord> corpus, std::span<const std::string> objects,
                                 const text::GenderLexicon& lexicon, CountUnit unit, int jobs) {
  std::vector<BiasRow> rows;
  for (const auto& obj : objects) {
    BiasRow r;
    r.counts = cooccurrence(corpus, obj, lexicon, unit, jobs);
    r.man_ratio = ratio_to_person(r.counts, Which::man);
    r.woman_ratio = ratio_to_person(r.counts, Which::woman);
    r.to_men = bias_towards_men(r.counts);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<std::string> display_cells(const BiasRow& row) {
  const auto& c = row.counts;
  return {format_ratio(c.with_man, c.with_person), format_ratio(c.with_woman, c.with_person),
          format_ratio(c.with_man, c.with_man + c.with_woman)};
}

}  // namespace vcrank::bias
