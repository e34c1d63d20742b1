#include "vcrank/reranker.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "vcrank/error.hpp"
#include "vcrank/parallel.hpp"

namespace vcrank::rerank {

std::string neutralize_gender(std::string_view text, const text::GenderLexicon& lexicon) {
  auto tokens = text::tokenize(text);
  for (auto& t : tokens) {
    const auto g = lexicon.classify(t);
    if (g == text::Gender::man || g == text::Gender::woman) t = lexicon.is_plural(t) ? "people" : "person";
  }
  return text::join(tokens);
}

std::vector<Ranked> rerank(const CandidateSet& set, std::span<const Detection> contexts, const ScoreFn& score_fn,
                           const text::GenderLexicon* lexicon) {
  if (set.candidates.empty()) throw ValidationError("cannot rerank an empty candidate set");
  std::vector<Detection> neutral_contexts;
  if (lexicon) {
    neutral_contexts.assign(contexts.begin(), contexts.end());
    for (auto& d : neutral_contexts) d.label = neutralize_gender(d.label, *lexicon);
    contexts = neutral_contexts;
  }
  std::vector<Ranked> out;
  out.reserve(set.candidates.size());
  for (const auto& c : set.candidates) {
    scoring::RelatednessScore s;
    try {
      s = lexicon ? score_fn(neutralize_gender(c.text, *lexicon), contexts) : score_fn(c.text, contexts);
    } catch (const Error& e) {
      throw ValidationError("image \"" + set.image_id + "\", candidate " + std::to_string(c.original_rank) +
                            " (\"" + c.text + "\"): " + e.what());
    }
    if (!std::isfinite(s.value)) {
      throw ValidationError("image \"" + set.image_id + "\", candidate " + std::to_string(c.original_rank) +
                            ": non-finite score");
    }
    out.push_back({c, s});
  }
  std::sort(out.begin(), out.end(), [](const Ranked& a, const Ranked& b) {
    if (a.score.value != b.score.value) return a.score.value > b.score.value;
    if (a.candidate.baseline_score != b.candidate.baseline_score) {
      return a.candidate.baseline_score > b.candidate.baseline_score;
    }
    return a.candidate.original_rank < b.candidate.original_rank;
  });
  return out;
}

CandidateCaption select_best(const CandidateSet& set, std::span<const Detection> contexts, const ScoreFn& score_fn,
                             const text::GenderLexicon* lexicon) {
  return rerank(set, contexts, score_fn, lexicon).front().candidate;
}

ScoreFn cosine_scorer(const EmbeddingLookup& emb, scoring::ContextJoin join) {
  return [&emb, join](std::string_view caption, std::span<const Detection> contexts) {
    const double c = scoring::context_similarity(caption, contexts, emb, join);
    return scoring::RelatednessScore{std::clamp(c, 0.0, 1.0), scoring::ScoreMode::cosine_clamped};
  };
}

ScoreFn simprob_scorer(const EmbeddingLookup& emb, scoring::ContextJoin join) {
  return [&emb, join](std::string_view caption, std::span<const Detection> contexts) {
    const double sim = scoring::context_similarity(caption, contexts, emb, join);
    std::vector<double> conf;
    conf.reserve(contexts.size());
    for (const auto& d : contexts) conf.push_back(d.confidence);
    return scoring::RelatednessScore{scoring::simprob(sim, conf), scoring::ScoreMode::simprob};
  };
}

ScoreFn cnn_scorer(const EmbeddingLookup& emb, const cnn::CnnParams& params) {
  if (params.dim != emb.dim()) {
    throw ValidationError("model dimension " + std::to_string(params.dim) + " does not match embedding dimension " +
                          std::to_string(emb.dim()));
  }
  return [&emb, &params](std::string_view caption, std::span<const Detection> contexts) {
    const auto input = cnn::encode_pair(scoring::join_labels(contexts), caption, emb);
    return scoring::RelatednessScore{cnn::forward(params, input).probability, scoring::ScoreMode::cnn_model};
  };
}

std::vector<RankedSet> rerank_all(std::span<const CandidateSet> sets,
                                  const std::function<std::vector<Detection>(const CandidateSet&)>& contexts_for,
                                  const ScoreFn& score_fn, const text::GenderLexicon* lexicon, int jobs) {
  std::vector<RankedSet> out(sets.size());
  ErrorSlots errors(sets.size());
  const auto n = static_cast<std::ptrdiff_t>(sets.size());
#pragma omp parallel for num_threads(resolve_jobs(jobs)) schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto u = static_cast<std::size_t>(i);
    try {
      const auto contexts = contexts_for(sets[u]);
      out[u] = {sets[u].image_id, rerank(sets[u], contexts, score_fn, lexicon)};
    } catch (...) {
      errors.capture(u);
    }
  }
  errors.rethrow_first();
  return out;
}

void write_reranked(std::ostream& out, std::span<const RankedSet> sets) {
  using nlohmann::json;
  for (const auto& s : sets) {
    json ranking = json::array();
    for (const auto& r : s.ranking) ranking.push_back({{"text", r.candidate.text}, {"score", r.score.value}});
    out << json{{"image_id", s.image_id}, {"ranking", std::move(ranking)}}.dump() << '\n';
  }
  if (!out) throw IoError("write failure");
}

std::vector<std::pair<std::string, std::vector<std::string>>> read_reranked(std::istream& in) {
  using nlohmann::json;
  std::vector<std::pair<std::string, std::vector<std::string>>> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      std::vector<std::string> texts;
      for (const auto& r : j.at("ranking")) texts.push_back(r.at("text").get<std::string>());
      if (texts.empty()) throw ValidationError("empty ranking");
      out.emplace_back(j.at("image_id").get<std::string>(), std::move(texts));
    } catch (const json::exception& e) {
      throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace vcrank::rerank
