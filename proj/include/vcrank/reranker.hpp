#pragma once

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vcrank/corpus.hpp"
#include "vcrank/relatedness_model.hpp"
#include "vcrank/scorer.hpp"
#include "vcrank/textnorm.hpp"

namespace vcrank::rerank {

/// Scores one caption against an image's retained contexts.
using ScoreFn = std::function<scoring::RelatednessScore(std::string_view caption, std::span<const Detection> contexts)>;

struct Ranked {
  CandidateCaption candidate;
  scoring::RelatednessScore score;
};

/// Sorts candidates by score desc, then baseline score desc, then original
/// rank asc. With `lexicon` set, scoring sees gender-neutral copies of the
/// caption and context labels; the returned captions are the originals.
/// Scoring errors are rethrown naming the candidate.
std::vector<Ranked> rerank(const CandidateSet& set, std::span<const Detection> contexts, const ScoreFn& score_fn,
                           const text::GenderLexicon* lexicon = nullptr);

/// Head of rerank(); throws ValidationError on an empty set.
CandidateCaption select_best(const CandidateSet& set, std::span<const Detection> contexts, const ScoreFn& score_fn,
                             const text::GenderLexicon* lexicon = nullptr);

/// Token-level swap of gendered words for "person"/"people"; output tokens
/// are joined by single spaces.
std::string neutralize_gender(std::string_view text, const text::GenderLexicon& lexicon);

/// clamp(cosine, 0, 1) under the configured context join.
ScoreFn cosine_scorer(const EmbeddingLookup& emb, scoring::ContextJoin join);
/// SimProb over the context cosine and the retained detections' confidences.
ScoreFn simprob_scorer(const EmbeddingLookup& emb, scoring::ContextJoin join);
/// Trained relatedness head applied to (joined context, caption).
ScoreFn cnn_scorer(const EmbeddingLookup& emb, const cnn::CnnParams& params);

struct RankedSet {
  std::string image_id;
  std::vector<Ranked> ranking;
};

/// rerank() over many sets on `jobs` OpenMP threads. `contexts_for` maps each
/// set to its contexts and is called concurrently.
std::vector<RankedSet> rerank_all(std::span<const CandidateSet> sets,
                                  const std::function<std::vector<Detection>(const CandidateSet&)>& contexts_for,
                                  const ScoreFn& score_fn, const text::GenderLexicon* lexicon, int jobs = 1);

void write_reranked(std::ostream& out, std::span<const RankedSet> sets);
/// Reads reranked.jsonl back as (image_id, ranked captions) pairs.
std::vector<std::pair<std::string, std::vector<std::string>>> read_reranked(std::istream& in);

}  // namespace vcrank::rerank
