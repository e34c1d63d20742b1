#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "vcrank/textnorm.hpp"
#include "vcrank/vecmath.hpp"

namespace vcrank::metrics {

using text::TokenSeq;

/// Sentence BLEU without smoothing: clipped n-gram precisions for n = 1..max_n,
/// geometric mean, brevity penalty against the closest reference length
/// (shorter wins ties). Zero as soon as one precision is zero.
double bleu(const TokenSeq& candidate, std::span<const TokenSeq> references, std::size_t max_n = 4);

/// BLEU-4 of a candidate against all human references (lower = more diverse).
double mbleu(const TokenSeq& candidate, std::span<const TokenSeq> references);

/// Unique unigrams / word count.
double div1(const TokenSeq& caption);
/// Unique bigrams / word count (denominator is words, not bigrams).
double div2(const TokenSeq& caption);

struct CorpusDiversity {
  double mean_uniq_per_caption = 0.0;
  std::size_t vocab_size = 0;
  double mean_div1 = 0.0;
  double mean_div2 = 0.0;
};

CorpusDiversity corpus_diversity(std::span<const TokenSeq> captions);

/// LCS F-measure (R + beta_sq * P in the denominator); max over references.
double rouge_l(const TokenSeq& candidate, std::span<const TokenSeq> references, double beta_sq = 1.2);

struct CiderItem {
  TokenSeq candidate;
  std::vector<TokenSeq> references;
};

struct CiderResult {
  std::vector<double> per_candidate;
  double mean = 0.0;
};

/// CIDEr-D with n = 1..4, idf from the supplied references, clipped tf-idf
/// products, gaussian length penalty and the x10 scale. Needs >= 2 items.
CiderResult cider_d(std::span<const CiderItem> corpus, double sigma = 6.0);

/// Mean cosine between a caption embedding and its reference embeddings.
double avg_ref_similarity(std::span<const double> candidate, std::span<const Vector> references);

struct EvalItem {
  TokenSeq candidate;
  std::vector<TokenSeq> references;
  /// Optional; when every item carries embeddings, "SB" is reported.
  Vector candidate_embedding;
  std::vector<Vector> reference_embeddings;
};

/// Corpus summary (metric name -> value): BLEU-1..4, ROUGE-L, CIDEr-D, mB,
/// D1, D2, Uniq, V and optionally SB. Sentence metrics run on `jobs` OpenMP
/// threads and are reduced in item order.
std::map<std::string, double> evaluate(std::span<const EvalItem> items, int jobs = 1);

}  // namespace vcrank::metrics
