#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vcrank/corpus.hpp"
#include "vcrank/scorer.hpp"

namespace vcrank::dataset {

struct BuilderConfig {
  double confidence_threshold = 0.2;
  std::size_t top_k_contexts = 3;
  double dedup_threshold = 0.9;
  std::vector<double> label_thresholds = {0.2, 0.3, 0.4};
  scoring::ContextJoin context_join = scoring::ContextJoin::concatenated;

  /// Throws ValidationError on out-of-range values.
  void validate() const;
};

/// Drops detections below the confidence threshold and keeps at most
/// `top_k_contexts` per source. Result is ordered by confidence desc, label asc.
std::vector<Detection> filter_detections(std::span<const Detection> detections, const BuilderConfig& cfg);

/// Greedy semantic dedup in confidence-descending order: a detection is
/// dropped when its label equals, or is at least `dedup_threshold` cosine-close
/// to, an already kept label.
std::vector<Detection> dedup_contexts(std::span<const Detection> detections, const EmbeddingLookup& emb,
                                      const BuilderConfig& cfg);

/// filter_detections followed by dedup_contexts.
std::vector<Detection> retained_contexts(const ImageRecord& image, const EmbeddingLookup& emb,
                                         const BuilderConfig& cfg);

double relatedness_score(std::string_view context_text, std::string_view caption, const EmbeddingLookup& emb);

/// 1 iff score >= threshold.
inline int assign_label(double score, double threshold) { return score >= threshold ? 1 : 0; }

struct BuildResult {
  std::vector<RelatednessRecord> records;
  /// Images that kept no context after filtering and dedup.
  std::vector<std::string> skipped;
};

/// One record per (caption, context, threshold), in corpus, caption, context
/// and ascending-threshold order. Images are processed on `jobs` OpenMP
/// threads (<= 0: all cores); the output does not depend on `jobs`.
BuildResult build_relatedness_dataset(std::span<const ImageRecord> corpus, const EmbeddingLookup& emb,
                                      const BuilderConfig& cfg, int jobs = 1);

/// Captions that literally mention a retained context label (token-level,
/// contiguous). The context field holds the matching labels; label is 1,
/// threshold 0 and cosine the sentinel 1.0 (no embeddings involved).
std::vector<RelatednessRecord> build_overlap_dataset(std::span<const ImageRecord> corpus, const BuilderConfig& cfg);

/// Token counts over record contexts, count desc then token asc.
std::vector<std::pair<std::string, std::size_t>> context_frequency(std::span<const RelatednessRecord> records);

}  // namespace vcrank::dataset
