#pragma once

#include <span>
#include <string>
#include <string_view>

#include "vcrank/corpus.hpp"

namespace vcrank::scoring {

enum class ScoreMode { cosine_clamped, simprob, cnn_model };
enum class ContextJoin { concatenated, per_object };

ScoreMode parse_score_mode(std::string_view name);
ContextJoin parse_context_join(std::string_view name);
std::string to_string(ScoreMode mode);
std::string to_string(ContextJoin join);

/// A relatedness value in [0,1] tagged with the scorer that produced it.
struct RelatednessScore {
  double value = 0.0;
  ScoreMode mode = ScoreMode::cosine_clamped;
};

/// <u,v> / (|u||v|), clamped to [-1,1]. Throws ValidationError on a dimension
/// mismatch or a zero vector.
double cosine(std::span<const double> u, std::span<const double> v);

/// Similarity-to-probability: clamp(sim, 1e-6, 1) raised to the arithmetic
/// mean of the classifier confidences. Throws on an empty confidence list.
double simprob(double sim, std::span<const double> confidences);

/// Labels joined by single spaces, in the given order.
std::string join_labels(std::span<const Detection> contexts);

/// Caption-to-context cosine. `concatenated` embeds the joined label text;
/// `per_object` takes the best single-label cosine. Throws MissingEmbedding or
/// ValidationError when `contexts` is empty.
double context_similarity(std::string_view caption, std::span<const Detection> contexts,
                          const EmbeddingLookup& emb, ContextJoin join);

}  // namespace vcrank::scoring
