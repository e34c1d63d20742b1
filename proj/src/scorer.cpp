#include "vcrank/scorer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "vcrank/error.hpp"

namespace vcrank::scoring {

ScoreMode parse_score_mode(std::string_view name) {
  if (name == "cosine" || name == "cosine_clamped") return ScoreMode::cosine_clamped;
  if (name == "simprob") return ScoreMode::simprob;
  if (name == "cnn" || name == "cnn_model") return ScoreMode::cnn_model;
  throw ValidationError("unknown scorer \"" + std::string(name) + "\" (expected cosine, simprob or cnn)");
}

ContextJoin parse_context_join(std::string_view name) {
  if (name == "concatenated") return ContextJoin::concatenated;
  if (name == "per_object") return ContextJoin::per_object;
  throw ValidationError("unknown context join \"" + std::string(name) + "\" (expected concatenated or per_object)");
}

std::string to_string(ScoreMode mode) {
  switch (mode) {
    case ScoreMode::cosine_clamped: return "cosine_clamped";
    case ScoreMode::simprob: return "simprob";
    case ScoreMode::cnn_model: return "cnn_model";
  }
  return "?";
}

std::string to_string(ContextJoin join) {
  return join == ContextJoin::concatenated ? "concatenated" : "per_object";
}

double cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw ValidationError("cosine: dimension mismatch (" + std::to_string(u.size()) + " vs " +
                          std::to_string(v.size()) + ")");
  }
  const double nu = l2_norm(u);
  const double nv = l2_norm(v);
  if (!(nu > 0.0) || !(nv > 0.0)) throw ValidationError("cosine: zero vector");
  return std::clamp(dot(u, v) / (nu * nv), -1.0, 1.0);
}

double simprob(double sim, std::span<const double> confidences) {
  if (confidences.empty()) throw ValidationError("simprob: empty confidence list");
  const double s = std::clamp(sim, 1e-6, 1.0);
  const double p_context = std::accumulate(confidences.begin(), confidences.end(), 0.0) /
                           static_cast<double>(confidences.size());
  return std::pow(s, p_context);
}

std::string join_labels(std::span<const Detection> contexts) {
  std::string out;
  for (const auto& d : contexts) {
    if (!out.empty()) out.push_back(' ');
    out += d.label;
  }
  return out;
}

double context_similarity(std::string_view caption, std::span<const Detection> contexts,
                          const EmbeddingLookup& emb, ContextJoin join) {
  if (contexts.empty()) throw ValidationError("context_similarity: no contexts");
  const Vector cap = emb.vector(caption);
  if (join == ContextJoin::concatenated) return cosine(emb.vector(join_labels(contexts)), cap);
  double best = -1.0;
  for (const auto& d : contexts) best = std::max(best, cosine(emb.vector(d.label), cap));
  return best;
}

}  // namespace vcrank::scoring
