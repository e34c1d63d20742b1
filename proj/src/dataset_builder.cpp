#include "vcrank/dataset_builder.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include "vcrank/error.hpp"
#include "vcrank/parallel.hpp"
#include "vcrank/textnorm.hpp"

namespace vcrank::dataset {

namespace {

bool by_confidence(const Detection& a, const Detection& b) {
  if (a.confidence != b.confidence) return a.confidence > b.confidence;
  if (a.label != b.label) return a.label < b.label;
  return a.source.name() < b.source.name();
}

std::vector<double> sorted_thresholds(const BuilderConfig& cfg) {
  std::vector<double> th = cfg.label_thresholds;
  std::sort(th.begin(), th.end());
  th.erase(std::unique(th.begin(), th.end()), th.end());
  return th;
}

}  // namespace

void BuilderConfig::validate() const {
  auto in_unit = [](double x) { return std::isfinite(x) && x >= 0.0 && x <= 1.0; };
  if (!in_unit(confidence_threshold)) throw ValidationError("confidence_threshold must be in [0,1]");
  if (top_k_contexts < 1) throw ValidationError("top_k_contexts must be at least 1");
  if (!(dedup_threshold > 0.0 && dedup_threshold <= 1.0)) throw ValidationError("dedup_threshold must be in (0,1]");
  if (label_thresholds.empty()) throw ValidationError("at least one label threshold is required");
  for (double t : label_thresholds) {
    if (!in_unit(t)) throw ValidationError("label thresholds must be in [0,1]");
  }
}

std::vector<Detection> filter_detections(std::span<const Detection> detections, const BuilderConfig& cfg) {
  std::map<std::string, std::vector<Detection>> per_source;
  for (const auto& d : detections) {
    if (d.confidence >= cfg.confidence_threshold) per_source[d.source.name()].push_back(d);
  }
  std::vector<Detection> kept;
  for (auto& [source, group] : per_source) {
    std::sort(group.begin(), group.end(), by_confidence);
    const std::size_t n = std::min(group.size(), cfg.top_k_contexts);
    kept.insert(kept.end(), group.begin(), group.begin() + static_cast<std::ptrdiff_t>(n));
  }
  std::sort(kept.begin(), kept.end(), by_confidence);
  return kept;
}

std::vector<Detection> dedup_contexts(std::span<const Detection> detections, const EmbeddingLookup& emb,
                                      const BuilderConfig& cfg) {
  std::vector<Detection> ordered(detections.begin(), detections.end());
  std::sort(ordered.begin(), ordered.end(), by_confidence);
  std::vector<Detection> kept;
  std::vector<Vector> kept_vecs;
  for (auto& d : ordered) {
    const bool exact_dup =
        std::any_of(kept.begin(), kept.end(), [&](const Detection& k) { return k.label == d.label; });
    if (exact_dup) continue;
    Vector v = emb.vector(d.label);
    const bool near_dup = std::any_of(kept_vecs.begin(), kept_vecs.end(), [&](const Vector& k) {
      return scoring::cosine(k, v) >= cfg.dedup_threshold;
    });
    if (near_dup) continue;
    kept.push_back(std::move(d));
    kept_vecs.push_back(std::move(v));
  }
  return kept;
}

std::vector<Detection> retained_contexts(const ImageRecord& image, const EmbeddingLookup& emb,
                                         const BuilderConfig& cfg) {
  return dedup_contexts(filter_detections(image.detections, cfg), emb, cfg);
}

double relatedness_score(std::string_view context_text, std::string_view caption, const EmbeddingLookup& emb) {
  return scoring::cosine(emb.vector(context_text), emb.vector(caption));
}

BuildResult build_relatedness_dataset(std::span<const ImageRecord> corpus, const EmbeddingLookup& emb,
                                      const BuilderConfig& cfg, int jobs) {
  cfg.validate();
  const auto thresholds = sorted_thresholds(cfg);
  const auto n = static_cast<std::ptrdiff_t>(corpus.size());
  std::vector<std::vector<RelatednessRecord>> per_image(corpus.size());
  std::vector<char> skipped(corpus.size(), 0);
  ErrorSlots errors(corpus.size());

#pragma omp parallel for num_threads(resolve_jobs(jobs)) schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      const auto& image = corpus[static_cast<std::size_t>(i)];
      const auto contexts = retained_contexts(image, emb, cfg);
      if (contexts.empty()) {
        skipped[static_cast<std::size_t>(i)] = 1;
        continue;
      }
      std::vector<std::string> context_texts;
      if (cfg.context_join == scoring::ContextJoin::concatenated) {
        context_texts.push_back(scoring::join_labels(contexts));
      } else {
        for (const auto& d : contexts) context_texts.push_back(d.label);
      }
      auto& out = per_image[static_cast<std::size_t>(i)];
      for (const auto& caption : image.human_captions) {
        for (const auto& ctx : context_texts) {
          const double cos = relatedness_score(ctx, caption, emb);
          for (double th : thresholds) out.push_back({caption, ctx, cos, assign_label(cos, th), th});
        }
      }
    } catch (...) {
      errors.capture(static_cast<std::size_t>(i));
    }
  }
  errors.rethrow_first();

  BuildResult result;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (skipped[i]) result.skipped.push_back(corpus[i].image_id);
    for (auto& r : per_image[i]) result.records.push_back(std::move(r));
  }
  return result;
}

std::vector<RelatednessRecord> build_overlap_dataset(std::span<const ImageRecord> corpus, const BuilderConfig& cfg) {
  std::vector<RelatednessRecord> out;
  for (const auto& image : corpus) {
    std::vector<std::string> labels;
    for (const auto& d : filter_detections(image.detections, cfg)) {
      if (std::find(labels.begin(), labels.end(), d.label) == labels.end()) labels.push_back(d.label);
    }
    std::vector<text::TokenSeq> label_tokens;
    for (const auto& l : labels) label_tokens.push_back(text::tokenize(l));
    for (const auto& caption : image.human_captions) {
      const auto cap_tokens = text::tokenize(caption);
      std::vector<std::string> matched;
      for (std::size_t k = 0; k < labels.size(); ++k) {
        if (text::contains_run(cap_tokens, label_tokens[k])) matched.push_back(labels[k]);
      }
      if (matched.empty()) continue;
      std::string ctx;
      for (const auto& m : matched) {
        if (!ctx.empty()) ctx.push_back(' ');
        ctx += m;
      }
      out.push_back({caption, std::move(ctx), 1.0, 1, 0.0});
    }
  }
  return out;
}

std::vector<std::pair<std::string, std::size_t>> context_frequency(std::span<const RelatednessRecord> records) {
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& r : records) {
    for (auto& t : text::tokenize(r.context)) ++counts[std::move(t)];
  }
  std::vector<std::pair<std::string, std::size_t>> out(counts.begin(), counts.end());
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  return out;
}

}  // namespace vcrank::dataset
