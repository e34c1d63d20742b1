#include "vcrank/capmetrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "vcrank/error.hpp"
#include "vcrank/parallel.hpp"
#include "vcrank/scorer.hpp"

namespace vcrank::metrics {

namespace {

void require_nonempty(const TokenSeq& s, const char* what) {
  if (s.empty()) throw ValidationError(std::string(what) + " must not be empty");
}

std::string gram_key(const text::Ngram& g) { return text::join(g); }

std::size_t lcs_length(const TokenSeq& a, const TokenSeq& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace

double bleu(const TokenSeq& candidate, std::span<const TokenSeq> references, std::size_t max_n) {
  require_nonempty(candidate, "BLEU candidate");
  if (references.empty()) throw ValidationError("BLEU needs at least one reference");
  if (max_n < 1 || max_n > 4) throw ValidationError("BLEU order must be in 1..4");

  double log_sum = 0.0;
  for (std::size_t n = 1; n <= max_n; ++n) {
    const auto cand = text::ngrams(candidate, n);
    if (cand.total() == 0) return 0.0;
    std::unordered_map<std::string, std::size_t> max_ref;
    for (const auto& ref : references) {
      const auto ref_grams = text::ngrams(ref, n);
      for (const auto& [g, c] : ref_grams.items()) {
        auto& m = max_ref[gram_key(g)];
        m = std::max(m, c);
      }
    }
    std::size_t clipped = 0;
    for (const auto& [g, c] : cand.items()) {
      auto it = max_ref.find(gram_key(g));
      if (it != max_ref.end()) clipped += std::min(c, it->second);
    }
    if (clipped == 0) return 0.0;
    log_sum += std::log(static_cast<double>(clipped) / static_cast<double>(cand.total()));
  }

  const auto c = static_cast<double>(candidate.size());
  std::size_t best_len = references.front().size();
  for (const auto& ref : references) {
    const auto d = std::abs(static_cast<double>(ref.size()) - c);
    const auto bd = std::abs(static_cast<double>(best_len) - c);
    if (d < bd || (d == bd && ref.size() < best_len)) best_len = ref.size();
  }
  const auto r = static_cast<double>(best_len);
  const double bp = c < r ? std::exp(1.0 - r / c) : 1.0;
  return bp * std::exp(log_sum / static_cast<double>(max_n));
}

double mbleu(const TokenSeq& candidate, std::span<const TokenSeq> references) {
  return bleu(candidate, references, 4);
}

double div1(const TokenSeq& caption) {
  require_nonempty(caption, "caption");
  return static_cast<double>(text::ngrams(caption, 1).unique()) / static_cast<double>(caption.size());
}

double div2(const TokenSeq& caption) {
  require_nonempty(caption, "caption");
  return static_cast<double>(text::ngrams(caption, 2).unique()) / static_cast<double>(caption.size());
}

CorpusDiversity corpus_diversity(std::span<const TokenSeq> captions) {
  if (captions.empty()) throw ValidationError("diversity needs at least one caption");
  CorpusDiversity out;
  std::unordered_set<std::string> vocab;
  double uniq = 0.0, d1 = 0.0, d2 = 0.0;
  for (const auto& cap : captions) {
    uniq += static_cast<double>(std::set<std::string>(cap.begin(), cap.end()).size());
    d1 += div1(cap);
    d2 += div2(cap);
    vocab.insert(cap.begin(), cap.end());
  }
  const auto n = static_cast<double>(captions.size());
  out.mean_uniq_per_caption = uniq / n;
  out.vocab_size = vocab.size();
  out.mean_div1 = d1 / n;
  out.mean_div2 = d2 / n;
  return out;
}

double rouge_l(const TokenSeq& candidate, std::span<const TokenSeq> references, double beta_sq) {
  require_nonempty(candidate, "ROUGE-L candidate");
  if (references.empty()) throw ValidationError("ROUGE-L needs at least one reference");
  double best = 0.0;
  for (const auto& ref : references) {
    require_nonempty(ref, "ROUGE-L reference");
    const auto lcs = static_cast<double>(lcs_length(candidate, ref));
    if (lcs == 0.0) continue;
    const double p = lcs / static_cast<double>(candidate.size());
    const double r = lcs / static_cast<double>(ref.size());
    best = std::max(best, (1.0 + beta_sq) * p * r / (r + beta_sq * p));
  }
  return best;
}

// ---------------------------------------------------------------------------
// CIDEr-D

namespace {

constexpr std::size_t kCiderN = 4;

struct TfIdf {
  std::array<std::unordered_map<std::string, double>, kCiderN> vec;
  std::array<double, kCiderN> norm{};
  double length = 0.0;
};

std::array<std::vector<std::pair<std::string, std::size_t>>, kCiderN> cook(const TokenSeq& s) {
  std::array<std::vector<std::pair<std::string, std::size_t>>, kCiderN> out;
  for (std::size_t n = 1; n <= kCiderN; ++n) {
    const auto grams = text::ngrams(s, n);
    for (const auto& [g, c] : grams.items()) out[n - 1].emplace_back(gram_key(g), c);
  }
  return out;
}

TfIdf to_tfidf(const std::array<std::vector<std::pair<std::string, std::size_t>>, kCiderN>& counts,
               const std::unordered_map<std::string, std::size_t>& df, double log_n, std::size_t length) {
  TfIdf t;
  for (std::size_t n = 0; n < kCiderN; ++n) {
    double sq = 0.0;
    for (const auto& [g, c] : counts[n]) {
      auto it = df.find(g);
      const double d = it == df.end() ? 1.0 : static_cast<double>(std::max<std::size_t>(1, it->second));
      const double w = static_cast<double>(c) * (log_n - std::log(d));
      t.vec[n][g] = w;
      sq += w * w;
    }
    t.norm[n] = std::sqrt(sq);
  }
  t.length = static_cast<double>(length);
  return t;
}

double cider_pair(const TfIdf& hyp, const TfIdf& ref, double sigma) {
  const double delta = hyp.length - ref.length;
  const double penalty = std::exp(-(delta * delta) / (2.0 * sigma * sigma));
  double total = 0.0;
  for (std::size_t n = 0; n < kCiderN; ++n) {
    double val = 0.0;
    for (const auto& [g, wh] : hyp.vec[n]) {
      auto it = ref.vec[n].find(g);
      if (it == ref.vec[n].end()) continue;
      val += std::min(wh, it->second) * it->second;
    }
    if (hyp.norm[n] != 0.0 && ref.norm[n] != 0.0) val /= hyp.norm[n] * ref.norm[n];
    total += val * penalty;
  }
  return total / static_cast<double>(kCiderN);
}

}  // namespace

CiderResult cider_d(std::span<const CiderItem> corpus, double sigma) {
  if (corpus.size() < 2) throw ValidationError("CIDEr-D needs at least two images to estimate idf");
  std::vector<std::vector<std::array<std::vector<std::pair<std::string, std::size_t>>, kCiderN>>> ref_counts;
  std::unordered_map<std::string, std::size_t> df;
  for (const auto& item : corpus) {
    if (item.references.empty()) throw ValidationError("CIDEr-D: every image needs a reference");
    auto& cooked = ref_counts.emplace_back();
    std::unordered_set<std::string> seen;
    for (const auto& ref : item.references) {
      cooked.push_back(cook(ref));
      for (const auto& level : cooked.back()) {
        for (const auto& [g, c] : level) seen.insert(g);
      }
    }
    for (const auto& g : seen) ++df[g];
  }
  const double log_n = std::log(static_cast<double>(corpus.size()));

  CiderResult out;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& item = corpus[i];
    const TfIdf hyp = to_tfidf(cook(item.candidate), df, log_n, item.candidate.size());
    double sum = 0.0;
    for (std::size_t r = 0; r < item.references.size(); ++r) {
      sum += cider_pair(hyp, to_tfidf(ref_counts[i][r], df, log_n, item.references[r].size()), sigma);
    }
    out.per_candidate.push_back(10.0 * sum / static_cast<double>(item.references.size()));
  }
  out.mean = std::accumulate(out.per_candidate.begin(), out.per_candidate.end(), 0.0) /
             static_cast<double>(out.per_candidate.size());
  return out;
}

double avg_ref_similarity(std::span<const double> candidate, std::span<const Vector> references) {
  if (references.empty()) throw ValidationError("avg_ref_similarity needs at least one reference");
  double s = 0.0;
  for (const auto& r : references) s += scoring::cosine(candidate, r);
  return s / static_cast<double>(references.size());
}

std::map<std::string, double> evaluate(std::span<const EvalItem> items, int jobs) {
  if (items.empty()) throw ValidationError("nothing to evaluate");
  const std::size_t n = items.size();
  const bool with_sb = std::all_of(items.begin(), items.end(), [](const EvalItem& it) {
    return !it.candidate_embedding.empty() && !it.reference_embeddings.empty();
  });

  struct Row {
    std::array<double, 4> bleu{};
    double rouge = 0.0, mb = 0.0, sb = 0.0;
  };
  std::vector<Row> rows(n);
  ErrorSlots errors(n);
  const auto sn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for num_threads(resolve_jobs(jobs)) schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < sn; ++i) {
    const auto u = static_cast<std::size_t>(i);
    try {
      const auto& it = items[u];
      for (std::size_t k = 1; k <= 4; ++k) rows[u].bleu[k - 1] = bleu(it.candidate, it.references, k);
      rows[u].rouge = rouge_l(it.candidate, it.references);
      rows[u].mb = rows[u].bleu[3];
      if (with_sb) rows[u].sb = avg_ref_similarity(it.candidate_embedding, it.reference_embeddings);
    } catch (...) {
      errors.capture(u);
    }
  }
  errors.rethrow_first();

  std::map<std::string, double> out;
  const auto dn = static_cast<double>(n);
  auto mean_of = [&](auto field) {
    double s = 0.0;
    for (const auto& r : rows) s += field(r);
    return s / dn;
  };
  for (std::size_t k = 0; k < 4; ++k) {
    out["BLEU-" + std::to_string(k + 1)] = mean_of([k](const Row& r) { return r.bleu[k]; });
  }
  out["ROUGE-L"] = mean_of([](const Row& r) { return r.rouge; });
  out["mB"] = mean_of([](const Row& r) { return r.mb; });
  if (with_sb) out["SB"] = mean_of([](const Row& r) { return r.sb; });

  std::vector<TokenSeq> caps;
  caps.reserve(n);
  for (const auto& it : items) caps.push_back(it.candidate);
  const auto div = corpus_diversity(caps);
  out["D1"] = div.mean_div1;
  out["D2"] = div.mean_div2;
  out["Uniq"] = div.mean_uniq_per_caption;
  out["V"] = static_cast<double>(div.vocab_size);

  if (n >= 2) {
    std::vector<CiderItem> cider_items;
    cider_items.reserve(n);
    for (const auto& it : items) cider_items.push_back({it.candidate, it.references});
    out["CIDEr-D"] = cider_d(cider_items).mean;
  }
  return out;
}

}  // namespace vcrank::metrics
