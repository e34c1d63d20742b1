#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vcrank/corpus.hpp"

namespace vcrank::search {

/// Exact cosine index: N unit rows, row i belongs to ids()[i]. Immutable
/// once built; concurrent queries are safe.
class SearchIndex {
 public:
  std::size_t dim() const { return dim_; }
  std::size_t size() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(matrix_).subspan(i * dim_, dim_);
  }
  bool contains(const std::string& id) const;

 private:
  friend SearchIndex build_index(std::span<const std::pair<std::string, Vector>> entries);
  std::size_t dim_ = 0;
  std::vector<std::string> ids_;
  std::vector<double> matrix_;
};

/// Normalizes every row; keeps insertion order. Throws ValidationError on
/// duplicate ids, mixed dimensions or zero vectors.
SearchIndex build_index(std::span<const std::pair<std::string, Vector>> entries);

struct Hit {
  std::string id;
  double score = 0.0;

  friend bool operator==(const Hit&, const Hit&) = default;
};

/// Exact top-k by cosine (score desc, id asc), length min(k, N). Rows are
/// scanned on `jobs` OpenMP threads (<= 0: all cores), each keeping a bounded
/// heap; per-thread winners are merged under the same total order.
std::vector<Hit> knn(const SearchIndex& index, std::span<const double> query, std::size_t k, int jobs = 0);

/// Single-threaded bounded-heap reference for knn().
std::vector<Hit> knn_serial(const SearchIndex& index, std::span<const double> query, std::size_t k);

struct Query {
  Vector vector;
  std::string gold_id;
};

/// Fraction of queries whose gold id is in the top k. Throws ValidationError
/// for a gold id that is not indexed.
double recall_at_k(const SearchIndex& index, std::span<const Query> queries, std::size_t k, int jobs = 0);

/// knn() with the embedding of the space-joined labels as query.
std::vector<Hit> search_by_context(const SearchIndex& index, std::span<const std::string> context_labels,
                                   const EmbeddingLookup& emb, std::size_t k, int jobs = 0);

}  // namespace vcrank::search
