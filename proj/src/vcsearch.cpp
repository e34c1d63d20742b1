#include "vcrank/vcsearch.hpp"

#include <algorithm>
#include <queue>
#include <unordered_set>

#include "vcrank/error.hpp"
#include "vcrank/parallel.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace vcrank::search {

namespace {

struct Scored {
  double score;
  std::size_t row;
};

// Strict "ranks ahead of" order. As a heap comparator it keeps the worst
// retained candidate on top.
struct Better {
  const SearchIndex* index;
  bool operator()(const Scored& a, const Scored& b) const {
    if (a.score != b.score) return a.score > b.score;
    return index->ids()[a.row] < index->ids()[b.row];
  }
};

using BoundedHeap = std::priority_queue<Scored, std::vector<Scored>, Better>;

void offer(BoundedHeap& heap, std::size_t k, Scored s, const Better& better) {
  if (heap.size() < k) {
    heap.push(s);
  } else if (better(s, heap.top())) {
    heap.pop();
    heap.push(s);
  }
}

Vector unit_query(const SearchIndex& index, std::span<const double> query) {
  if (query.size() != index.dim()) {
    throw ValidationError("query dimension " + std::to_string(query.size()) + " does not match index dimension " +
                          std::to_string(index.dim()));
  }
  Vector q(query.begin(), query.end());
  if (!normalize_in_place(q)) throw ValidationError("zero query vector");
  return q;
}

std::vector<Hit> finish(const SearchIndex& index, std::vector<Scored> pool, std::size_t k) {
  const Better better{&index};
  std::sort(pool.begin(), pool.end(), better);
  if (pool.size() > k) pool.resize(k);
  std::vector<Hit> out;
  out.reserve(pool.size());
  for (const auto& s : pool) out.push_back({index.ids()[s.row], s.score});
  return out;
}

std::vector<Scored> drain(BoundedHeap& heap) {
  std::vector<Scored> out;
  out.reserve(heap.size());
  while (!heap.empty()) {
    out.push_back(heap.top());
    heap.pop();
  }
  return out;
}

}  // namespace

bool SearchIndex::contains(const std::string& id) const {
  return std::find(ids_.begin(), ids_.end(), id) != ids_.end();
}

SearchIndex build_index(std::span<const std::pair<std::string, Vector>> entries) {
  SearchIndex index;
  if (entries.empty()) return index;
  index.dim_ = entries.front().second.size();
  if (index.dim_ == 0) throw ValidationError("index vectors must be nonempty");
  std::unordered_set<std::string> seen;
  index.matrix_.reserve(entries.size() * index.dim_);
  for (const auto& [id, vec] : entries) {
    if (!seen.insert(id).second) throw ValidationError("duplicate index id \"" + id + "\"");
    if (vec.size() != index.dim_) throw ValidationError("mixed dimensions in index entry \"" + id + "\"");
    Vector row = vec;
    if (!normalize_in_place(row)) throw ValidationError("zero vector for index entry \"" + id + "\"");
    index.ids_.push_back(id);
    index.matrix_.insert(index.matrix_.end(), row.begin(), row.end());
  }
  return index;
}

std::vector<Hit> knn_serial(const SearchIndex& index, std::span<const double> query, std::size_t k) {
  if (k == 0) throw ValidationError("k must be at least 1");
  const Vector q = unit_query(index, query);
  const Better better{&index};
  BoundedHeap heap(better);
  for (std::size_t i = 0; i < index.size(); ++i) offer(heap, k, {dot(index.row(i), q), i}, better);
  return finish(index, drain(heap), k);
}

std::vector<Hit> knn(const SearchIndex& index, std::span<const double> query, std::size_t k, int jobs) {
  if (k == 0) throw ValidationError("k must be at least 1");
  const Vector q = unit_query(index, query);
  const Better better{&index};
  const auto n = static_cast<std::ptrdiff_t>(index.size());
  const int threads = resolve_jobs(jobs);
  std::vector<std::vector<Scored>> partial(static_cast<std::size_t>(threads));

#pragma omp parallel num_threads(threads)
  {
    BoundedHeap heap(better);
#pragma omp for schedule(static) nowait
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      const auto u = static_cast<std::size_t>(i);
      offer(heap, k, {dot(index.row(u), q), u}, better);
    }
#ifdef _OPENMP
    partial[static_cast<std::size_t>(omp_get_thread_num())] = drain(heap);
#else
    partial[0] = drain(heap);
#endif
  }

  std::vector<Scored> pool;
  for (auto& p : partial) pool.insert(pool.end(), p.begin(), p.end());
  return finish(index, std::move(pool), k);
}

double recall_at_k(const SearchIndex& index, std::span<const Query> queries, std::size_t k, int jobs) {
  if (queries.empty()) throw ValidationError("recall needs at least one query");
  std::unordered_set<std::string> ids(index.ids().begin(), index.ids().end());
  for (const auto& q : queries) {
    if (!ids.contains(q.gold_id)) throw ValidationError("gold id \"" + q.gold_id + "\" is not in the index");
  }
  std::size_t hits = 0;
  for (const auto& q : queries) {
    const auto top = knn(index, q.vector, k, jobs);
    hits += std::any_of(top.begin(), top.end(), [&](const Hit& h) { return h.id == q.gold_id; }) ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(queries.size());
}

std::vector<Hit> search_by_context(const SearchIndex& index, std::span<const std::string> context_labels,
                                   const EmbeddingLookup& emb, std::size_t k, int jobs) {
  if (context_labels.empty()) throw ValidationError("search needs at least one context label");
  std::string joined;
  for (const auto& l : context_labels) {
    if (!joined.empty()) joined.push_back(' ');
    joined += l;
  }
  const Vector q = emb.vector(joined);
  return knn(index, q, k, jobs);
}

}  // namespace vcrank::search
