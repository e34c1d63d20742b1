// Serial reference kernels against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include <map>
#include <random>
#include <string>
#include <vector>

#include "vcrank/dataset_builder.hpp"
#include "vcrank/toy_embedder.hpp"
#include "vcrank/vcsearch.hpp"

using namespace vcrank;

namespace {

std::vector<double> random_vec(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<double> dist;
  std::vector<double> v(dim);
  for (auto& x : v) x = dist(rng);
  return v;
}

const search::SearchIndex& index_of(std::size_t n, std::size_t dim) {
  static std::map<std::pair<std::size_t, std::size_t>, search::SearchIndex> cache;
  auto it = cache.find({n, dim});
  if (it != cache.end()) return it->second;
  std::mt19937_64 rng(n * 131 + dim);
  std::vector<std::pair<std::string, Vector>> entries;
  for (std::size_t i = 0; i < n; ++i) entries.push_back({"c" + std::to_string(i), random_vec(rng, dim)});
  return cache.emplace(std::make_pair(n, dim), search::build_index(entries)).first->second;
}

void BM_KnnSerial(benchmark::State& state) {
  const auto& index = index_of(static_cast<std::size_t>(state.range(0)), 128);
  std::mt19937_64 rng(7);
  const auto q = random_vec(rng, 128);
  for (auto _ : state) benchmark::DoNotOptimize(search::knn_serial(index, q, 50));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_KnnParallel(benchmark::State& state) {
  const auto& index = index_of(static_cast<std::size_t>(state.range(0)), 128);
  std::mt19937_64 rng(7);
  const auto q = random_vec(rng, 128);
  for (auto _ : state) benchmark::DoNotOptimize(search::knn(index, q, 50, static_cast<int>(state.range(1))));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

std::vector<ImageRecord> synthetic_corpus(std::size_t images) {
  static const char* words[] = {"man",   "woman", "dog",     "street", "umbrella", "table", "plate", "bus",
                                "train", "park",  "kite",    "beach",  "horse",    "field", "bench", "pizza",
                                "cat",   "sofa",  "bicycle", "tree",   "water",    "boat",  "snow",  "skis"};
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::size_t> pick(0, std::size(words) - 1);
  std::uniform_real_distribution<double> conf(0.0, 1.0);
  std::vector<ImageRecord> corpus;
  for (std::size_t i = 0; i < images; ++i) {
    ImageRecord r{"img" + std::to_string(i), {}, {}};
    for (int c = 0; c < 5; ++c) {
      std::string cap = "a";
      for (int w = 0; w < 8; ++w) cap += std::string(" ") + words[pick(rng)];
      r.human_captions.push_back(cap);
    }
    for (int d = 0; d < 6; ++d) {
      r.detections.push_back({words[pick(rng)], conf(rng), DetectorSource::parse(d % 2 ? "clip" : "resnet152")});
    }
    corpus.push_back(std::move(r));
  }
  return corpus;
}

void BM_BuildDataset(benchmark::State& state) {
  static const auto corpus = synthetic_corpus(500);
  static const toy::ToyEmbedder emb(300, 42);
  dataset::BuilderConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(dataset::build_relatedness_dataset(corpus, emb, cfg, static_cast<int>(state.range(0))));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(corpus.size()));
}

}  // namespace

BENCHMARK(BM_KnnSerial)->Arg(2000)->Arg(20000)->UseRealTime();
BENCHMARK(BM_KnnParallel)->Args({2000, 1})->Args({2000, 4})->Args({20000, 1})->Args({20000, 4})->UseRealTime();
BENCHMARK(BM_BuildDataset)->Arg(1)->Arg(4)->UseRealTime();

BENCHMARK_MAIN();
