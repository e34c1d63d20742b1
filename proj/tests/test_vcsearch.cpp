#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "support/gen.hpp"
#include "support/knn_oracle.hpp"
#include "vcrank/error.hpp"
#include "vcrank/toy_embedder.hpp"
#include "vcrank/vcsearch.hpp"

using namespace vcrank;
using Entries = std::vector<std::pair<std::string, Vector>>;

namespace {

Entries random_entries(testgen::Gen& g, std::size_t n, std::size_t dim) {
  Entries e;
  for (std::size_t i = 0; i < n; ++i) e.push_back({"id" + std::to_string(i), g.vec(dim)});
  return e;
}

std::vector<std::string> ids_of(const std::vector<search::Hit>& hits) {
  std::vector<std::string> out;
  for (const auto& h : hits) out.push_back(h.id);
  return out;
}

}  // namespace

TEST_CASE("build_index") {
  const Entries two{{"a", {1, 0}}, {"b", {0, 3}}};
  const auto idx = search::build_index(two);
  CHECK(idx.size() == 2);
  CHECK(idx.row(1)[1] == 1.0);
  CHECK(idx.contains("a"));
  CHECK_THROWS_AS(search::build_index(Entries{{"a", {1, 0}}, {"a", {0, 1}}}), ValidationError);
  CHECK_THROWS_AS(search::build_index(Entries{{"a", {0, 0}}}), ValidationError);
  CHECK_THROWS_AS(search::build_index(Entries{{"a", {1, 0}}, {"b", {1, 0, 0}}}), ValidationError);

  testgen::Gen g(40);
  const auto big = search::build_index(random_entries(g, 1000, 12));
  for (std::size_t i = 0; i < big.size(); ++i) CHECK(std::abs(l2_norm(big.row(i)) - 1.0) < 1e-6);
}

TEST_CASE("knn small cases") {
  const auto idx = search::build_index(Entries{{"e1", {1, 0}}, {"e2", {0, 1}}});
  const Vector q{1, 0};
  const auto one = search::knn(idx, q, 1);
  REQUIRE(one.size() == 1);
  CHECK(one[0] == search::Hit{"e1", 1.0});
  CHECK(search::knn(idx, q, 10).size() == 2);
  CHECK_THROWS_AS(search::knn(idx, Vector{0, 0}, 1), ValidationError);
  CHECK_THROWS_AS(search::knn(idx, Vector{1, 0, 0}, 1), ValidationError);
  CHECK_THROWS_AS(search::knn(idx, q, 0), ValidationError);
}

TEST_CASE("ties break by ascending id") {
  const auto idx = search::build_index(Entries{{"c", {1, 1}}, {"a", {2, 2}}, {"b", {1, 1}}, {"z", {1, 0}}});
  CHECK(ids_of(search::knn(idx, Vector{1, 1}, 3, 2)) == std::vector<std::string>{"a", "b", "c"});
  CHECK(ids_of(search::knn_serial(idx, Vector{1, 1}, 3)) == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("knn equals the full-sort oracle") {
  testgen::Gen g(41);
  for (int round = 0; round < 30; ++round) {
    const auto entries = random_entries(g, g.range(1, 500), g.range(2, 32));
    const auto idx = search::build_index(entries);
    const auto q = g.vec(idx.dim());
    const auto k = g.range(1, 50);
    const auto want = testgen::knn_full_sort(entries, q, k);
    CHECK(search::knn(idx, q, k, 3) == want);
    CHECK(search::knn_serial(idx, q, k) == want);
  }
}

TEST_CASE("knn over all rows is a permutation and scale invariant") {
  testgen::Gen g(42);
  for (int round = 0; round < 20; ++round) {
    const auto entries = random_entries(g, g.range(1, 100), 8);
    const auto idx = search::build_index(entries);
    const auto q = g.vec(8);
    auto got = ids_of(search::knn(idx, q, idx.size()));
    auto all = idx.ids();
    std::sort(got.begin(), got.end());
    std::sort(all.begin(), all.end());
    CHECK(got == all);

    auto scaled = q;
    const double alpha = std::exp(g.uniform(-5, 5));
    for (auto& x : scaled) x *= alpha;
    CHECK(ids_of(search::knn(idx, scaled, 10)) == ids_of(search::knn(idx, q, 10)));
  }
}

TEST_CASE("recall_at_k") {
  const auto idx = search::build_index(Entries{{"a", {1, 0}}, {"b", {0, 1}}, {"c", {-1, 0}}});
  const std::vector<search::Query> hit{{{1, 0.1}, "a"}, {{0.1, 1}, "b"}};
  CHECK(search::recall_at_k(idx, hit, 1) == 1.0);
  const std::vector<search::Query> half{{{1, 0.1}, "a"}, {{1, 0.1}, "c"}};
  CHECK(search::recall_at_k(idx, half, 1) == 0.5);
  CHECK_THROWS_AS(search::recall_at_k(idx, std::vector<search::Query>{{{1, 0}, "nope"}}, 1), ValidationError);

  testgen::Gen g(43);
  const auto entries = random_entries(g, 200, 6);
  const auto big = search::build_index(entries);
  std::vector<search::Query> qs;
  for (int i = 0; i < 50; ++i) qs.push_back({g.vec(6), entries[g.index(200)].first});
  double prev = 0.0;
  for (std::size_t k = 1; k <= 200; k += 7) {
    const double r = search::recall_at_k(big, qs, k);
    CHECK(r >= prev);
    prev = r;
  }
}

TEST_CASE("self-retrieval of toy-embedded captions") {
  const std::vector<std::string> caps{"a man riding a wave on a surfboard", "two dogs playing in the snow",
                                      "a plate of broccoli and mashed potato", "a red car parked on the street",
                                      "a woman holding an umbrella", "a cat sleeping on a sofa"};
  const toy::ToyEmbedder emb(64, 42);
  Entries e;
  std::vector<search::Query> qs;
  for (const auto& c : caps) {
    e.push_back({c, emb.vector(c)});
    qs.push_back({emb.vector(c), c});
  }
  const auto idx = search::build_index(e);
  CHECK(search::recall_at_k(idx, qs, 1) == 1.0);
}

TEST_CASE("search_by_context") {
  const toy::ToyEmbedder emb(32, 42);
  Entries e{{"c1", emb.vector("a dog")}, {"c2", emb.vector("zebra")}, {"c3", emb.vector("beer glass on a bar")}};
  const auto idx = search::build_index(e);
  const std::vector<std::string> zebra{"zebra"};
  CHECK(search::search_by_context(idx, zebra, emb, 1)[0].id == "c2");
  const std::vector<std::string> beer_glass{"beer", "glass"}, beer{"beer"};
  CHECK(search::search_by_context(idx, beer_glass, emb, 3).size() == 3);
  CHECK(search::search_by_context(idx, beer, emb, 3).size() == 3);
  CHECK_THROWS_AS(search::search_by_context(idx, std::vector<std::string>{}, emb, 1), ValidationError);
}
