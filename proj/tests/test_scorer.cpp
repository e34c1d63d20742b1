#include <doctest.h>

#include <cmath>

#include "support/gen.hpp"
#include "vcrank/error.hpp"
#include "vcrank/scorer.hpp"
#include "vcrank/toy_embedder.hpp"

using namespace vcrank;
using scoring::ContextJoin;

TEST_CASE("cosine examples") {
  const Vector x{1, 0}, y{0, 1}, d{1, 1};
  CHECK(scoring::cosine(x, y) == 0.0);
  CHECK(scoring::cosine(d, d) == doctest::Approx(1.0));
  CHECK(scoring::cosine(d, x) == doctest::Approx(std::sqrt(2.0) / 2.0).epsilon(1e-12));
  CHECK_THROWS_AS(scoring::cosine(x, Vector{0, 0}), ValidationError);
  CHECK_THROWS_AS(scoring::cosine(x, Vector{1, 0, 0}), ValidationError);
}

TEST_CASE("cosine is symmetric and bounded") {
  testgen::Gen g(4);
  for (int i = 0; i < 500; ++i) {
    const auto dim = g.range(1, 20);
    const auto u = g.vec(dim), v = g.vec(dim);
    const double a = scoring::cosine(u, v);
    CHECK(a == scoring::cosine(v, u));
    CHECK(std::abs(a) <= 1.0 + 1e-9);
  }
}

TEST_CASE("simprob examples") {
  const double one[] = {1.0}, half[] = {0.5};
  CHECK(scoring::simprob(0.8, one) == 0.8);
  CHECK(scoring::simprob(1.0, half) == 1.0);
  CHECK(std::abs(scoring::simprob(0.8, half) - 0.894427191) < 1e-9);
  CHECK(scoring::simprob(-0.5, one) == 1e-6);
  CHECK_THROWS_AS(scoring::simprob(0.5, std::span<const double>{}), ValidationError);
  const double three[] = {0.9, 0.6, 0.3};
  CHECK(scoring::simprob(0.25, three) == doctest::Approx(std::pow(0.25, 0.6)));
}

TEST_CASE("simprob monotonicity") {
  testgen::Gen g(8);
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> conf(g.range(1, 3));
    for (auto& c : conf) c = g.uniform(0, 1);
    const double a = g.uniform(-1, 1), b = g.uniform(-1, 1);
    const double lo = std::min(a, b), hi = std::max(a, b);
    CHECK(scoring::simprob(lo, conf) <= scoring::simprob(hi, conf));

    const double s = g.uniform(1e-6, 0.999);
    const double p = g.uniform(0, 1), q = g.uniform(0, 1);
    const double cp[] = {std::min(p, q)}, cq[] = {std::max(p, q)};
    CHECK(scoring::simprob(s, cq) <= scoring::simprob(s, cp));

    const std::vector<double> ones(g.range(1, 3), 1.0);
    CHECK(scoring::simprob(a, ones) == std::clamp(a, 1e-6, 1.0));
  }
}

TEST_CASE("mode names round-trip") {
  for (auto m : {scoring::ScoreMode::cosine_clamped, scoring::ScoreMode::simprob, scoring::ScoreMode::cnn_model}) {
    CHECK(scoring::parse_score_mode(scoring::to_string(m)) == m);
  }
  for (auto j : {ContextJoin::concatenated, ContextJoin::per_object}) {
    CHECK(scoring::parse_context_join(scoring::to_string(j)) == j);
  }
  CHECK_THROWS_AS(scoring::parse_context_join("sideways"), ValidationError);
}

TEST_CASE("context_similarity") {
  const toy::ToyEmbedder emb(32, 42);
  const std::vector<Detection> one{{"umbrella", 0.8, DetectorSource::parse("clip")}};
  const auto cap = "a woman under and umbrella standing in water";
  CHECK(scoring::context_similarity(cap, one, emb, ContextJoin::concatenated) ==
        scoring::context_similarity(cap, one, emb, ContextJoin::per_object));
  CHECK(scoring::context_similarity("umbrella", one, emb, ContextJoin::concatenated) == doctest::Approx(1.0));

  const std::vector<Detection> three{{"umbrella", 0.8, {}}, {"lakeside", 0.4, {}}, {"paddle", 0.3, {}}};
  double best = -2.0;
  for (const char* l : {"umbrella", "lakeside", "paddle"}) {
    best = std::max(best, scoring::cosine(emb.vector(cap), emb.vector(l)));
  }
  CHECK(scoring::context_similarity(cap, three, emb, ContextJoin::per_object) == doctest::Approx(best).epsilon(1e-12));
  CHECK(scoring::context_similarity(cap, three, emb, ContextJoin::concatenated) ==
        doctest::Approx(scoring::cosine(emb.vector(cap), emb.vector("umbrella lakeside paddle"))).epsilon(1e-12));
  CHECK_THROWS_AS(scoring::context_similarity(cap, std::span<const Detection>{}, emb, ContextJoin::per_object),
                  ValidationError);
}
