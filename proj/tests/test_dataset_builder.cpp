#include <doctest.h>

#include <map>
#include <set>
#include <sstream>

#include "support/gen.hpp"
#include "vcrank/dataset_builder.hpp"
#include "vcrank/error.hpp"
#include "vcrank/textnorm.hpp"
#include "vcrank/toy_embedder.hpp"

using namespace vcrank;
using dataset::BuilderConfig;

namespace {

Detection det(std::string label, double conf, const char* source = "resnet152") {
  return {std::move(label), conf, DetectorSource::parse(source)};
}

std::vector<std::string> labels_of(const std::vector<Detection>& ds) {
  std::vector<std::string> out;
  for (const auto& d : ds) out.push_back(d.label);
  return out;
}

}  // namespace

TEST_CASE("filter_detections thresholds and top-k") {
  const BuilderConfig cfg;
  CHECK(dataset::filter_detections(std::vector{det("dog", 0.15)}, cfg).empty());
  CHECK(dataset::filter_detections(std::vector{det("dog", 0.2)}, cfg).size() == 1);

  const std::vector five{det("a", 0.3), det("b", 0.9), det("c", 0.5), det("d", 0.7), det("e", 0.4)};
  CHECK(labels_of(dataset::filter_detections(five, cfg)) == std::vector<std::string>{"b", "d", "c"});

  const std::vector two_sources{det("x", 0.5, "clip"), det("y", 0.5), det("z", 0.6, "clip")};
  CHECK(labels_of(dataset::filter_detections(two_sources, cfg)) == std::vector<std::string>{"z", "x", "y"});
}

TEST_CASE("dedup_contexts") {
  const toy::ToyEmbedder emb(64, 42);
  const BuilderConfig cfg;
  CHECK(labels_of(dataset::dedup_contexts(std::vector{det("dog", 0.9), det("dog", 0.8, "clip")}, emb, cfg)) ==
        std::vector<std::string>{"dog"});
  REQUIRE(scoring::cosine(emb.vector("dog"), emb.vector("cat")) < 0.9);
  CHECK(dataset::dedup_contexts(std::vector{det("dog", 0.9), det("cat", 0.8)}, emb, cfg).size() == 2);
  CHECK(dataset::dedup_contexts(std::vector{det("dog", 0.9)}, emb, cfg).size() == 1);

  EmbeddingTable t(2);
  t.insert("sofa", std::vector{1.0, 0.0});
  t.insert("couch", std::vector{0.99, 0.05});
  t.insert("lamp", std::vector{0.0, 1.0});
  CHECK(labels_of(dataset::dedup_contexts(std::vector{det("couch", 0.5), det("sofa", 0.8), det("lamp", 0.3)}, t, cfg)) ==
        std::vector<std::string>{"sofa", "lamp"});
  CHECK_THROWS_AS(dataset::dedup_contexts(std::vector{det("chair", 0.5)}, t, cfg), MissingEmbedding);
}

TEST_CASE("relatedness_score and assign_label") {
  EmbeddingTable t(2);
  t.insert("a", std::vector{1.0, 0.0});
  t.insert("b", std::vector{0.0, 2.0});
  CHECK(dataset::relatedness_score("a", "a", t) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(dataset::relatedness_score("a", "b", t) == 0.0);
  CHECK(dataset::assign_label(0.35, 0.3) == 1);
  CHECK(dataset::assign_label(0.35, 0.4) == 0);
  CHECK(dataset::assign_label(0.3, 0.3) == 1);
}

TEST_CASE("config validation") {
  BuilderConfig cfg;
  cfg.top_k_contexts = 0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = {};
  cfg.label_thresholds = {0.2, 1.5};
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = {};
  cfg.dedup_threshold = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
}

TEST_CASE("one caption yields one record per threshold") {
  const toy::ToyEmbedder emb(16, 42);
  const std::vector corpus{ImageRecord{"i", {"a dog on a couch"}, {det("dog", 0.9)}}};
  const auto r = dataset::build_relatedness_dataset(corpus, emb, {});
  REQUIRE(r.records.size() == 3);
  CHECK(r.records[0].threshold == 0.2);
  CHECK(r.records[2].threshold == 0.4);
  CHECK(r.skipped.empty());

  const std::vector low{ImageRecord{"j", {"x"}, {det("dog", 0.1)}}};
  const auto s = dataset::build_relatedness_dataset(low, emb, {});
  CHECK(s.records.empty());
  CHECK(s.skipped == std::vector<std::string>{"j"});
}

TEST_CASE("fixture corpus matches a hand-built oracle") {
  const auto corpus = load_corpus(VCRANK_FIXTURE_DIR "/corpus.jsonl");
  const toy::ToyEmbedder emb(64, 42);
  const BuilderConfig cfg;

  // Contexts retained per image, worked out by hand from the fixture.
  const std::vector<std::pair<std::string, std::string>> ctx{
      {"food", "broccoli mashed potato cauliflower"},
      {"garb", "kimono umbrella street"},
      {"lake", "umbrella lakeside dock paddle"},
  };
  std::vector<RelatednessRecord> oracle;
  for (const auto& [id, context] : ctx) {
    const auto& img = *std::find_if(corpus.begin(), corpus.end(), [&](const auto& r) { return r.image_id == id; });
    for (const auto& cap : img.human_captions) {
      const auto a = toy::embed_text(context, 64, 42), b = toy::embed_text(cap, 64, 42);
      double dotp = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) dotp += a[i] * b[i];
      for (double th : {0.2, 0.3, 0.4}) oracle.push_back({cap, context, dotp, dotp >= th ? 1 : 0, th});
    }
  }
  const auto got = dataset::build_relatedness_dataset(corpus, emb, cfg);
  CHECK(got.skipped == std::vector<std::string>{"park"});
  REQUIRE(got.records.size() == oracle.size());
  for (std::size_t i = 0; i < oracle.size(); ++i) {
    CHECK(got.records[i].caption == oracle[i].caption);
    CHECK(got.records[i].context == oracle[i].context);
    CHECK(got.records[i].cosine == doctest::Approx(oracle[i].cosine).epsilon(1e-12));
    CHECK(got.records[i].label == oracle[i].label);
    CHECK(got.records[i].threshold == oracle[i].threshold);
  }

  std::vector<RelatednessRecord> lowest;
  for (const auto& r : got.records) {
    if (r.threshold == 0.2) lowest.push_back(r);
  }
  const std::vector<std::pair<std::string, std::size_t>> freq{
      {"umbrella", 4}, {"broccoli", 2}, {"cauliflower", 2}, {"dock", 2}, {"kimono", 2},
      {"lakeside", 2}, {"mashed", 2},   {"paddle", 2},      {"potato", 2}, {"street", 2}};
  CHECK(dataset::context_frequency(lowest) == freq);
}

TEST_CASE("per-object mode emits one record per label") {
  const auto corpus = load_corpus(VCRANK_FIXTURE_DIR "/corpus.jsonl");
  const toy::ToyEmbedder emb(64, 42);
  BuilderConfig cfg;
  cfg.context_join = scoring::ContextJoin::per_object;
  cfg.label_thresholds = {0.3};
  const auto got = dataset::build_relatedness_dataset(corpus, emb, cfg);
  CHECK(got.records.size() == 2 * 3 + 2 * 3 + 2 * 4);
}

TEST_CASE("overlap dataset on the fixture") {
  const auto corpus = load_corpus(VCRANK_FIXTURE_DIR "/corpus.jsonl");
  const auto got = dataset::build_overlap_dataset(corpus, {});
  REQUIRE(got.size() == 4);
  CHECK(got[0].caption == "A lunch box with broccoli and mashed potato.");
  CHECK(got[0].context == "broccoli mashed potato");
  CHECK(got[1].context == "street");
  CHECK(got[2].caption == "a woman under and umbrella standing in water");
  CHECK(got[2].context == "umbrella");
  CHECK(got[3].context == "umbrella");
  for (const auto& r : got) {
    CHECK(r.label == 1);
    CHECK(r.threshold == 0.0);
    for (const auto& label : {std::string("broccoli"), std::string("mashed potato"), std::string("street"),
                              std::string("umbrella")}) {
      if (r.context.find(label) != std::string::npos) {
        CHECK(text::contains_run(text::tokenize(r.caption), text::tokenize(label)));
      }
    }
  }

  const std::vector cat{ImageRecord{"c", {"a category of things"}, {det("cat", 0.9)}}};
  CHECK(dataset::build_overlap_dataset(cat, {}).empty());
  const std::vector mash{ImageRecord{"m", {"a potato"}, {det("mashed potato", 0.9)}}};
  CHECK(dataset::build_overlap_dataset(mash, {}).empty());
}

TEST_CASE("context_frequency small cases") {
  std::vector<RelatednessRecord> rs{{"c", "dog", 0, 0, 0}, {"c", "cat", 0, 0, 0}, {"c", "dog", 0, 0, 0},
                                    {"c", "dog", 0, 0, 0}};
  CHECK(dataset::context_frequency(rs) == std::vector<std::pair<std::string, std::size_t>>{{"dog", 3}, {"cat", 1}});
  CHECK(dataset::context_frequency({}).empty());
}

TEST_CASE("random corpora keep every label consistent and positives nested") {
  testgen::Gen g(21);
  const toy::ToyEmbedder emb(24, 5);
  for (int round = 0; round < 30; ++round) {
    std::vector<ImageRecord> corpus;
    for (int i = 0, n = static_cast<int>(g.range(1, 6)); i < n; ++i) {
      ImageRecord r{"img" + std::to_string(i), {}, {}};
      for (std::size_t c = 0, m = g.range(1, 3); c < m; ++c) r.human_captions.push_back(text::join(g.words(1, 8)));
      for (std::size_t d = 0, m = g.range(0, 6); d < m; ++d) {
        r.detections.push_back(det(g.word(20), g.uniform(0, 1), g.coin() ? "clip" : "resnet152"));
      }
      corpus.push_back(r);
    }
    BuilderConfig cfg;
    cfg.label_thresholds = {0.4, 0.2, 0.3, 0.2};
    const auto recs = dataset::build_relatedness_dataset(corpus, emb, cfg, 3).records;
    std::map<double, std::set<std::pair<std::string, std::string>>> pos;
    for (const auto& r : recs) {
      CHECK(r.label == dataset::assign_label(r.cosine, r.threshold));
      if (r.label) pos[r.threshold].insert({r.caption, r.context});
    }
    for (const auto& p : pos[0.4]) CHECK(pos[0.3].count(p) == 1);
    for (const auto& p : pos[0.3]) CHECK(pos[0.2].count(p) == 1);

    std::ostringstream a, b;
    write_relatedness(a, recs);
    write_relatedness(b, dataset::build_relatedness_dataset(corpus, emb, cfg, 1).records);
    CHECK(a.str() == b.str());
  }
}
